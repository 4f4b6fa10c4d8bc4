#ifndef PRIVCHECK_HTTP_PROVIDERS_HPP
#define PRIVCHECK_HTTP_PROVIDERS_HPP

#include <chrono>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "embedding.hpp"
#include "error.hpp"
#include "llm_gateway.hpp"

namespace privcheck {

struct HttpEndpoint {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

inline HttpEndpoint parse_endpoint(std::string_view url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos) throw Error(Errc::InvalidArgument, "endpoint needs a scheme: " + std::string(url));
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") throw Error(Errc::InvalidArgument, "unsupported scheme " + std::string(scheme));
    const auto path_start = url.find('/', scheme_end + 3);
    HttpEndpoint e;
    e.origin = std::string(url.substr(0, path_start));
    e.path = path_start == std::string_view::npos ? "/" : std::string(url.substr(path_start));
    if (e.origin.size() == scheme_end + 3) throw Error(Errc::InvalidArgument, "endpoint has no host: " + std::string(url));
    return e;
}

struct HttpProviderConfig {
    std::string endpoint;
    /// Name of the environment variable holding the bearer token.
    std::string api_key_env = "PRIVCHECK_API_KEY";
    std::chrono::seconds connect_timeout{10};
    std::chrono::seconds read_timeout{300};
};

namespace detail {

struct HttpReply {
    int status = 0;
    std::string body;
};

inline HttpReply post_json(const HttpProviderConfig& cfg, const HttpEndpoint& ep, const std::string& body) {
    httplib::Client client(ep.origin);
    client.set_connection_timeout(cfg.connect_timeout);
    client.set_read_timeout(cfg.read_timeout);
    httplib::Headers headers;
    if (const char* key = std::getenv(cfg.api_key_env.c_str()); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    auto res = client.Post(ep.path, headers, body, "application/json");
    if (!res) throw Error(Errc::Transport, ep.origin + ep.path + ": " + httplib::to_string(res.error()));
    return {res->status, res->body};
}

inline void raise_for_status(const HttpReply& r) {
    if (r.status == 429) throw Error(Errc::RateLimited, r.body);
    if (r.status < 200 || r.status >= 300) throw ProviderError(r.status, r.body);
}

}  // namespace detail

/// Chat-completion over HTTP: POST {model, messages, temperature, top_p},
/// answer read from choices[0].message.content.
class HttpChatProvider final : public ChatProvider {
public:
    explicit HttpChatProvider(HttpProviderConfig cfg) : cfg_(std::move(cfg)), endpoint_(parse_endpoint(cfg_.endpoint)) {}

    ChatResponse complete(const ChatRequest& request) override {
        const auto reply = detail::post_json(cfg_, endpoint_, request.to_json().dump());
        detail::raise_for_status(reply);
        try {
            auto j = nlohmann::json::parse(reply.body);
            ChatResponse r;
            r.content = j.at("choices").at(0).at("message").at("content").get<std::string>();
            r.provider_meta["provider"] = "http";
            if (j.contains("model")) r.provider_meta["model"] = j["model"];
            if (j.contains("usage")) r.provider_meta["usage"] = j["usage"];
            return r;
        } catch (const nlohmann::json::exception&) {
            throw ProviderError(reply.status, reply.body);
        }
    }

private:
    HttpProviderConfig cfg_;
    HttpEndpoint endpoint_;
};

/// Embeddings over HTTP: POST {texts} -> {vectors}.
class HttpEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit HttpEmbeddingProvider(HttpProviderConfig cfg) : cfg_(std::move(cfg)), endpoint_(parse_endpoint(cfg_.endpoint)) {}

    std::vector<Embedding> embed(const std::vector<std::string>& texts) override {
        const auto reply = detail::post_json(cfg_, endpoint_, nlohmann::json{{"texts", texts}}.dump());
        detail::raise_for_status(reply);
        std::vector<Embedding> vectors;
        try {
            vectors = nlohmann::json::parse(reply.body).at("vectors").get<std::vector<Embedding>>();
        } catch (const nlohmann::json::exception&) {
            throw ProviderError(reply.status, reply.body);
        }
        if (vectors.size() != texts.size()) throw Error(Errc::DimensionMismatch, "vector count differs from text count");
        for (const auto& v : vectors) {
            if (v.size() != vectors.front().size()) throw Error(Errc::DimensionMismatch, "ragged embedding response");
        }
        return vectors;
    }

private:
    HttpProviderConfig cfg_;
    HttpEndpoint endpoint_;
};

}  // namespace privcheck

#endif
