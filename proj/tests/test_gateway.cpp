#include <atomic>
#include <cstdlib>
#include <sstream>
#include <thread>

#include <gtest/gtest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <privcheck/http_providers.hpp>

#include "support.hpp"

using namespace privcheck;

namespace {

GatewayConfig fast_retry(std::size_t parallel = 4) {
    GatewayConfig cfg;
    cfg.max_parallel = parallel;
    cfg.retry.initial_backoff = std::chrono::milliseconds(1);
    return cfg;
}

/// Local HTTP server on an ephemeral port for the lifetime of the object.
class LocalServer {
public:
    explicit LocalServer(std::function<void(httplib::Server&)> routes) {
        routes(server_);
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~LocalServer() {
        server_.stop();
        thread_.join();
    }
    std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

std::string completion_body(const std::string& content) {
    return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump();
}

class CountingProvider final : public ChatProvider {
public:
    ChatResponse complete(const ChatRequest&) override {
        const int now = ++in_flight;
        int seen = peak.load();
        while (now > seen && !peak.compare_exchange_weak(seen, now)) {}
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
        --in_flight;
        return {"ok", {}, 0};
    }
    std::atomic<int> in_flight{0};
    std::atomic<int> peak{0};
};

}  // namespace

TEST(Mock, PingPong) {
    ScriptedMockProvider mock({{PromptMatcher::exact("ping"), {"pong"}}});
    Gateway gw(mock);
    EXPECT_EQ(gw.ask("ping").content, "pong");
}

TEST(Mock, FirstMatcherWinsAndUnmatchedThrows) {
    ScriptedMockProvider mock({{PromptMatcher::substring("Q1"), {"first"}}, {PromptMatcher::substring("Q"), {"second"}}});
    Gateway gw(mock);
    EXPECT_EQ(gw.ask("answer Q1 now").content, "first");
    EXPECT_EQ(gw.ask("answer Q2 now").content, "second");
    try {
        gw.ask("nothing");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::UnscriptedPrompt);
    }
}

TEST(Mock, RepliesAdvanceThenRepeat) {
    ScriptedMockProvider mock({{PromptMatcher::substring("x"), {"one", "two"}}});
    EXPECT_EQ(mock.complete(user_request("m", "x")).content, "one");
    EXPECT_EQ(mock.complete(user_request("m", "x")).content, "two");
    EXPECT_EQ(mock.complete(user_request("m", "x")).content, "two");
    EXPECT_EQ(mock.calls(), 3u);
}

TEST(Mock, ScriptFileFormat) {
    std::istringstream in(
        "# comment\n"
        "{\"match\": \"ping\", \"mode\": \"exact\", \"reply\": \"pong\"}\n"
        "{\"match\": [\"a\", \"b\"], \"replies\": [\"r1\", \"r2\"]}\n");
    auto script = parse_mock_script(in);
    ASSERT_EQ(script.size(), 2u);
    EXPECT_EQ(script[0].matcher.mode, PromptMatcher::Mode::Exact);
    EXPECT_TRUE(script[1].matcher.matches("b then a"));
    EXPECT_FALSE(script[1].matcher.matches("only a"));
    std::istringstream bad("{\"match\": 1}\n");
    EXPECT_THROW(parse_mock_script(bad), Error);
}

TEST(Mock, IdenticalSequencesAreIdentical) {
    auto run = [] {
        ScriptedMockProvider mock(load_mock_script_file(testsupport::fixture("annotate.script")));
        Gateway gw(mock);
        std::string all;
        for (const auto& leaf : testsupport::mini_tree().leaves()) all += gw.ask("the regulation " + leaf + ":\n").content;
        return all;
    };
    EXPECT_EQ(run(), run());
}

TEST(ChatRequest, DefaultsAndValidation) {
    auto r = user_request("model-x", "hi");
    const auto j = r.to_json();
    EXPECT_EQ(j["temperature"].get<double>(), 0.0);
    EXPECT_EQ(j["top_p"].get<double>(), 0.95);
    EXPECT_FALSE(j.contains("max_tokens"));
    r.top_p = 0.0;
    EXPECT_THROW(r.validate(), Error);
    r.top_p = 1.0;
    r.temperature = -0.1;
    EXPECT_THROW(r.validate(), Error);
}

TEST(Gateway, RetriesRateLimitThenSucceeds) {
    struct Flaky final : ChatProvider {
        int calls = 0;
        ChatResponse complete(const ChatRequest&) override {
            if (++calls == 1) throw Error(Errc::RateLimited, "slow down");
            return {"fine", {}, 0};
        }
    } flaky;
    testsupport::TempDir dir;
    auto cfg = fast_retry();
    cfg.transcript_path = dir.file("t.jsonl");
    std::string hash;
    {
        Gateway gw(flaky, cfg);
        auto r = gw.ask("hello");
        EXPECT_EQ(r.content, "fine");
        EXPECT_EQ(r.provider_meta["attempts"], 2);
        EXPECT_EQ(gw.attempts(), 2u);
        hash = r.provider_meta["request_hash"];
    }
    std::istringstream log(testsupport::slurp(cfg.transcript_path.value()));
    std::string line;
    std::vector<nlohmann::json> records;
    while (std::getline(log, line)) records.push_back(nlohmann::json::parse(line));
    ASSERT_EQ(records.size(), 2u);
    EXPECT_TRUE(records[0].contains("error"));
    EXPECT_EQ(records[1]["response"], "fine");
    EXPECT_EQ(records[1]["request_hash"], hash);
    EXPECT_EQ(records[1]["prompt"], "hello");
    EXPECT_TRUE(records[1].contains("timestamp"));
}

TEST(Gateway, GivesUpAfterMaxAttempts) {
    struct Always final : ChatProvider {
        int calls = 0;
        ChatResponse complete(const ChatRequest&) override {
            ++calls;
            throw Error(Errc::RateLimited, "no");
        }
    } p;
    Gateway gw(p, fast_retry());
    EXPECT_THROW(gw.ask("x"), Error);
    EXPECT_EQ(p.calls, 3);
}

TEST(Gateway, BoundsInFlightRequests) {
    CountingProvider p;
    Gateway gw(p, fast_retry(2));
    parallel_for(16, 8, [&](std::size_t) { gw.ask("x"); });
    EXPECT_LE(p.peak.load(), 2);
    EXPECT_GE(p.peak.load(), 1);
}

TEST(HttpChat, RateLimitThenOk) {
    std::atomic<int> hits{0};
    nlohmann::json last_body;
    std::string auth;
    LocalServer srv([&](httplib::Server& s) {
        s.Post("/v1/chat", [&](const httplib::Request& req, httplib::Response& res) {
            last_body = nlohmann::json::parse(req.body);
            auth = req.get_header_value("Authorization");
            if (++hits == 1) {
                res.status = 429;
                res.set_content("{\"error\":\"rate\"}", "application/json");
                return;
            }
            res.set_content(completion_body("Choice: B"), "application/json");
        });
    });
    ::setenv("PRIVCHECK_TEST_KEY", "sekret", 1);
    HttpProviderConfig cfg{srv.url("/v1/chat")};
    cfg.api_key_env = "PRIVCHECK_TEST_KEY";
    HttpChatProvider provider(cfg);
    Gateway gw(provider, fast_retry());
    auto r = gw.ask("judge this");
    EXPECT_EQ(r.content, "Choice: B");
    EXPECT_EQ(hits.load(), 2);
    EXPECT_EQ(r.provider_meta["attempts"], 2);
    EXPECT_EQ(last_body["temperature"].get<double>(), 0.0);
    EXPECT_EQ(last_body["top_p"].get<double>(), 0.95);
    EXPECT_EQ(last_body["model"], GatewayConfig{}.model);
    EXPECT_EQ(last_body["messages"][0]["content"], "judge this");
    EXPECT_EQ(auth, "Bearer sekret");
}

TEST(HttpChat, ServerErrorIsProviderError) {
    LocalServer srv([](httplib::Server& s) {
        s.Post("/c", [](const httplib::Request&, httplib::Response& res) {
            res.status = 503;
            res.set_content("down", "text/plain");
        });
    });
    HttpChatProvider provider(HttpProviderConfig{srv.url("/c")});
    Gateway gw(provider, fast_retry());
    try {
        gw.ask("x");
        FAIL();
    } catch (const ProviderError& e) {
        EXPECT_EQ(e.status(), 503);
        EXPECT_EQ(e.body(), "down");
    }
}

TEST(HttpChat, UnreachableEndpointIsTransport) {
    // Bind an ephemeral port without listening, then release it so connects are refused.
    int port = 0;
    {
        const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
        ASSERT_GE(fd, 0);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        ASSERT_EQ(::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr), 0);
        socklen_t len = sizeof addr;
        ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
        port = ntohs(addr.sin_port);
        ::close(fd);
    }
    HttpProviderConfig cfg{"http://127.0.0.1:" + std::to_string(port) + "/v1"};
    cfg.connect_timeout = std::chrono::seconds(2);
    cfg.read_timeout = std::chrono::seconds(2);
    HttpChatProvider provider(cfg);
    Gateway gw(provider, fast_retry());
    try {
        gw.ask("x");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::Transport);
    }
}

TEST(HttpEmbedding, RoundTrip) {
    LocalServer srv([](httplib::Server& s) {
        s.Post("/embed", [](const httplib::Request& req, httplib::Response& res) {
            auto texts = nlohmann::json::parse(req.body).at("texts");
            nlohmann::json vectors = nlohmann::json::array();
            for (const auto& t : texts) vectors.push_back({static_cast<double>(t.get<std::string>().size()), 1.0});
            res.set_content(nlohmann::json{{"vectors", vectors}}.dump(), "application/json");
        });
    });
    HttpEmbeddingProvider p(HttpProviderConfig{srv.url("/embed")});
    auto v = p.embed({"ab", "abcd"});
    ASSERT_EQ(v.size(), 2u);
    EXPECT_EQ(v[1], (Embedding{4.0, 1.0}));
}

TEST(Endpoint, Parsing) {
    auto e = parse_endpoint("https://api.example.com/v1/chat/completions");
    EXPECT_EQ(e.origin, "https://api.example.com");
    EXPECT_EQ(e.path, "/v1/chat/completions");
    EXPECT_EQ(parse_endpoint("http://localhost:8080").path, "/");
    EXPECT_THROW(parse_endpoint("localhost/x"), Error);
}

TEST(Embedding, CosineEdgeCases) {
    const Embedding v{1.0, 2.0, 3.0};
    const Embedding neg{-1.0, -2.0, -3.0};
    EXPECT_NEAR(cosine(v, v), 1.0, 1e-12);
    EXPECT_NEAR(cosine(v, neg), -1.0, 1e-12);
    EXPECT_NEAR(cosine(Embedding{1, 0}, Embedding{0, 1}), 0.0, 1e-12);
    try {
        cosine(v, Embedding{1.0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::DimensionMismatch);
    }
    try {
        cosine(v, Embedding{0, 0, 0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::ZeroVector);
    }
}

TEST(Embedding, HashedBagIsNormalizedAndDeterministic) {
    HashedBagEmbedder a, b;
    auto va = a.embed_one("covered entity covered");
    EXPECT_EQ(va, b.embed_one("covered entity covered"));
    double n = 0;
    for (double x : va) n += x * x;
    EXPECT_NEAR(n, 1.0, 1e-12);
    EXPECT_EQ(va.size(), 64u);
    HashedBagEmbedder other(64, 1);
    EXPECT_EQ(a.embed_one("").size(), 64u);
    (void)other;
}
