#ifndef PRIVCHECK_LLM_GATEWAY_HPP
#define PRIVCHECK_LLM_GATEWAY_HPP

#include <chrono>
#include <ctime>
#include <fstream>
#include <functional>
#include <istream>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "text.hpp"

namespace privcheck {

enum class Role { System, User, Assistant };

inline std::string_view to_string(Role r) {
    switch (r) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
    }
    return "";
}

struct ChatMessage {
    Role role = Role::User;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    double top_p = 0.95;
    std::optional<int> max_tokens;

    void validate() const {
        if (temperature < 0.0) throw Error(Errc::InvalidArgument, "temperature must be >= 0");
        if (!(top_p > 0.0 && top_p <= 1.0)) throw Error(Errc::InvalidArgument, "top_p must be in (0, 1]");
        if (max_tokens && *max_tokens <= 0) throw Error(Errc::InvalidArgument, "max_tokens must be positive");
        if (messages.empty()) throw Error(Errc::InvalidArgument, "request has no messages");
    }

    /// Content of the final user message, or empty.
    const std::string& last_user_message() const {
        static const std::string empty;
        for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
            if (it->role == Role::User) return it->content;
        }
        return empty;
    }

    /// Wire body for chat-completion endpoints.
    nlohmann::ordered_json to_json() const {
        auto msgs = nlohmann::ordered_json::array();
        for (const auto& m : messages) msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
        nlohmann::ordered_json j{{"model", model}, {"messages", msgs}, {"temperature", temperature}, {"top_p", top_p}};
        if (max_tokens) j["max_tokens"] = *max_tokens;
        return j;
    }

    std::string hash() const { return text::hex64(text::fnv1a64(to_json().dump())); }
};

inline ChatRequest user_request(std::string model, std::string prompt) {
    ChatRequest r;
    r.model = std::move(model);
    r.messages.push_back({Role::User, std::move(prompt)});
    return r;
}

struct ChatResponse {
    std::string content;
    nlohmann::ordered_json provider_meta = nlohmann::ordered_json::object();
    std::int64_t latency_ms = 0;
};

/// One completion per call. Implementations must tolerate concurrent calls.
class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
};

// ---------------------------------------------------------------------------
// Scripted mock
// ---------------------------------------------------------------------------

struct PromptMatcher {
    enum class Mode { Exact, Substring };
    Mode mode = Mode::Substring;
    std::vector<std::string> needles;  // substring mode: all must occur

    bool matches(std::string_view prompt) const {
        if (mode == Mode::Exact) return !needles.empty() && prompt == needles.front();
        for (const auto& n : needles) {
            if (prompt.find(n) == std::string_view::npos) return false;
        }
        return true;
    }

    static PromptMatcher exact(std::string s) { return {Mode::Exact, {std::move(s)}}; }
    static PromptMatcher substring(std::string s) { return {Mode::Substring, {std::move(s)}}; }
    static PromptMatcher all_of(std::vector<std::string> s) { return {Mode::Substring, std::move(s)}; }
};

struct ScriptEntry {
    PromptMatcher matcher;
    /// Successive matches return successive replies; the last one repeats.
    std::vector<std::string> replies;
};

/// Replies with the first entry whose matcher accepts the last user message.
class ScriptedMockProvider final : public ChatProvider {
public:
    explicit ScriptedMockProvider(std::vector<ScriptEntry> script) : script_(std::move(script)), uses_(script_.size(), 0) {
        for (const auto& e : script_) {
            if (e.replies.empty()) throw Error(Errc::InvalidArgument, "script entry without replies");
        }
    }

    ChatResponse complete(const ChatRequest& request) override {
        const auto& prompt = request.last_user_message();
        std::lock_guard lock(mutex_);
        ++calls_;
        for (std::size_t i = 0; i < script_.size(); ++i) {
            if (!script_[i].matcher.matches(prompt)) continue;
            const auto& replies = script_[i].replies;
            const auto idx = std::min(uses_[i]++, replies.size() - 1);
            ChatResponse r;
            r.content = replies[idx];
            r.provider_meta["provider"] = "mock";
            r.provider_meta["script_entry"] = i;
            return r;
        }
        throw Error(Errc::UnscriptedPrompt, text::utf8_truncate(prompt, 160));
    }

    std::size_t calls() const {
        std::lock_guard lock(mutex_);
        return calls_;
    }

private:
    std::vector<ScriptEntry> script_;
    std::vector<std::size_t> uses_;
    std::size_t calls_ = 0;
    mutable std::mutex mutex_;
};

/// Line-delimited script records:
///   {"match": "text" | ["a", "b"], "mode": "substring" | "exact", "reply": "..."}
/// `replies` (an array) may stand in for `reply`.
inline std::vector<ScriptEntry> parse_mock_script(std::istream& in) {
    std::vector<ScriptEntry> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto t = text::trim(line);
        if (t.empty() || t.front() == '#') continue;
        try {
            auto j = nlohmann::json::parse(t);
            ScriptEntry e;
            const auto mode = j.value("mode", std::string("substring"));
            if (mode == "exact") {
                e.matcher.mode = PromptMatcher::Mode::Exact;
            } else if (mode != "substring") {
                throw Error(Errc::MalformedRecord, "mock script line " + std::to_string(lineno) + ": bad mode");
            }
            const auto& m = j.at("match");
            if (m.is_array()) {
                e.matcher.needles = m.get<std::vector<std::string>>();
            } else {
                e.matcher.needles.push_back(m.get<std::string>());
            }
            if (j.contains("replies")) {
                e.replies = j.at("replies").get<std::vector<std::string>>();
            } else {
                e.replies.push_back(j.at("reply").get<std::string>());
            }
            if (e.replies.empty()) throw Error(Errc::MalformedRecord, "mock script line " + std::to_string(lineno) + ": no reply");
            out.push_back(std::move(e));
        } catch (const nlohmann::json::exception& ex) {
            throw Error(Errc::MalformedRecord, "mock script line " + std::to_string(lineno) + ": " + ex.what());
        }
    }
    return out;
}

inline std::vector<ScriptEntry> load_mock_script_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::Io, "cannot open " + path);
    return parse_mock_script(in);
}

// ---------------------------------------------------------------------------
// Gateway
// ---------------------------------------------------------------------------

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{500};
    double multiplier = 2.0;
};

struct GatewayConfig {
    std::string model = "gpt-4-turbo-2024-04-09";
    std::size_t max_parallel = 4;
    RetryPolicy retry;
    std::optional<std::string> transcript_path;
};

/// Front door for every completion. Caps in-flight requests and retries
/// rate-limited calls with backoff; each attempt goes to the transcript if set.
class Gateway {
public:
    static constexpr std::ptrdiff_t kMaxParallelCap = 256;

    Gateway(ChatProvider& provider, GatewayConfig config = {})
        : provider_(provider), config_(std::move(config)), slots_(clamp_parallel(config_.max_parallel)) {
        if (config_.retry.max_attempts < 1) throw Error(Errc::InvalidArgument, "max_attempts must be >= 1");
        if (config_.transcript_path) {
            transcript_.open(*config_.transcript_path, std::ios::app);
            if (!transcript_) throw Error(Errc::Io, "cannot open transcript " + *config_.transcript_path);
        }
    }

    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    const GatewayConfig& config() const { return config_; }

    ChatRequest request_for(std::string prompt) const { return user_request(config_.model, std::move(prompt)); }

    ChatResponse chat(const ChatRequest& request) {
        request.validate();
        const auto key = request.hash();
        slots_.acquire();
        struct Release {
            std::counting_semaphore<kMaxParallelCap>& s;
            ~Release() { s.release(); }
        } release{slots_};

        auto backoff = config_.retry.initial_backoff;
        for (int attempt = 1;; ++attempt) {
            const auto start = std::chrono::steady_clock::now();
            try {
                auto response = provider_.complete(request);
                response.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                          std::chrono::steady_clock::now() - start).count();
                response.provider_meta["request_hash"] = key;
                response.provider_meta["attempts"] = attempt;
                log(key, request, response.content, attempt, std::nullopt);
                return response;
            } catch (const Error& e) {
                log(key, request, "", attempt, std::string(e.what()));
                if (e.code() != Errc::RateLimited || attempt >= config_.retry.max_attempts) throw;
            }
            std::this_thread::sleep_for(backoff);
            backoff = std::chrono::milliseconds(static_cast<std::int64_t>(backoff.count() * config_.retry.multiplier));
        }
    }

    ChatResponse ask(std::string prompt) { return chat(request_for(std::move(prompt))); }

    /// Total attempts made, successful or not.
    std::size_t attempts() const {
        std::lock_guard lock(log_mutex_);
        return attempts_;
    }

private:
    static std::ptrdiff_t clamp_parallel(std::size_t n) {
        if (n == 0) throw Error(Errc::InvalidArgument, "max_parallel must be >= 1");
        return static_cast<std::ptrdiff_t>(std::min<std::size_t>(n, kMaxParallelCap));
    }

    void log(const std::string& key, const ChatRequest& request, const std::string& response, int attempt,
             const std::optional<std::string>& error) {
        std::lock_guard lock(log_mutex_);
        ++attempts_;
        if (!transcript_.is_open()) return;
        nlohmann::ordered_json rec{{"request_hash", key},
                                   {"prompt", request.last_user_message()},
                                   {"response", response},
                                   {"timestamp", timestamp()},
                                   {"attempt", attempt}};
        if (error) rec["error"] = *error;
        transcript_ << rec.dump() << '\n';
        transcript_.flush();
    }

    static std::string timestamp() {
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm tm{};
        gmtime_r(&now, &tm);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
        return buf;
    }

    ChatProvider& provider_;
    GatewayConfig config_;
    std::counting_semaphore<kMaxParallelCap> slots_;
    mutable std::mutex log_mutex_;
    std::ofstream transcript_;
    std::size_t attempts_ = 0;
};

}  // namespace privcheck

#endif
