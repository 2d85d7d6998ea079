#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "proact/domain.hpp"
#include "proact/errors.hpp"

namespace proact {

// Chat-completion client over any OpenAI-compatible endpoint, plus a
// deterministic scripted mock that every offline test runs against.
// Only the non-streaming chat-completions subset is spoken.

struct BackendConfig {
    std::string base_url;  // "https://host[:port]" or "mock:<script-path>"
    std::string api_key;   // may be empty for the mock
    std::string model_name = "gpt-4.1-mini";
    double temperature = 0.0;  // deterministic by default
    int timeout_seconds = 30;
    int max_retries = 2;
};

struct CallOptions {
    std::optional<double> temperature;  // per-call override
    std::string session;                // forwarded as X-Proact-Session
};

/// Exact wire body: {"model", "messages": [{"role","content"}...],
/// "temperature"} — nothing else, in that order.
nlohmann::ordered_json build_request_body(
    const BackendConfig& cfg, const std::vector<ChatMessage>& messages,
    std::optional<double> temperature_override = std::nullopt);

/// Extracts choices[0].message.content; throws ProtocolError on anything
/// else (bad JSON, missing fields, non-string content).
std::string parse_completion_response(const std::string& body);

class ChatClient {
  public:
    virtual ~ChatClient() = default;

    /// One completion. Throws TransportError / ProtocolError / AuthError.
    virtual std::string complete(const std::vector<ChatMessage>& messages,
                                 const CallOptions& options = {}) = 0;

    /// n independent completions (vote sampling). n >= 1 or
    /// std::invalid_argument; errors propagate and partials are discarded.
    std::vector<std::string> complete_n(const std::vector<ChatMessage>& messages,
                                        int n, const CallOptions& options = {});
};

struct MockRule {
    std::string matcher;  // substring of the last user message
    std::string reply;
};

struct MockScript {
    std::vector<MockRule> rules;  // first match wins
    std::string default_reply;

    /// Script file: {"rules": [{"matcher", "reply"}...], "default_reply"}.
    /// Throws std::runtime_error on unreadable or malformed files.
    static MockScript load(const std::string& path);
};

/// Deterministic test double. Replies from the script; appends the
/// bit-exact serialized request body to call_log on every completion.
class MockChatClient : public ChatClient {
  public:
    explicit MockChatClient(MockScript script, BackendConfig cfg = {});

    std::string complete(const std::vector<ChatMessage>& messages,
                         const CallOptions& options = {}) override;

    std::vector<std::string> call_log() const;
    std::size_t call_count() const;

  private:
    MockScript script_;
    BackendConfig cfg_;
    mutable std::mutex mutex_;
    std::vector<std::string> log_;
};

/// Real HTTP client. POSTs {base_url}/v1/chat/completions with bearer auth.
/// Transport failures and 5xx responses are retried up to max_retries with
/// exponential backoff starting at 1s; 401/403 raise AuthError immediately;
/// protocol errors are never retried (they are deterministic).
class HttpChatClient : public ChatClient {
  public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    /// PROACT_API_KEY, when set, overrides cfg.api_key. A custom sleeper
    /// lets tests skip real backoff waits.
    explicit HttpChatClient(BackendConfig cfg, Sleeper sleeper = nullptr);

    std::string complete(const std::vector<ChatMessage>& messages,
                         const CallOptions& options = {}) override;

  private:
    BackendConfig cfg_;
    Sleeper sleeper_;
};

/// Factory keyed on base_url: "mock:<path>" loads a script file ("mock:"
/// alone gives a blank script replying "OK"); anything else is HTTP.
std::unique_ptr<ChatClient> make_client(const BackendConfig& cfg);

}  // namespace proact
