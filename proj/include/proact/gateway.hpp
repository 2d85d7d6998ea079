#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "proact/analyzer.hpp"
#include "proact/backend.hpp"
#include "proact/defender.hpp"
#include "proact/domain.hpp"
#include "proact/evaluator.hpp"

// Stage 4: request routing plus the OpenAI-compatible HTTP service. Every
// chat turn runs the analyze-then-respond pipeline: benign requests pass
// through to the target backend untouched; malicious requests receive a
// spurious response (or a refusal / reminded call when the corresponding
// baseline defenses are stacked on).
namespace proact::gateway {

enum class Defense { proact, self_reminder, input_filter };

std::string_view defense_name(Defense d);
std::optional<Defense> defense_from_name(std::string_view name);

/// Parses a comma-separated defense list ("proact,self_reminder"); throws
/// std::invalid_argument on an unknown name. Empty input → empty set.
std::set<Defense> parse_defenses(const std::string& csv);

/// System-prompt wrapping used by the self_reminder defense. The shipped
/// default is the encouraging-tone reminder pair; both strings are
/// config-overridable.
struct SelfReminderConfig {
    std::string system_prefix =
        "You are a responsible language model and good at avoiding generating "
        "harmful or misleading content! Please answer the following user query "
        "in a responsible way.";
    std::string user_suffix =
        "Remember, you are a responsible language model and good at avoiding "
        "generating harmful or misleading content!";

    bool operator==(const SelfReminderConfig&) const = default;
};

struct GatewayConfig {
    std::string listen_addr = "127.0.0.1:8080";
    BackendConfig target_backend;
    BackendConfig agent_backend;
    analyzer::AnalyzerConfig analyzer;
    defender::DefenderConfig defender;
    evaluator::EvaluatorConfig evaluator;
    std::set<Defense> defenses;
    std::int64_t session_ttl = 3600;  // seconds
    SelfReminderConfig self_reminder;
};

/// Applies `overlay` fields onto `base` (missing fields keep base values).
/// Throws std::invalid_argument on unknown enum names or wrong types.
GatewayConfig gateway_config_from_json(const nlohmann::json& overlay,
                                       GatewayConfig base = {});

/// Reads a JSON config file mirroring GatewayConfig field names; throws
/// std::runtime_error naming the path on I/O or parse failure.
GatewayConfig load_gateway_config(const std::string& path);

/// Pipeline or wire failure with the HTTP status it maps to (400 malformed
/// request, 409 session alternation conflict, 500 internal).
class GatewayError : public std::runtime_error {
  public:
    GatewayError(int http_status, const std::string& what)
        : std::runtime_error(what), http_status_(http_status) {}
    int http_status() const { return http_status_; }

  private:
    int http_status_;
};

/// Server-side conversation history keyed by session id, with TTL expiry:
/// a lookup after the TTL behaves as a brand-new session. Thread-safe.
class SessionStore {
  public:
    using Clock = std::function<std::int64_t()>;  // UTC seconds

    explicit SessionStore(std::int64_t ttl_seconds, Clock clock = nullptr);

    /// Current conversation for id; an empty fresh one if absent or expired.
    Conversation get(const std::string& id) const;

    /// Appends one message, enforcing the conversation-shape invariants;
    /// throws GatewayError(409) and leaves the session untouched on
    /// violation. Returns the grown conversation.
    Conversation append(const std::string& id, const ChatMessage& message);

    std::size_t size() const;
    void clear();

  private:
    struct Entry {
        Conversation conversation;
        std::int64_t touched = 0;
    };

    bool expired(const Entry& entry, std::int64_t now) const;

    std::int64_t ttl_;
    Clock clock_;
    mutable std::mutex mutex_;
    std::map<std::string, Entry> entries_;
};

/// Parsed wire request (OpenAI-compatible subset).
struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    std::optional<double> temperature;
    std::string user;  // session hint when no pinning header is present
};

/// Validates the wire body; throws GatewayError(400) on malformed input
/// (bad roles, empty user/system content, missing or empty messages, or a
/// conversation not ending with a user turn).
ChatRequest parse_chat_request(const nlohmann::json& body);

class Gateway {
  public:
    /// Builds backend clients from the config (mock: URLs honored).
    explicit Gateway(GatewayConfig cfg);

    /// Injects prebuilt clients and an optional test clock.
    Gateway(GatewayConfig cfg, std::shared_ptr<ChatClient> target,
            std::shared_ptr<ChatClient> agent, SessionStore::Clock clock = nullptr);

    /// One chat turn. A non-empty session_id pins server-side history: the
    /// request messages are merged onto the stored conversation (resent
    /// prefixes are deduplicated) and the reply is recorded back into it.
    /// Throws GatewayError for wire/session faults; backend errors
    /// propagate as BackendError.
    ChatMessage handle_chat(const std::vector<ChatMessage>& request_messages,
                            const std::string& session_id = "",
                            std::optional<double> temperature = std::nullopt);

    const GatewayConfig& config() const { return cfg_; }
    std::int64_t now() const;
    SessionStore& sessions() { return sessions_; }
    ChatClient& target_client() { return *target_; }
    ChatClient& agent_client() { return *agent_; }

    static constexpr const char* kRefusalText =
        "I'm sorry, but I can't help with that.";
    static constexpr const char* kFallbackTopic = "harmful activity";

  private:
    bool enabled(Defense d) const { return cfg_.defenses.count(d) > 0; }
    Conversation assemble_conversation(
        const std::vector<ChatMessage>& request_messages,
        const std::string& session_id);
    std::vector<ChatMessage> with_self_reminder(
        std::vector<ChatMessage> messages) const;
    ChatMessage call_target(const std::vector<ChatMessage>& messages,
                            const std::string& session_id,
                            std::optional<double> temperature);
    ChatMessage spurious_reply(const IntentVerdict& verdict);
    ChatMessage record_reply(const std::string& session_id, ChatMessage reply);

    GatewayConfig cfg_;
    std::shared_ptr<ChatClient> target_;
    std::shared_ptr<ChatClient> agent_;
    SessionStore sessions_;
    SessionStore::Clock clock_;
};

/// HTTP front end: POST /v1/chat/completions and GET /healthz. Session
/// pinning via the X-Proact-Session header, else the request "user" field.
class GatewayServer {
  public:
    explicit GatewayServer(Gateway& gateway);
    ~GatewayServer();

    /// Binds to an OS-assigned port on `host` and serves on a background
    /// thread; returns the bound port. Intended for tests.
    int start_on_any_port(const std::string& host = "127.0.0.1");

    /// Binds cfg.listen_addr and serves on the calling thread until stop().
    /// Returns false when the address cannot be bound.
    bool serve(const std::string& listen_addr);

    void stop();

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace proact::gateway
