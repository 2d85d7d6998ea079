#include "proact/backend.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "httplib.h"

namespace proact {

nlohmann::ordered_json build_request_body(
    const BackendConfig& cfg, const std::vector<ChatMessage>& messages,
    std::optional<double> temperature_override) {
    nlohmann::ordered_json body;
    body["model"] = cfg.model_name;
    nlohmann::ordered_json rendered = nlohmann::ordered_json::array();
    for (const auto& message : messages) {
        nlohmann::ordered_json m;
        m["role"] = to_string(message.role);
        m["content"] = message.content;
        rendered.push_back(std::move(m));
    }
    body["messages"] = std::move(rendered);
    body["temperature"] =
        temperature_override ? *temperature_override : cfg.temperature;
    return body;
}

std::string parse_completion_response(const std::string& body) {
    nlohmann::json parsed =
        nlohmann::json::parse(body, nullptr, /*allow_exceptions=*/false);
    if (parsed.is_discarded())
        throw ProtocolError("completion response is not valid JSON");
    if (!parsed.contains("choices") || !parsed["choices"].is_array() ||
        parsed["choices"].empty())
        throw ProtocolError("completion response has no choices");
    const auto& first = parsed["choices"][0];
    if (!first.contains("message") || !first["message"].contains("content") ||
        !first["message"]["content"].is_string())
        throw ProtocolError("completion response missing message content");
    return first["message"]["content"].get<std::string>();
}

std::vector<std::string> ChatClient::complete_n(
    const std::vector<ChatMessage>& messages, int n, const CallOptions& options) {
    if (n < 1) throw std::invalid_argument("complete_n requires n >= 1");
    std::vector<std::string> replies;
    replies.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) replies.push_back(complete(messages, options));
    return replies;
}

MockScript MockScript::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open mock script: " + path);
    nlohmann::json parsed =
        nlohmann::json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (parsed.is_discarded() || !parsed.is_object())
        throw std::runtime_error("mock script is not a JSON object: " + path);
    MockScript script;
    if (parsed.contains("default_reply")) {
        if (!parsed["default_reply"].is_string())
            throw std::runtime_error("mock script default_reply must be a string");
        script.default_reply = parsed["default_reply"].get<std::string>();
    }
    if (parsed.contains("rules")) {
        if (!parsed["rules"].is_array())
            throw std::runtime_error("mock script rules must be an array");
        for (const auto& rule : parsed["rules"]) {
            if (!rule.is_object() || !rule.contains("matcher") ||
                !rule.contains("reply") || !rule["matcher"].is_string() ||
                !rule["reply"].is_string())
                throw std::runtime_error(
                    "mock script rule needs string matcher and reply");
            script.rules.push_back({rule["matcher"].get<std::string>(),
                                    rule["reply"].get<std::string>()});
        }
    }
    return script;
}

MockChatClient::MockChatClient(MockScript script, BackendConfig cfg)
    : script_(std::move(script)), cfg_(std::move(cfg)) {}

std::string MockChatClient::complete(const std::vector<ChatMessage>& messages,
                                     const CallOptions& options) {
    nlohmann::ordered_json body =
        build_request_body(cfg_, messages, options.temperature);
    {
        std::lock_guard<std::mutex> lock(mutex_);
        log_.push_back(body.dump());
    }
    std::string last_user;
    for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
        if (it->role == Role::user) {
            last_user = it->content;
            break;
        }
    }
    for (const auto& rule : script_.rules) {
        if (last_user.find(rule.matcher) != std::string::npos) return rule.reply;
    }
    return script_.default_reply;
}

std::vector<std::string> MockChatClient::call_log() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return log_;
}

std::size_t MockChatClient::call_count() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return log_.size();
}

namespace {

struct SplitUrl {
    std::string origin;       // scheme://host[:port]
    std::string path_prefix;  // "" or "/something" (no trailing slash)
};

SplitUrl split_url(const std::string& base_url) {
    std::size_t scheme_end = base_url.find("://");
    std::size_t path_start = scheme_end == std::string::npos
                                 ? base_url.find('/')
                                 : base_url.find('/', scheme_end + 3);
    SplitUrl out;
    if (path_start == std::string::npos) {
        out.origin = base_url;
    } else {
        out.origin = base_url.substr(0, path_start);
        out.path_prefix = base_url.substr(path_start);
    }
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/')
        out.path_prefix.pop_back();
    return out;
}

}  // namespace

HttpChatClient::HttpChatClient(BackendConfig cfg, Sleeper sleeper)
    : cfg_(std::move(cfg)), sleeper_(std::move(sleeper)) {
    if (const char* env_key = std::getenv("PROACT_API_KEY");
        env_key != nullptr && *env_key != '\0')
        cfg_.api_key = env_key;
    if (!sleeper_)
        sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::string HttpChatClient::complete(const std::vector<ChatMessage>& messages,
                                     const CallOptions& options) {
    const std::string body =
        build_request_body(cfg_, messages, options.temperature).dump();
    const SplitUrl url = split_url(cfg_.base_url);
    const std::string path = url.path_prefix + "/v1/chat/completions";

    std::string last_failure = "no attempt made";
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
        if (attempt > 0)
            sleeper_(std::chrono::milliseconds(1000) * (1 << (attempt - 1)));

        // A fresh client per call keeps this object shareable across threads.
        httplib::Client http(url.origin);
        http.set_connection_timeout(cfg_.timeout_seconds, 0);
        http.set_read_timeout(cfg_.timeout_seconds, 0);
        http.set_write_timeout(cfg_.timeout_seconds, 0);

        httplib::Headers headers;
        if (!cfg_.api_key.empty())
            headers.emplace("Authorization", "Bearer " + cfg_.api_key);
        if (!options.session.empty())
            headers.emplace("X-Proact-Session", options.session);

        httplib::Result result = http.Post(path, headers, body, "application/json");
        if (!result) {
            std::ostringstream note;
            note << "transport failure: " << httplib::to_string(result.error());
            last_failure = note.str();
            continue;
        }
        if (result->status == 401 || result->status == 403)
            throw AuthError("endpoint rejected credentials (HTTP " +
                            std::to_string(result->status) + ")");
        if (result->status >= 500 && result->status <= 599) {
            last_failure = "server error HTTP " + std::to_string(result->status);
            continue;
        }
        if (result->status != 200)
            throw ProtocolError("unexpected HTTP status " +
                                std::to_string(result->status));
        return parse_completion_response(result->body);
    }

    std::ostringstream message;
    message << "completion failed after " << (cfg_.max_retries + 1)
            << " attempt(s); last: " << last_failure;
    throw TransportError(message.str());
}

std::unique_ptr<ChatClient> make_client(const BackendConfig& cfg) {
    constexpr std::string_view kMockPrefix = "mock:";
    if (cfg.base_url.rfind(kMockPrefix, 0) == 0) {
        std::string path = cfg.base_url.substr(kMockPrefix.size());
        MockScript script;
        if (path.empty()) {
            script.default_reply = "OK";
        } else {
            script = MockScript::load(path);
        }
        return std::make_unique<MockChatClient>(std::move(script), cfg);
    }
    return std::make_unique<HttpChatClient>(cfg);
}

}  // namespace proact
