#include "proact/gateway.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <thread>
#include <utility>

#include "httplib.h"
#include "proact/errors.hpp"
#include "proact/log.hpp"

namespace proact::gateway {

namespace {

std::int64_t system_now() {
    return static_cast<std::int64_t>(
        std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count());
}

const nlohmann::json* field(const nlohmann::json& j, const char* key) {
    const auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

std::string as_string(const nlohmann::json& j, const std::string& where) {
    if (!j.is_string())
        throw std::invalid_argument(where + " must be a string");
    return j.get<std::string>();
}

int as_int(const nlohmann::json& j, const std::string& where) {
    if (!j.is_number_integer())
        throw std::invalid_argument(where + " must be an integer");
    return j.get<int>();
}

double as_double(const nlohmann::json& j, const std::string& where) {
    if (!j.is_number())
        throw std::invalid_argument(where + " must be a number");
    return j.get<double>();
}

bool as_bool(const nlohmann::json& j, const std::string& where) {
    if (!j.is_boolean())
        throw std::invalid_argument(where + " must be a boolean");
    return j.get<bool>();
}

void expect_object(const nlohmann::json& j, const std::string& where) {
    if (!j.is_object())
        throw std::invalid_argument(where + " must be a JSON object");
}

void apply_backend(const nlohmann::json& j, BackendConfig& out,
                   const std::string& where) {
    expect_object(j, where);
    if (const auto* v = field(j, "base_url"))
        out.base_url = as_string(*v, where + ".base_url");
    if (const auto* v = field(j, "api_key"))
        out.api_key = as_string(*v, where + ".api_key");
    if (const auto* v = field(j, "model_name"))
        out.model_name = as_string(*v, where + ".model_name");
    if (const auto* v = field(j, "temperature"))
        out.temperature = as_double(*v, where + ".temperature");
    if (const auto* v = field(j, "timeout_seconds"))
        out.timeout_seconds = as_int(*v, where + ".timeout_seconds");
    if (const auto* v = field(j, "max_retries"))
        out.max_retries = as_int(*v, where + ".max_retries");
}

void apply_analyzer(const nlohmann::json& j, analyzer::AnalyzerConfig& out) {
    expect_object(j, "analyzer");
    if (const auto* v = field(j, "votes_per_round"))
        out.votes_per_round = as_int(*v, "analyzer.votes_per_round");
    if (const auto* v = field(j, "max_rounds"))
        out.max_rounds = as_int(*v, "analyzer.max_rounds");
    if (const auto* v = field(j, "fail_safe_verdict")) {
        const auto intent = intent_from_string(as_string(*v, "analyzer.fail_safe_verdict"));
        if (!intent)
            throw std::invalid_argument("analyzer.fail_safe_verdict must be "
                                        "\"malicious\" or \"benign\"");
        out.fail_safe_verdict = *intent;
    }
}

void apply_defender(const nlohmann::json& j, defender::DefenderConfig& out) {
    expect_object(j, "defender");
    if (const auto* v = field(j, "max_attempts"))
        out.max_attempts = as_int(*v, "defender.max_attempts");
    if (const auto* v = field(j, "strategy_restriction")) {
        if (v->is_null()) {
            out.strategy_restriction.reset();
        } else {
            const auto strategy =
                strategy_from_name(as_string(*v, "defender.strategy_restriction"));
            if (!strategy || *strategy == Strategy::free_form)
                throw std::invalid_argument(
                    "defender.strategy_restriction must name an encoding strategy");
            out.strategy_restriction = *strategy;
        }
    }
    if (const auto* v = field(j, "payload_text"))
        out.payload_text = as_string(*v, "defender.payload_text");
    if (const auto* v = field(j, "defender_temperature"))
        out.defender_temperature = as_double(*v, "defender.defender_temperature");
}

void apply_evaluator(const nlohmann::json& j, evaluator::EvaluatorConfig& out) {
    expect_object(j, "evaluator");
    if (const auto* v = field(j, "votes")) out.votes = as_int(*v, "evaluator.votes");
    if (const auto* v = field(j, "judge_kind")) {
        const auto kind = judge_kind_from_string(as_string(*v, "evaluator.judge_kind"));
        if (!kind)
            throw std::invalid_argument("evaluator.judge_kind must be "
                                        "\"surrogate\", \"attacker\" or \"ground_truth\"");
        out.judge_kind = *kind;
    }
    if (const auto* v = field(j, "rule_based"))
        out.rule_based = as_bool(*v, "evaluator.rule_based");
}

void apply_self_reminder(const nlohmann::json& j, SelfReminderConfig& out) {
    expect_object(j, "self_reminder");
    if (const auto* v = field(j, "system_prefix"))
        out.system_prefix = as_string(*v, "self_reminder.system_prefix");
    if (const auto* v = field(j, "user_suffix"))
        out.user_suffix = as_string(*v, "self_reminder.user_suffix");
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t");
    if (begin == std::string::npos) return {};
    const auto end = s.find_last_not_of(" \t");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

std::string_view defense_name(Defense d) {
    switch (d) {
        case Defense::proact: return "proact";
        case Defense::self_reminder: return "self_reminder";
        case Defense::input_filter: return "input_filter";
    }
    return "proact";
}

std::optional<Defense> defense_from_name(std::string_view name) {
    if (name == "proact") return Defense::proact;
    if (name == "self_reminder") return Defense::self_reminder;
    if (name == "input_filter") return Defense::input_filter;
    return std::nullopt;
}

std::set<Defense> parse_defenses(const std::string& csv) {
    std::set<Defense> defenses;
    std::size_t start = 0;
    while (start <= csv.size()) {
        const auto comma = csv.find(',', start);
        const auto end = comma == std::string::npos ? csv.size() : comma;
        const std::string token = trim(csv.substr(start, end - start));
        if (!token.empty()) {
            const auto defense = defense_from_name(token);
            if (!defense)
                throw std::invalid_argument("unknown defense: " + token);
            defenses.insert(*defense);
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return defenses;
}

GatewayConfig gateway_config_from_json(const nlohmann::json& overlay,
                                       GatewayConfig base) {
    expect_object(overlay, "gateway config");
    if (const auto* v = field(overlay, "listen_addr"))
        base.listen_addr = as_string(*v, "listen_addr");
    if (const auto* v = field(overlay, "target_backend"))
        apply_backend(*v, base.target_backend, "target_backend");
    if (const auto* v = field(overlay, "agent_backend"))
        apply_backend(*v, base.agent_backend, "agent_backend");
    if (const auto* v = field(overlay, "analyzer")) apply_analyzer(*v, base.analyzer);
    if (const auto* v = field(overlay, "defender")) apply_defender(*v, base.defender);
    if (const auto* v = field(overlay, "evaluator"))
        apply_evaluator(*v, base.evaluator);
    if (const auto* v = field(overlay, "defenses")) {
        if (!v->is_array())
            throw std::invalid_argument("defenses must be an array of names");
        std::set<Defense> defenses;
        for (const auto& name : *v) {
            const auto defense = defense_from_name(as_string(name, "defenses entry"));
            if (!defense)
                throw std::invalid_argument("unknown defense: " +
                                            name.get<std::string>());
            defenses.insert(*defense);
        }
        base.defenses = std::move(defenses);
    }
    if (const auto* v = field(overlay, "session_ttl"))
        base.session_ttl = as_int(*v, "session_ttl");
    if (const auto* v = field(overlay, "self_reminder"))
        apply_self_reminder(*v, base.self_reminder);
    return base;
}

GatewayConfig load_gateway_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read gateway config: " + path);
    nlohmann::json overlay;
    try {
        overlay = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("invalid JSON in gateway config " + path + ": " +
                                 e.what());
    }
    try {
        return gateway_config_from_json(overlay);
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error("invalid gateway config " + path + ": " + e.what());
    }
}

SessionStore::SessionStore(std::int64_t ttl_seconds, Clock clock)
    : ttl_(ttl_seconds), clock_(std::move(clock)) {
    if (!clock_) clock_ = system_now;
}

bool SessionStore::expired(const Entry& entry, std::int64_t now) const {
    return ttl_ > 0 && now - entry.touched >= ttl_;
}

Conversation SessionStore::get(const std::string& id) const {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto now = clock_();
    const auto it = entries_.find(id);
    if (it != entries_.end() && !expired(it->second, now))
        return it->second.conversation;
    Conversation fresh;
    fresh.id = id;
    fresh.created_at = now;
    return fresh;
}

Conversation SessionStore::append(const std::string& id, const ChatMessage& message) {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto now = clock_();
    const auto it = entries_.find(id);
    Conversation grown;
    if (it != entries_.end() && !expired(it->second, now)) {
        grown = it->second.conversation;
    } else {
        grown.id = id;
        grown.created_at = now;
    }
    grown.messages.push_back(message);
    if (const auto violation = validate_conversation(grown))
        throw GatewayError(409, "session " + id + ": " + *violation);
    auto& entry = entries_[id];
    entry.conversation = std::move(grown);
    entry.touched = now;
    return entry.conversation;
}

std::size_t SessionStore::size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return entries_.size();
}

void SessionStore::clear() {
    std::lock_guard<std::mutex> lock(mutex_);
    entries_.clear();
}

ChatRequest parse_chat_request(const nlohmann::json& body) {
    if (!body.is_object())
        throw GatewayError(400, "request body must be a JSON object");
    ChatRequest request;
    if (const auto* v = field(body, "model")) {
        if (!v->is_string()) throw GatewayError(400, "model must be a string");
        request.model = v->get<std::string>();
    }
    const auto* messages = field(body, "messages");
    if (messages == nullptr || !messages->is_array() || messages->empty())
        throw GatewayError(400, "messages must be a non-empty array");
    for (const auto& m : *messages) {
        if (!m.is_object())
            throw GatewayError(400, "each message must be a JSON object");
        const auto* role = field(m, "role");
        const auto* content = field(m, "content");
        if (role == nullptr || !role->is_string() || content == nullptr ||
            !content->is_string())
            throw GatewayError(400, "each message needs string role and content");
        const auto parsed_role = role_from_string(role->get<std::string>());
        if (!parsed_role)
            throw GatewayError(400,
                               "unknown message role: " + role->get<std::string>());
        request.messages.push_back({*parsed_role, content->get<std::string>()});
    }
    if (request.messages.back().role != Role::user)
        throw GatewayError(400, "conversation must end with a user message");
    if (const auto* v = field(body, "temperature")) {
        if (!v->is_number())
            throw GatewayError(400, "temperature must be a number");
        request.temperature = v->get<double>();
    }
    if (const auto* v = field(body, "user")) {
        if (!v->is_string()) throw GatewayError(400, "user must be a string");
        request.user = v->get<std::string>();
    }
    return request;
}

Gateway::Gateway(GatewayConfig cfg)
    : Gateway(std::move(cfg), nullptr, nullptr, nullptr) {}

Gateway::Gateway(GatewayConfig cfg, std::shared_ptr<ChatClient> target,
                 std::shared_ptr<ChatClient> agent, SessionStore::Clock clock)
    : cfg_(std::move(cfg)),
      target_(target ? std::move(target)
                     : std::shared_ptr<ChatClient>(make_client(cfg_.target_backend))),
      agent_(agent ? std::move(agent)
                   : std::shared_ptr<ChatClient>(make_client(cfg_.agent_backend))),
      sessions_(cfg_.session_ttl, clock),
      clock_(clock ? std::move(clock) : SessionStore::Clock(system_now)) {}

std::int64_t Gateway::now() const { return clock_(); }

Conversation Gateway::assemble_conversation(
    const std::vector<ChatMessage>& request_messages, const std::string& session_id) {
    if (session_id.empty()) {
        Conversation conv;
        conv.created_at = clock_();
        conv.messages = request_messages;
        if (const auto violation = validate_conversation(conv))
            throw GatewayError(400, "malformed conversation: " + *violation);
        return conv;
    }
    Conversation grown = sessions_.get(session_id);
    // Clients that resend full history are deduplicated against the stored
    // prefix; clients that send only new turns append directly.
    std::size_t offset = 0;
    if (!grown.messages.empty() &&
        request_messages.size() >= grown.messages.size() &&
        std::equal(grown.messages.begin(), grown.messages.end(),
                   request_messages.begin()))
        offset = grown.messages.size();
    for (std::size_t i = offset; i < request_messages.size(); ++i)
        grown = sessions_.append(session_id, request_messages[i]);
    return grown;
}

std::vector<ChatMessage> Gateway::with_self_reminder(
    std::vector<ChatMessage> messages) const {
    const auto& reminder = cfg_.self_reminder;
    if (!messages.empty() && messages.front().role == Role::system)
        messages.front().content =
            reminder.system_prefix + "\n" + messages.front().content;
    else
        messages.insert(messages.begin(), {Role::system, reminder.system_prefix});
    for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
        if (it->role == Role::user) {
            it->content += "\n" + reminder.user_suffix;
            break;
        }
    }
    return messages;
}

ChatMessage Gateway::call_target(const std::vector<ChatMessage>& messages,
                                 const std::string& session_id,
                                 std::optional<double> temperature) {
    const std::vector<ChatMessage> outbound =
        enabled(Defense::self_reminder) ? with_self_reminder(messages) : messages;
    CallOptions options;
    options.temperature = temperature;
    options.session = session_id;
    return {Role::assistant, target_->complete(outbound, options)};
}

ChatMessage Gateway::spurious_reply(const IntentVerdict& verdict) {
    const std::string topic = verdict.topic.empty() ? kFallbackTopic : verdict.topic;
    const auto evaluate = [this](const std::string& t, const std::string& response) {
        return evaluator::judge(cfg_.evaluator, agent_.get(), t, response);
    };
    const auto result = defender::defend(cfg_.defender, *agent_, evaluate, topic);
    nlohmann::json log_fields;
    log_fields["attempts"] = result.attempts.size();
    log_fields["bypassed"] = result.bypassed;
    log_fields["strategy"] = std::string(strategy_name(result.final.strategy));
    logging::emit(logging::Level::info, "spurious_response", log_fields);
    return {Role::assistant, result.final.response_text};
}

ChatMessage Gateway::record_reply(const std::string& session_id, ChatMessage reply) {
    if (!session_id.empty()) sessions_.append(session_id, reply);
    return reply;
}

ChatMessage Gateway::handle_chat(const std::vector<ChatMessage>& request_messages,
                                 const std::string& session_id,
                                 std::optional<double> temperature) {
    if (request_messages.empty())
        throw GatewayError(400, "messages must be a non-empty array");
    const Conversation conv = assemble_conversation(request_messages, session_id);

    // The analyzer runs at most once per turn; input_filter and proact share
    // its verdict.
    std::optional<IntentVerdict> verdict;
    const auto analyzed = [&]() -> const IntentVerdict& {
        if (!verdict) verdict = analyzer::classify(cfg_.analyzer, *agent_, conv);
        return *verdict;
    };

    if (enabled(Defense::input_filter) && analyzed().intent == Intent::malicious)
        return record_reply(session_id, {Role::assistant, kRefusalText});

    if (enabled(Defense::proact) && analyzed().intent == Intent::malicious)
        return record_reply(session_id, spurious_reply(analyzed()));

    return record_reply(session_id,
                        call_target(conv.messages, session_id, temperature));
}

struct GatewayServer::Impl {
    Gateway& gateway;
    httplib::Server server;
    std::thread thread;
    std::atomic<std::uint64_t> next_id{1};

    explicit Impl(Gateway& gw) : gateway(gw) {
        server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
            res.set_content("{\"status\":\"ok\"}", "application/json");
        });
        server.Post("/v1/chat/completions",
                    [this](const httplib::Request& req, httplib::Response& res) {
                        handle_completions(req, res);
                    });
    }

    static void error_response(httplib::Response& res, int status,
                               const char* type, const std::string& message) {
        nlohmann::ordered_json out;
        out["error"]["message"] = message;
        out["error"]["type"] = type;
        out["error"]["code"] = status;
        res.status = status;
        res.set_content(out.dump(), "application/json");
    }

    void handle_completions(const httplib::Request& req, httplib::Response& res) {
        nlohmann::json body;
        try {
            body = nlohmann::json::parse(req.body);
        } catch (const nlohmann::json::parse_error& e) {
            error_response(res, 400, "invalid_request_error",
                           std::string("invalid JSON body: ") + e.what());
            return;
        }
        try {
            const ChatRequest request = parse_chat_request(body);
            std::string session = req.get_header_value("X-Proact-Session");
            if (session.empty()) session = request.user;
            const ChatMessage reply =
                gateway.handle_chat(request.messages, session, request.temperature);

            nlohmann::ordered_json out;
            out["id"] = "chatcmpl-" + std::to_string(next_id.fetch_add(1));
            out["object"] = "chat.completion";
            out["created"] = gateway.now();
            out["model"] = request.model.empty()
                               ? gateway.config().target_backend.model_name
                               : request.model;
            nlohmann::ordered_json choice;
            choice["index"] = 0;
            choice["message"]["role"] = "assistant";
            choice["message"]["content"] = reply.content;
            choice["finish_reason"] = "stop";
            out["choices"] = nlohmann::ordered_json::array({choice});
            res.set_content(out.dump(), "application/json");
        } catch (const GatewayError& e) {
            const char* type = e.http_status() == 409  ? "session_conflict"
                               : e.http_status() == 400 ? "invalid_request_error"
                                                        : "internal_error";
            error_response(res, e.http_status(), type, e.what());
        } catch (const BackendError& e) {
            error_response(res, 502, "upstream_error", e.what());
        } catch (const std::exception& e) {
            error_response(res, 500, "internal_error", e.what());
        }
    }
};

GatewayServer::GatewayServer(Gateway& gateway)
    : impl_(std::make_unique<Impl>(gateway)) {}

GatewayServer::~GatewayServer() { stop(); }

int GatewayServer::start_on_any_port(const std::string& host) {
    const int port = impl_->server.bind_to_any_port(host.c_str());
    if (port <= 0)
        throw std::runtime_error("cannot bind gateway server on " + host);
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port;
}

bool GatewayServer::serve(const std::string& listen_addr) {
    const auto colon = listen_addr.rfind(':');
    if (colon == std::string::npos)
        throw std::invalid_argument("listen_addr must be host:port");
    const std::string host = listen_addr.substr(0, colon);
    const int port = std::stoi(listen_addr.substr(colon + 1));
    return impl_->server.listen(host.c_str(), port);
}

void GatewayServer::stop() {
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace proact::gateway
