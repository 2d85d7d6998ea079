#include "proact/domain.hpp"

#include <sstream>

namespace proact {

std::string_view to_string(Role role) {
    switch (role) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "user";
}

std::optional<Role> role_from_string(std::string_view s) {
    if (s == "system") return Role::system;
    if (s == "user") return Role::user;
    if (s == "assistant") return Role::assistant;
    return std::nullopt;
}

std::string_view to_string(Intent intent) {
    return intent == Intent::malicious ? "malicious" : "benign";
}

std::optional<Intent> intent_from_string(std::string_view s) {
    if (s == "malicious") return Intent::malicious;
    if (s == "benign") return Intent::benign;
    return std::nullopt;
}

std::string_view strategy_name(Strategy s) {
    switch (s) {
        case Strategy::emoji: return "emoji";
        case Strategy::rot13: return "rot13";
        case Strategy::binary: return "binary";
        case Strategy::base64: return "base64";
        case Strategy::hex: return "hex";
        case Strategy::morse: return "morse";
        case Strategy::free_form: return "free";
    }
    return "free";
}

std::optional<Strategy> strategy_from_name(std::string_view name) {
    if (name == "emoji") return Strategy::emoji;
    if (name == "rot13") return Strategy::rot13;
    if (name == "binary") return Strategy::binary;
    if (name == "base64") return Strategy::base64;
    if (name == "hex") return Strategy::hex;
    if (name == "morse") return Strategy::morse;
    if (name == "free") return Strategy::free_form;
    return std::nullopt;
}

std::string_view to_string(Verdict v) {
    return v == Verdict::safe ? "safe" : "unsafe";
}

std::optional<Verdict> verdict_from_string(std::string_view s) {
    if (s == "safe") return Verdict::safe;
    if (s == "unsafe") return Verdict::unsafe;
    return std::nullopt;
}

std::string_view to_string(JudgeKind k) {
    switch (k) {
        case JudgeKind::surrogate: return "surrogate";
        case JudgeKind::attacker: return "attacker";
        case JudgeKind::ground_truth: return "ground_truth";
    }
    return "surrogate";
}

std::optional<JudgeKind> judge_kind_from_string(std::string_view s) {
    if (s == "surrogate") return JudgeKind::surrogate;
    if (s == "attacker") return JudgeKind::attacker;
    if (s == "ground_truth") return JudgeKind::ground_truth;
    return std::nullopt;
}

std::string_view to_string(AttackOutcome o) {
    return o == AttackOutcome::attacker_success ? "attacker_success"
                                                : "attacker_exhausted";
}

std::optional<AttackOutcome> attack_outcome_from_string(std::string_view s) {
    if (s == "attacker_success") return AttackOutcome::attacker_success;
    if (s == "attacker_exhausted") return AttackOutcome::attacker_exhausted;
    return std::nullopt;
}

std::optional<std::string> validate_conversation(const Conversation& conv) {
    if (conv.messages.empty()) return "empty conversation";

    std::size_t i = 0;
    if (conv.messages[0].role == Role::system) {
        if (conv.messages[0].content.empty()) return "empty system message content";
        i = 1;
    }

    Role expected = Role::user;
    for (; i < conv.messages.size(); ++i) {
        const ChatMessage& m = conv.messages[i];
        if (m.role != expected) return "non-alternating roles";
        if (m.role == Role::user && m.content.empty()) return "empty user message content";
        expected = expected == Role::user ? Role::assistant : Role::user;
    }
    return std::nullopt;
}

int word_count(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string tok;
    int n = 0;
    while (in >> tok) ++n;
    return n;
}

std::string truncate_words(std::string_view text, int max_words) {
    std::istringstream in{std::string(text)};
    std::string tok;
    std::string out;
    int n = 0;
    while (n < max_words && in >> tok) {
        if (n > 0) out += ' ';
        out += tok;
        ++n;
    }
    return out;
}

}  // namespace proact
