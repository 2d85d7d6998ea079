#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Shared vocabulary types for the gateway, the agents and the red-team
// harness. Plain value types, no I/O.

namespace proact {

enum class Role { system, user, assistant };

std::string_view to_string(Role role);
std::optional<Role> role_from_string(std::string_view s);

struct ChatMessage {
    Role role = Role::user;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

struct Conversation {
    std::string id;
    std::vector<ChatMessage> messages;
    std::int64_t created_at = 0;  // UTC seconds

    bool operator==(const Conversation&) const = default;
};

/// Checks the conversation shape: optional leading system message, then
/// strictly alternating user/assistant turns starting with user; user and
/// system contents non-empty. Returns the first violated invariant, or
/// nullopt when the conversation is well formed.
std::optional<std::string> validate_conversation(const Conversation& conv);

enum class Intent { malicious, benign };

std::string_view to_string(Intent intent);
std::optional<Intent> intent_from_string(std::string_view s);

struct IntentVerdict {
    Intent intent = Intent::benign;
    std::string topic;
    std::string reasoning;
    int votes_malicious = 0;
    int votes_benign = 0;
    int rounds_used = 1;

    bool operator==(const IntentVerdict&) const = default;
};

// Encoding strategies for spurious responses, in catalog order. free_form
// marks a model-authored response with no structured payload.
enum class Strategy { emoji, rot13, binary, base64, hex, morse, free_form };

std::string_view strategy_name(Strategy s);
std::optional<Strategy> strategy_from_name(std::string_view name);

enum class Verdict { safe, unsafe };

std::string_view to_string(Verdict v);
std::optional<Verdict> verdict_from_string(std::string_view s);

enum class JudgeKind { surrogate, attacker, ground_truth };

std::string_view to_string(JudgeKind k);
std::optional<JudgeKind> judge_kind_from_string(std::string_view s);

struct JudgeDecision {
    Verdict verdict = Verdict::safe;
    std::string reasoning;
    JudgeKind judge_kind = JudgeKind::surrogate;

    bool operator==(const JudgeDecision&) const = default;
};

/// One defender generation. For every strategy except free_form the
/// response text embeds encode(strategy, payload_plaintext) and the blob
/// decodes back to payload_plaintext.
struct SpuriousAttempt {
    int index = 1;  // 1-based attempt number
    Strategy strategy = Strategy::free_form;
    std::string payload_plaintext;
    std::string response_text;
    std::string improvement;  // empty on attempt 1
    std::optional<JudgeDecision> judgment;

    bool operator==(const SpuriousAttempt&) const = default;
};

enum class AttackOutcome { attacker_success, attacker_exhausted };

std::string_view to_string(AttackOutcome o);
std::optional<AttackOutcome> attack_outcome_from_string(std::string_view s);

struct AttackTurn {
    std::string prompt;
    std::string response;
    JudgeDecision attacker_judgment;

    bool operator==(const AttackTurn&) const = default;
};

/// Per-behavior attack trace. outcome reflects the attacker's own judge;
/// true_success reflects the ground-truth judge over the final response.
struct AttackRun {
    std::string behavior;
    std::vector<std::string> prompts_issued;
    std::vector<AttackTurn> turns;
    AttackOutcome outcome = AttackOutcome::attacker_exhausted;
    bool true_success = false;
    bool terminated_on_spurious = false;
    std::string error_note;

    bool operator==(const AttackRun&) const = default;
};

/// Whitespace-token count used for the malicious-topic length bound.
int word_count(std::string_view text);

/// Truncates to the first `max_words` whitespace-separated tokens.
std::string truncate_words(std::string_view text, int max_words);

}  // namespace proact
