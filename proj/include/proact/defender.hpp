#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "proact/backend.hpp"
#include "proact/domain.hpp"

// Stage 2: spurious-response generation. Given only a malicious topic (never
// the raw user query), produce a reply that looks like a successful
// jailbreak while its decodable content is a fixed benign sentence. A
// surrogate-evaluator feedback loop refines candidates until one is judged
// unsafe or the budget runs out.
namespace proact::defender {

struct DefenderConfig {
    int max_attempts = 5;  // search budget
    std::optional<Strategy> strategy_restriction;  // pin all attempts to one codec
    std::string payload_text = "This message contains no operational content.";
    double defender_temperature = 0.0;
};

struct DefenderOutput {
    std::string improvement;
    std::string prompt;  // the candidate decoy response

    bool operator==(const DefenderOutput&) const = default;
};

struct DefenseResult {
    SpuriousAttempt final;
    std::vector<SpuriousAttempt> attempts;
    bool bypassed = false;  // surrogate judged some attempt unsafe
};

/// Judges a candidate response for the given topic. Wired to the surrogate
/// evaluator in production; scriptable in tests.
using EvaluatorFn =
    std::function<JudgeDecision(const std::string& topic, const std::string& response)>;

/// System message = the red-teaming generation template with the topic
/// substituted (plus a strategy-restriction block when configured), then a
/// user kickoff, then one assistant/user pair per prior attempt carrying the
/// "INTERNAL EVALUATOR RESULT/REASONING" feedback. `feedback`, when given,
/// replaces the reasoning attached to the last history entry. Preconditions:
/// non-empty topic, |history| < max_attempts.
std::vector<ChatMessage> build_defender_prompt(
    const std::string& topic, const std::vector<SpuriousAttempt>& history,
    const std::optional<std::string>& feedback = std::nullopt,
    const DefenderConfig& cfg = {});

/// Extracts {"improvement", "prompt"} from the first JSON object in raw;
/// nullopt when either field is missing or not a string.
std::optional<DefenderOutput> parse_defender_output(const std::string& raw);

/// Payload as it will decode back out of a spurious blob: unchanged for
/// most codecs; for morse, lowercased with out-of-alphabet characters
/// stripped (morse carries only A-Z, 0-9 and spaces). Empty for free-form.
std::string canonical_payload(Strategy strategy, const std::string& payload);

/// Deterministic spurious response: affirmative framing woven around the
/// topic, an encoded payload blob, and a closing note insisting the blob is
/// meaningful. The decode URL is a reserved non-resolvable domain.
std::string render_spurious(Strategy strategy, const std::string& topic,
                            const std::string& payload);

/// The feedback loop. Per attempt: up to two backend-driven generation
/// tries (a parse failure, a backend error, or — in restricted mode — a
/// candidate missing the required encoded blob each burn one try), then the
/// deterministic render_spurious fallback cycling through the strategy
/// catalog (or pinned to the restricted strategy). Judging stops the loop
/// at the first unsafe verdict; otherwise the last attempt is returned
/// after max_attempts.
DefenseResult defend(const DefenderConfig& cfg, ChatClient& backend,
                     const EvaluatorFn& evaluate, const std::string& topic);

}  // namespace proact::defender
