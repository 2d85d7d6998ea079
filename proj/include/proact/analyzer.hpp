#pragma once

#include <optional>
#include <string>
#include <vector>

#include "proact/backend.hpp"
#include "proact/domain.hpp"

// Stage 1: user intent analysis. A prompted classifier with majority voting
// over several sampled votes and a margin rule for convergence.
namespace proact::analyzer {

struct AnalyzerConfig {
    int votes_per_round = 3;  // odd, >= 3
    int max_rounds = 2;       // >= 1
    Intent fail_safe_verdict = Intent::malicious;

    // A side must lead by at least this many votes to win the round.
    static constexpr int margin = 2;
};

struct ParsedVerdict {
    Intent intent = Intent::benign;
    std::string topic;
    std::string reasoning;

    bool operator==(const ParsedVerdict&) const = default;
};

/// Renders the conversation (most recent 20 messages, "USER:"/"ASSISTANT:"/
/// "SYSTEM:" line prefixes) into the intent-analysis template as a single
/// user message. Throws std::invalid_argument on an empty conversation.
std::vector<ChatMessage> build_analyzer_prompt(const Conversation& conv);

/// Extracts {intent, topic, reasoning} from a model reply; the topic comes
/// from the "malicious topic" or "benign topic" key matching the intent.
/// Returns nullopt (an abstention) when no JSON object with a valid intent
/// is found.
std::optional<ParsedVerdict> parse_verdict(const std::string& raw);

/// Majority-vote classification: casts votes_per_round votes per round; a
/// side leading by >= margin wins and contributes the topic/reasoning of its
/// first vote; otherwise the query is resubmitted with the competing
/// rationales appended, up to max_rounds. Exhaustion returns
/// fail_safe_verdict with the final round's tallies. Unparseable votes are
/// abstentions and count for neither side. Malicious topics are truncated
/// to five words.
IntentVerdict classify(const AnalyzerConfig& cfg, ChatClient& backend,
                       const Conversation& conv);

}  // namespace proact::analyzer
