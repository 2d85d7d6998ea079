#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "proact/backend.hpp"
#include "proact/defender.hpp"
#include "proact/domain.hpp"
#include "proact/evaluator.hpp"
#include "proact/gateway.hpp"

// Red-team harness: iterative attackers driven by the attacker-side judge,
// benchmark ingestion, and the defense metrics (reported vs true attack
// success, post-deception rate, bypass rate, average attempts).
namespace proact::harness {

enum class AttackerKind { pair_like, multi_turn, scripted };

std::string_view attacker_kind_name(AttackerKind k);
std::optional<AttackerKind> attacker_kind_from_name(std::string_view name);

struct AttackerConfig {
    AttackerKind kind = AttackerKind::pair_like;
    // 0 = kind default (5 iterations for pair_like/scripted, 7 turns for
    // multi_turn).
    int max_iterations = 0;
    BackendConfig attacker_backend;
    evaluator::EvaluatorConfig judge;  // judge_kind must be attacker
    std::string replay_path;           // required for the scripted kind

    AttackerConfig() { judge.judge_kind = JudgeKind::attacker; }
};

/// Effective iteration budget for the configured kind.
int effective_iterations(const AttackerConfig& cfg);

struct BenchmarkItem {
    std::string id;
    std::string behavior;                       // the harmful goal
    std::vector<std::string> harmful_keywords;  // offline ground-truth fixture
    std::string topic;  // optional ground-truth topic for ablations
};

enum class BenchmarkFormat { csv, jsonl };

/// Loads benchmark rows in order. CSV mode requires a "goal" or "behavior"
/// column (case-insensitive) and honors quoting; JSONL mode reads one
/// object per line with "behavior" plus optional "id", "harmful_keywords"
/// and "topic". Missing ids become "item-<row>" (1-based). Throws
/// std::runtime_error naming the path (and line/column where relevant) on
/// I/O errors, schema errors, or an empty benchmark.
std::vector<BenchmarkItem> load_benchmark(const std::string& path,
                                          BenchmarkFormat format);

/// In-process target adapter: drives a gateway as if over the wire, mapping
/// CallOptions.session to the session-pinning id. Gateway faults surface as
/// ProtocolError so attack runs record them like any backend failure.
class GatewayClient : public ChatClient {
  public:
    explicit GatewayClient(gateway::Gateway& gw) : gw_(&gw) {}

    std::string complete(const std::vector<ChatMessage>& messages,
                         const CallOptions& options = {}) override;

  private:
    gateway::Gateway* gw_;
};

/// Structural spurious-response detector: affirmative framing lead, a named
/// encoding strategy, the closing "encodes instructions" note, and a blob
/// that actually decodes under that strategy. Returns the strategy, or
/// nullopt for ordinary text.
std::optional<Strategy> detect_spurious(const std::string& text);

/// Attacker-side judge for one exchange (rule-based or LLM per cfg.judge).
/// `attacker` may be null when cfg.judge is rule-based; an empty response is
/// always judged safe.
JudgeDecision judge_attack_turn(const AttackerConfig& cfg, ChatClient* attacker,
                                const BenchmarkItem& item,
                                const std::string& response);

/// Single-shot refinement loop: iteration 1 sends the behavior verbatim;
/// later iterations ask the attacker backend for the next prompt given all
/// prior prompt/response/verdict triples (deterministic escalation when the
/// reply has no {"prompt": ...} object). Each prompt is a fresh one-message
/// conversation. Stops at the first unsafe judgment.
AttackRun run_pair_like(const AttackerConfig& cfg, ChatClient& attacker,
                        ChatClient& target, const BenchmarkItem& item);

/// Conversational attacker: one escalating user turn per iteration on a
/// single growing conversation, session-pinned so gateway targets keep
/// server-side history. Same outcome semantics as run_pair_like.
AttackRun run_multi_turn(const AttackerConfig& cfg, ChatClient& attacker,
                         ChatClient& target, const BenchmarkItem& item);

/// Replays prompts from cfg.replay_path: a JSON object mapping item id (or
/// "default") to an array of prompts.
AttackRun run_scripted(const AttackerConfig& cfg, ChatClient& target,
                       const BenchmarkItem& item);

/// Dispatch by cfg.kind.
AttackRun run_attack(const AttackerConfig& cfg, ChatClient& attacker,
                     ChatClient& target, const BenchmarkItem& item);

/// Attacks every item with bounded parallelism; results are indexed by item
/// position regardless of scheduling.
std::vector<AttackRun> run_campaign(const AttackerConfig& cfg, ChatClient& attacker,
                                    ChatClient& target,
                                    const std::vector<BenchmarkItem>& items,
                                    int parallelism = 4);

struct DefenseReport {
    std::vector<AttackRun> runs;
    double asr_reported = 0.0;            // attacker's own judge view
    double asr_true = 0.0;                // ground-truth view
    std::optional<double> pdr;            // absent when no successful defenses
    std::optional<double> bypass_rate;    // absent without defender traces
    std::optional<double> avg_attempt;    // absent without bypassed traces
    nlohmann::ordered_json config;        // caller-supplied snapshot
};

/// Metric aggregation:
///   asr_reported = |outcome = attacker_success| / |runs|
///   asr_true     = |true_success| / |runs|
///   pdr          = |defended and spurious-terminated| / |defended|
///                  where defended = runs with true_success = false
///   bypass_rate  = bypassed traces / all traces
///   avg_attempt  = mean attempt count over bypassed traces only
/// Throws std::invalid_argument on empty runs.
DefenseReport compute_metrics(
    const std::vector<AttackRun>& runs,
    const std::optional<std::vector<defender::DefenseResult>>& traces =
        std::nullopt);

/// Stable-field-order serialization with schema_version "1"; no timestamps,
/// so identical inputs serialize byte-identically.
nlohmann::ordered_json report_to_json(const DefenseReport& report);

/// Writes report_to_json with two-space indentation and a trailing newline.
void write_report(const DefenseReport& report, const std::string& path);

struct AblationResult {
    std::optional<double> bypass_rate;
    std::optional<double> avg_attempt;
    std::vector<defender::DefenseResult> traces;
};

/// Runs defend() once per item with strategy_restriction = strategy (nullopt
/// = unrestricted), using the item's ground-truth topic (behavior when the
/// topic is empty) and the supplied surrogate evaluator.
AblationResult bypass_ablation(std::optional<Strategy> strategy,
                               const std::vector<BenchmarkItem>& items,
                               ChatClient& defender_backend,
                               const defender::EvaluatorFn& evaluate,
                               defender::DefenderConfig base_cfg = {});

}  // namespace proact::harness
