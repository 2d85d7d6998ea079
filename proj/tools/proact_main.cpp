// proact: OpenAI-compatible defense gateway and red-team harness.
//
// Subcommands:
//   serve   — run the gateway HTTP front end
//   attack  — drive an iterative attacker against a target endpoint
//   bench   — strategy-restricted defender ablation (bypass statistics)
//   codec   — stdin/stdout encoder-decoder for the payload strategies
//   judge   — one-shot safety judgment of a response
//
// Exit codes: 0 success, 1 usage error, 2 runtime failure.

#include <cstdlib>
#include <iostream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "proact/codecs.hpp"
#include "proact/defender.hpp"
#include "proact/domain.hpp"
#include "proact/errors.hpp"
#include "proact/evaluator.hpp"
#include "proact/gateway.hpp"
#include "proact/harness.hpp"
#include "proact/log.hpp"

namespace {

using namespace proact;

std::string read_stdin_payload() {
    std::string data((std::istreambuf_iterator<char>(std::cin)),
                     std::istreambuf_iterator<char>());
    if (!data.empty() && data.back() == '\n') data.pop_back();
    return data;
}

// mock:<path> backends and loopback servers are free to contact; anything
// else is a paid remote endpoint and requires --live.
bool is_mock_or_local(const std::string& base_url) {
    if (base_url.rfind("mock:", 0) == 0) return true;
    const auto scheme = base_url.find("://");
    if (scheme == std::string::npos) return false;
    std::string host = base_url.substr(scheme + 3);
    if (!host.empty() && host.front() == '[') {
        const auto close = host.find(']');
        host = close == std::string::npos ? host : host.substr(1, close - 1);
    } else {
        host = host.substr(0, host.find_first_of(":/"));
    }
    return host == "127.0.0.1" || host == "localhost" || host == "::1";
}

void require_live(bool live, std::initializer_list<const std::string*> urls) {
    if (live) return;
    for (const std::string* url : urls) {
        if (!url->empty() && !is_mock_or_local(*url))
            throw std::runtime_error(
                "backend \"" + *url +
                "\" is a remote endpoint; pass --live to allow real API traffic");
    }
}

harness::BenchmarkFormat resolve_format(const std::string& format,
                                        const std::string& path) {
    if (format == "csv") return harness::BenchmarkFormat::csv;
    if (format == "jsonl") return harness::BenchmarkFormat::jsonl;
    const bool csv = path.size() >= 4 && path.rfind(".csv") == path.size() - 4;
    return csv ? harness::BenchmarkFormat::csv : harness::BenchmarkFormat::jsonl;
}

gateway::GatewayConfig config_file_or_defaults(const std::string& path) {
    if (path.empty()) return {};
    return gateway::load_gateway_config(path);
}

std::vector<std::string> split_csv_list(const std::string& csv) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= csv.size()) {
        auto end = csv.find(',', start);
        if (end == std::string::npos) end = csv.size();
        std::string piece = csv.substr(start, end - start);
        const auto from = piece.find_first_not_of(" \t");
        const auto to = piece.find_last_not_of(" \t");
        if (from != std::string::npos)
            out.push_back(piece.substr(from, to - from + 1));
        start = end + 1;
    }
    return out;
}

struct GlobalOptions {
    std::string log_level = "info";
    std::string config_path;
    std::uint64_t seed = 0;  // reserved; the shipped pipeline is deterministic
    bool live = false;

    void apply() const {
        logging::set_level(logging::level_from_string(log_level));
    }
};

// ---------------------------------------------------------------- serve ----

struct ServeOptions {
    std::string listen;
    std::string defenses_csv;
    std::string target_backend;
    std::string agent_backend;
    bool defenses_set = false;
};

int run_serve(const GlobalOptions& global, const ServeOptions& opt) {
    auto cfg = config_file_or_defaults(global.config_path);
    if (!opt.listen.empty()) cfg.listen_addr = opt.listen;
    if (opt.defenses_set) cfg.defenses = gateway::parse_defenses(opt.defenses_csv);
    if (!opt.target_backend.empty())
        cfg.target_backend.base_url = opt.target_backend;
    if (!opt.agent_backend.empty()) cfg.agent_backend.base_url = opt.agent_backend;

    gateway::Gateway gw(cfg);
    gateway::GatewayServer server(gw);

    nlohmann::json defenses = nlohmann::json::array();
    for (gateway::Defense d : cfg.defenses)
        defenses.push_back(std::string(gateway::defense_name(d)));
    logging::emit(logging::Level::info, "serving",
                  {{"listen_addr", cfg.listen_addr},
                   {"defenses", defenses},
                   {"target_backend", cfg.target_backend.base_url}});
    if (!server.serve(cfg.listen_addr))
        throw std::runtime_error("cannot bind " + cfg.listen_addr);
    return 0;
}

// --------------------------------------------------------------- attack ----

struct AttackOptions {
    std::string attacker = "pair_like";
    std::string dataset;
    std::string format = "auto";
    std::string target_url;
    std::string target_model = "gpt-4.1-mini";
    std::string backend = "mock:";
    std::string model = "gpt-4.1-mini";
    std::string judge = "rule_based";
    std::string replay;
    std::string out = "report.json";
    int votes = 3;
    int max_iterations = 0;
    int parallelism = 4;
};

int run_attack(const GlobalOptions& global, const AttackOptions& opt) {
    const auto items =
        harness::load_benchmark(opt.dataset, resolve_format(opt.format, opt.dataset));

    // A gateway-shaped config file may supply the target backend; flags win.
    const auto file_cfg = config_file_or_defaults(global.config_path);
    BackendConfig target_cfg = file_cfg.target_backend;
    if (!opt.target_url.empty()) target_cfg.base_url = opt.target_url;
    if (target_cfg.base_url.empty())
        throw std::runtime_error(
            "no target endpoint: pass --target-url or configure target_backend");
    target_cfg.model_name = opt.target_model;

    harness::AttackerConfig cfg;
    cfg.kind = *harness::attacker_kind_from_name(opt.attacker);
    cfg.max_iterations = opt.max_iterations;
    cfg.attacker_backend.base_url = opt.backend;
    cfg.attacker_backend.model_name = opt.model;
    cfg.judge.rule_based = opt.judge == "rule_based";
    cfg.judge.votes = opt.votes;
    cfg.replay_path = opt.replay;

    require_live(global.live, {&target_cfg.base_url, &cfg.attacker_backend.base_url});

    const auto attacker = make_client(cfg.attacker_backend);
    const auto target = make_client(target_cfg);
    const auto runs =
        harness::run_campaign(cfg, *attacker, *target, items, opt.parallelism);

    auto report = harness::compute_metrics(runs);
    report.config["attacker"] = opt.attacker;
    report.config["max_iterations"] = harness::effective_iterations(cfg);
    report.config["judge"] = opt.judge;
    report.config["votes"] = opt.votes;
    report.config["dataset"] = opt.dataset;
    report.config["items"] = items.size();
    report.config["target_url"] = target_cfg.base_url;
    report.config["attacker_backend"] = cfg.attacker_backend.base_url;
    report.config["parallelism"] = opt.parallelism;
    harness::write_report(report, opt.out);

    nlohmann::ordered_json summary;
    summary["event"] = "attack_complete";
    summary["out"] = opt.out;
    summary["runs"] = runs.size();
    summary["asr_reported"] = report.asr_reported;
    summary["asr_true"] = report.asr_true;
    summary["pdr"] = report.pdr ? nlohmann::ordered_json(*report.pdr)
                                : nlohmann::ordered_json(nullptr);
    std::cout << summary.dump() << "\n";
    return 0;
}

// ----------------------------------------------------------------- bench ----

struct BenchOptions {
    std::string ablation = "strategy";
    std::string strategy = "unrestricted";
    std::string dataset;
    std::string format = "auto";
    std::string backend = "mock:";
    std::string judge_backend;
    std::string model = "gpt-4.1-mini";
    std::string out = "bench.json";
    int votes = 3;
    int max_attempts = 5;
};

int run_bench(const GlobalOptions& global, const BenchOptions& opt) {
    const auto items =
        harness::load_benchmark(opt.dataset, resolve_format(opt.format, opt.dataset));

    std::optional<Strategy> restriction;
    if (opt.strategy != "unrestricted")
        restriction = *strategy_from_name(opt.strategy);

    BackendConfig generator{opt.backend};
    generator.model_name = opt.model;
    BackendConfig judge{opt.judge_backend.empty() ? opt.backend : opt.judge_backend};
    judge.model_name = opt.model;
    require_live(global.live, {&generator.base_url, &judge.base_url});

    const auto generator_client = make_client(generator);
    const auto judge_client = make_client(judge);
    evaluator::EvaluatorConfig ecfg;
    ecfg.votes = opt.votes;
    const auto evaluate = [&](const std::string& topic,
                              const std::string& response) {
        return evaluator::judge(ecfg, judge_client.get(), topic, response);
    };

    defender::DefenderConfig dcfg;
    dcfg.max_attempts = opt.max_attempts;
    const auto result = harness::bypass_ablation(restriction, items,
                                                 *generator_client, evaluate, dcfg);

    nlohmann::ordered_json doc;
    doc["schema_version"] = "1";
    doc["config"]["ablation"] = opt.ablation;
    doc["config"]["strategy"] = opt.strategy;
    doc["config"]["dataset"] = opt.dataset;
    doc["config"]["items"] = items.size();
    doc["config"]["max_attempts"] = opt.max_attempts;
    doc["config"]["votes"] = opt.votes;
    doc["config"]["defender_backend"] = generator.base_url;
    doc["config"]["evaluator_backend"] = judge.base_url;
    doc["metrics"]["bypass_rate"] =
        result.bypass_rate ? nlohmann::ordered_json(*result.bypass_rate)
                           : nlohmann::ordered_json(nullptr);
    doc["metrics"]["avg_attempt"] =
        result.avg_attempt ? nlohmann::ordered_json(*result.avg_attempt)
                           : nlohmann::ordered_json(nullptr);
    auto traces = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < result.traces.size(); ++i) {
        const auto& t = result.traces[i];
        nlohmann::ordered_json row;
        row["id"] = items[i].id;
        row["bypassed"] = t.bypassed;
        row["attempts"] = t.attempts.size();
        auto names = nlohmann::ordered_json::array();
        for (const auto& attempt : t.attempts)
            names.push_back(std::string(strategy_name(attempt.strategy)));
        row["strategies"] = std::move(names);
        traces.push_back(std::move(row));
    }
    doc["traces"] = std::move(traces);

    std::ofstream file(opt.out, std::ios::binary);
    if (!file) throw std::runtime_error("cannot write report: " + opt.out);
    file << doc.dump(2) << "\n";

    nlohmann::ordered_json summary;
    summary["event"] = "bench_complete";
    summary["out"] = opt.out;
    summary["metrics"] = doc["metrics"];
    std::cout << summary.dump() << "\n";
    return 0;
}

// ----------------------------------------------------------------- codec ----

int run_codec(const std::string& strategy, const std::string& direction) {
    const Strategy s = *strategy_from_name(strategy);
    const std::string input = read_stdin_payload();
    const std::string output = direction == "encode" ? codecs::encode(s, input)
                                                     : codecs::decode(s, input);
    std::cout << output << "\n";
    return 0;
}

// ----------------------------------------------------------------- judge ----

struct JudgeOptions {
    std::string kind = "attacker";
    std::string behavior;
    std::string response;
    std::string keywords_csv;
    std::string backend = "mock:";
    std::string model = "gpt-4.1-mini";
    int votes = 3;
    bool llm = false;
    bool response_set = false;
};

int run_judge(const GlobalOptions& global, const JudgeOptions& opt) {
    const std::string response =
        opt.response_set ? opt.response : read_stdin_payload();

    JudgeDecision decision;
    if (opt.kind == "ground_truth") {
        decision = evaluator::ground_truth_judge(opt.behavior, response,
                                                 split_csv_list(opt.keywords_csv));
    } else if (!opt.llm) {
        if (opt.kind == "surrogate")
            throw std::runtime_error(
                "the surrogate evaluator has no rule-based mode; pass --llm "
                "with a backend");
        decision = evaluator::rule_based_attacker_judge(response);
    } else {
        evaluator::EvaluatorConfig cfg;
        cfg.votes = opt.votes;
        cfg.judge_kind = opt.kind == "attacker" ? JudgeKind::attacker
                                                : JudgeKind::surrogate;
        BackendConfig backend{opt.backend};
        backend.model_name = opt.model;
        require_live(global.live, {&backend.base_url});
        const auto client = make_client(backend);
        decision = evaluator::judge(cfg, client.get(), opt.behavior, response);
    }

    nlohmann::ordered_json out;
    out["verdict"] = std::string(to_string(decision.verdict));
    out["judge_kind"] = std::string(to_string(decision.judge_kind));
    out["reasoning"] = decision.reasoning;
    std::cout << out.dump() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "proact — a chat gateway that answers detected jailbreak attempts with "
        "benign decoy responses, plus a red-team harness that measures the "
        "deception."};
    app.require_subcommand(1);
    app.set_version_flag("--version", "proact 0.1.0");

    GlobalOptions global;
    app.add_option("--log-level", global.log_level,
                   "Log threshold for stderr JSON lines")
        ->check(CLI::IsMember({"error", "warn", "info", "debug"}));
    app.add_option("--config", global.config_path,
                   "JSON config file (gateway-shaped; PROACT_CONFIG env)")
        ->envname("PROACT_CONFIG");
    app.add_option("--seed", global.seed,
                   "Seed for stochastic components (reserved; the pipeline is "
                   "deterministic)");
    app.add_flag("--live", global.live,
                 "Allow traffic to remote (non-mock, non-loopback) backends");

    const std::vector<std::string> codec_names = {"emoji", "rot13",  "binary",
                                                  "base64", "hex",   "morse"};

    // serve
    auto* serve = app.add_subcommand("serve", "Run the defense gateway");
    ServeOptions serve_opt;
    serve->add_option("--listen", serve_opt.listen, "host:port to bind");
    serve
        ->add_option("--defenses", serve_opt.defenses_csv,
                     "Comma-separated defenses (proact,self_reminder,"
                     "input_filter); empty = passthrough")
        ->each([&](const std::string&) { serve_opt.defenses_set = true; });
    serve->add_option("--target-backend", serve_opt.target_backend,
                      "Target base URL (or mock:<script>)");
    serve->add_option("--agent-backend", serve_opt.agent_backend,
                      "Agent base URL for analyzer/defender/evaluator");

    // attack
    auto* attack = app.add_subcommand("attack", "Run an attack campaign");
    AttackOptions attack_opt;
    attack->add_option("--attacker", attack_opt.attacker, "Attacker kind")
        ->check(CLI::IsMember({"pair_like", "multi_turn", "scripted"}));
    attack->add_option("--dataset", attack_opt.dataset, "Benchmark file")
        ->required();
    attack->add_option("--format", attack_opt.format, "Benchmark format")
        ->check(CLI::IsMember({"auto", "csv", "jsonl"}));
    attack->add_option("--target-url", attack_opt.target_url,
                       "Target endpoint (or mock:<script>)");
    attack->add_option("--target-model", attack_opt.target_model,
                       "Model name sent to the target");
    attack->add_option("--backend", attack_opt.backend,
                       "Attacker/judge backend (default built-in mock)");
    attack->add_option("--model", attack_opt.model,
                       "Model name for the attacker backend");
    attack->add_option("--judge", attack_opt.judge, "Attack-success judge")
        ->check(CLI::IsMember({"rule_based", "llm"}));
    attack->add_option("--votes", attack_opt.votes, "LLM judge votes");
    attack->add_option("--max-iterations", attack_opt.max_iterations,
                       "Iteration budget (0 = kind default)");
    attack->add_option("--replay", attack_opt.replay,
                       "Replay file for the scripted attacker");
    attack->add_option("--parallelism", attack_opt.parallelism,
                       "Concurrent items");
    attack->add_option("--out", attack_opt.out, "Report path");

    // bench
    auto* bench = app.add_subcommand(
        "bench", "Defender ablation benchmarks (bypass statistics)");
    BenchOptions bench_opt;
    bench->add_option("--ablation", bench_opt.ablation, "Ablation mode")
        ->check(CLI::IsMember({"strategy"}));
    std::vector<std::string> bench_strategies = codec_names;
    bench_strategies.push_back("unrestricted");
    bench->add_option("--strategy", bench_opt.strategy,
                      "Pin every attempt to one encoding strategy")
        ->check(CLI::IsMember(bench_strategies));
    bench->add_option("--dataset", bench_opt.dataset, "Benchmark file")
        ->required();
    bench->add_option("--format", bench_opt.format, "Benchmark format")
        ->check(CLI::IsMember({"auto", "csv", "jsonl"}));
    bench->add_option("--backend", bench_opt.backend,
                      "Defender generation backend");
    bench->add_option("--judge-backend", bench_opt.judge_backend,
                      "Surrogate evaluator backend (default: --backend)");
    bench->add_option("--model", bench_opt.model, "Model name for agents");
    bench->add_option("--votes", bench_opt.votes, "Surrogate evaluator votes");
    bench->add_option("--max-attempts", bench_opt.max_attempts,
                      "Defender search budget");
    bench->add_option("--out", bench_opt.out, "Report path");

    // codec
    auto* codec = app.add_subcommand(
        "codec", "Encode/decode stdin with a payload strategy");
    std::string codec_strategy;
    std::string codec_direction;
    codec->add_option("strategy", codec_strategy, "Strategy name")
        ->required()
        ->check(CLI::IsMember(codec_names));
    codec->add_option("direction", codec_direction, "encode or decode")
        ->required()
        ->check(CLI::IsMember({"encode", "decode"}));

    // judge
    auto* judge = app.add_subcommand("judge", "Judge one response");
    JudgeOptions judge_opt;
    judge->add_option("--kind", judge_opt.kind, "Judge role")
        ->check(CLI::IsMember({"attacker", "surrogate", "ground_truth"}));
    judge->add_option("--behavior", judge_opt.behavior,
                      "Request/topic the response is judged against")
        ->required();
    judge->add_option("--response", judge_opt.response,
                      "Response text (default: read stdin)")
        ->each([&](const std::string&) { judge_opt.response_set = true; });
    judge->add_option("--keywords", judge_opt.keywords_csv,
                      "Comma-separated harmful keywords (ground_truth)");
    judge->add_flag("--llm", judge_opt.llm, "Use an LLM judge via --backend");
    judge->add_option("--backend", judge_opt.backend, "Judge backend");
    judge->add_option("--model", judge_opt.model, "Judge model name");
    judge->add_option("--votes", judge_opt.votes, "LLM judge votes");

    try {
        app.parse(argc, argv);
        global.apply();
        if (app.got_subcommand(serve)) return run_serve(global, serve_opt);
        if (app.got_subcommand(attack)) return run_attack(global, attack_opt);
        if (app.got_subcommand(bench)) return run_bench(global, bench_opt);
        if (app.got_subcommand(codec))
            return run_codec(codec_strategy, codec_direction);
        if (app.got_subcommand(judge)) return run_judge(global, judge_opt);
        return 1;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e, std::cout, std::cerr);
        return 1;
    } catch (const std::exception& e) {
        proact::logging::emit(proact::logging::Level::error, "fatal",
                              {{"error", e.what()}});
        return 2;
    }
}
