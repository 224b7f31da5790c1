#include "factgraph/config.hpp"
#include "factgraph/eval.hpp"
#include "factgraph/events.hpp"
#include "factgraph/executor.hpp"
#include "factgraph/gateway.hpp"
#include "factgraph/graph.hpp"
#include "factgraph/planner.hpp"
#include "factgraph/prompts.hpp"
#include "factgraph/retrieval.hpp"
#include "factgraph/text.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace factgraph;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write file: " + path.string());
    out << content;
}

std::string single_line(const std::string& text) {
    std::string out = text;
    for (char& c : out) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    return out;
}

std::string sanitize_id(const std::string& id) {
    std::string out;
    out.reserve(id.size());
    for (char c : id) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
        out.push_back(ok ? c : '_');
    }
    return out.empty() ? std::string("claim") : out;
}

/// Flag values collected for layered config resolution; only flags the user
/// actually passed are present.
struct CommonFlags {
    std::string config_path;
    KeyValues kv;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "config file with key = value lines");
    auto bind = [cmd, &flags](const std::string& name, const std::string& key,
                              const std::string& help) {
        cmd->add_option_function<std::string>(
            name, [key, &flags](const std::string& value) { flags.kv[key] = value; }, help);
    };
    bind("--mode", "mode", "static or dynamic planning");
    bind("--budget", "budget", "max graph modifications (dynamic only)");
    bind("--max-inflight", "max_inflight", "max concurrently running nodes");
    bind("--timeout", "node_timeout_s", "per-node timeout in seconds");
    bind("--top-k", "top_k", "evidence passages per search");
    bind("--max-plan-nodes", "max_plan_nodes", "max nodes the planner may emit");
    bind("--strategy", "strategy", "retrieval strategy: wiki or web");
    bind("--corpus", "corpus", "corpus JSONL for wiki retrieval");
    bind("--script", "script", "scripted model responses (JSONL)");
    bind("--fixtures", "search_fixtures", "fixture directory for web search");
    bind("--out", "out", "directory for run artifacts");
    bind("--templates", "templates_dir", "prompt template overrides");
    bind("--endpoint", "llm_endpoint", "chat-completions endpoint URL");
    bind("--model", "llm_model", "model name sent to the endpoint");
    bind("--api-key", "llm_api_key", "bearer token for the model endpoint");
    bind("--search-endpoint", "search_endpoint", "web search proxy URL");
    bind("--search-api-key", "search_api_key", "bearer token for web search");
}

CliConfig resolve_from(const CommonFlags& flags) {
    KeyValues file;
    if (!flags.config_path.empty()) file = load_config_file(flags.config_path);
    return resolve_config(file, environment_overrides(), flags.kv);
}

TemplateStore build_templates(const CliConfig& config) {
    if (config.templates_dir.empty()) return TemplateStore::builtin();
    return TemplateStore::from_dir(config.templates_dir);
}

std::unique_ptr<GatewayBackend> build_backend(const CliConfig& config) {
    if (!config.script_path.empty()) {
        return std::make_unique<ScriptedBackend>(load_script(config.script_path));
    }
    if (config.llm_endpoint.empty()) {
        throw ConfigError(
            "no model endpoint configured: pass --endpoint, set FACTGRAPH_LLM_ENDPOINT, or "
            "use --script");
    }
    RemoteConfig remote;
    remote.endpoint = config.llm_endpoint;
    remote.model = config.llm_model;
    remote.api_key = config.llm_api_key;
    return std::make_unique<RemoteBackend>(remote);
}

std::unique_ptr<Retriever> build_retriever(const CliConfig& config) {
    if (config.run.strategy == SearchStrategy::WIKI) {
        if (config.corpus_path.empty()) {
            throw ConfigError("wiki retrieval requires --corpus");
        }
        return std::make_unique<WikiRetriever>(CorpusIndex::build(load_corpus(config.corpus_path)));
    }
    if (!config.search_fixtures.empty() || !config.search_endpoint.empty()) {
        WebSearchConfig web;
        web.endpoint = config.search_endpoint;
        web.api_key = config.search_api_key;
        web.fixture_dir = config.search_fixtures;
        return std::make_unique<WebRetriever>(web);
    }
    if (!config.script_path.empty()) {
        try {
            return std::make_unique<ScriptedRetriever>(load_jsonl(config.script_path));
        } catch (const Error&) {
            throw ConfigError(
                "script has no recorded search traffic; web retrieval requires "
                "--search-endpoint or --fixtures");
        }
    }
    throw ConfigError(
        "web retrieval requires --search-endpoint, --fixtures, or a script with recorded "
        "searches");
}

ordered_json run_config_json(const std::string& claim, const CliConfig& config) {
    ordered_json j;
    j["claim"] = claim;
    j["mode"] = to_string(config.run.mode);
    j["budget"] = config.run.budget;
    j["max_inflight"] = config.run.max_inflight;
    j["node_timeout_s"] = config.run.node_timeout_s;
    j["strategy"] = to_string(config.run.strategy);
    j["top_k"] = config.run.top_k;
    j["max_plan_nodes"] = config.run.max_plan_nodes;
    j["templates_dir"] = config.templates_dir;
    return j;
}

void write_run_dir(const fs::path& dir, const std::string& claim, const CliConfig& config,
                   const RunResult& result) {
    fs::create_directories(dir);
    write_file(dir / "graph.json", graph_to_string(result.final_graph));
    write_file(dir / "transcript.jsonl", events_to_jsonl(result.transcript));
    write_file(dir / "result.json", run_result_to_string(result));
    write_file(dir / "config.json",
               run_config_json(claim, config)
                       .dump(2, ' ', false, nlohmann::json::error_handler_t::replace) +
                   "\n");
}

struct Diff {
    std::string path;
    std::string recorded;
    std::string replayed;
};

std::optional<Diff> first_difference(const ordered_json& a, const ordered_json& b,
                                     const std::string& path) {
    auto at = [&path](const std::string& leaf) {
        return path.empty() ? leaf : path + "." + leaf;
    };
    if (a.type() != b.type()) {
        return Diff{path.empty() ? "(root)" : path, a.dump(), b.dump()};
    }
    if (a.is_object()) {
        for (const auto& [key, value] : a.items()) {
            if (!b.contains(key)) return Diff{at(key), value.dump(), "(missing)"};
            if (auto d = first_difference(value, b[key], at(key))) return d;
        }
        for (const auto& [key, value] : b.items()) {
            if (!a.contains(key)) return Diff{at(key), "(missing)", value.dump()};
        }
        return std::nullopt;
    }
    if (a.is_array()) {
        const size_t n = std::min(a.size(), b.size());
        for (size_t i = 0; i < n; ++i) {
            const std::string elem = (path.empty() ? std::string() : path) + "[" +
                                     std::to_string(i) + "]";
            if (auto d = first_difference(a[i], b[i], elem)) return d;
        }
        if (a.size() != b.size()) {
            return Diff{at("length"), std::to_string(a.size()), std::to_string(b.size())};
        }
        return std::nullopt;
    }
    if (a != b) return Diff{path.empty() ? "(root)" : path, a.dump(), b.dump()};
    return std::nullopt;
}

int cmd_plan(const std::string& claim, const CommonFlags& flags) {
    const CliConfig config = resolve_from(flags);
    const TemplateStore templates = build_templates(config);
    std::unique_ptr<GatewayBackend> backend = build_backend(config);
    Gateway gateway(*backend);

    PlanRequest request;
    request.claim = claim;
    request.purpose = PlanPurpose::INITIAL;
    request.sink_type = NodeType::JUDGE;
    request.max_nodes = config.run.max_plan_nodes;
    request.mode = config.run.mode;

    GeneratePlanResult result = generate_plan(request, gateway, templates);
    std::cout << graph_to_string(result.graph);
    if (result.used_fallback) {
        std::cerr << "warning: planner output rejected, using fallback plan\n";
        return 2;
    }
    return 0;
}

int cmd_verify(const std::string& claim, const CommonFlags& flags) {
    const CliConfig config = resolve_from(flags);
    const TemplateStore templates = build_templates(config);
    std::unique_ptr<GatewayBackend> backend = build_backend(config);
    std::unique_ptr<Retriever> retriever = build_retriever(config);
    Gateway gateway(*backend);
    LlmPlanner planner(gateway, templates);
    ClaimRunner runner(config.run, planner, gateway, *retriever, templates);

    RunResult result = runner.run(claim);
    if (!config.out_dir.empty()) {
        write_run_dir(config.out_dir, claim, config, result);
        std::cerr << "run artifacts written to " << config.out_dir << "\n";
    }
    std::cout << to_string(result.verdict.label) << ": "
              << single_line(result.verdict.explanation) << "\n";
    if (result.verdict.forced) return 3;
    if (result.stats.planner_fallback_used) return 2;
    return 0;
}

struct EvalFlags {
    std::string dataset_path;
    std::string format;
    std::string hard_from;
    int hard_n = 150;
    int limit = 0;
    int parallel = 2;
};

int cmd_eval(const EvalFlags& eval_flags, const CommonFlags& flags) {
    const CliConfig config = resolve_from(flags);

    std::vector<ClaimRecord> records;
    std::string dataset_name;
    if (!eval_flags.hard_from.empty()) {
        const ordered_json prev = ordered_json::parse(read_file(eval_flags.hard_from));
        const EvalReport previous = eval_report_from_json(prev);
        records = select_hard_subset(previous.outcomes, eval_flags.hard_n);
        if (static_cast<int>(records.size()) < eval_flags.hard_n) {
            std::cerr << "warning: only " << records.size() << " hard samples available (asked for "
                      << eval_flags.hard_n << ")\n";
        }
        dataset_name = previous.dataset_name + "-hard";
    } else {
        if (eval_flags.dataset_path.empty()) {
            throw ConfigError("eval: dataset path required unless --hard-from is given");
        }
        auto kind = dataset_kind_from_string(eval_flags.format);
        if (!kind) {
            throw ConfigError("eval: --format must be hover, feverous, or custom");
        }
        DatasetLoadResult loaded = load_dataset(eval_flags.dataset_path, *kind);
        for (const RejectedRecord& r : loaded.rejected) {
            std::cerr << "skipping line " << r.line << ": " << r.reason << "\n";
        }
        records = std::move(loaded.records);
        dataset_name = to_lower(to_string(*kind));
    }
    if (eval_flags.limit > 0 && static_cast<int>(records.size()) > eval_flags.limit) {
        records.resize(eval_flags.limit);
    }
    if (records.empty()) throw ConfigError("eval: no claims to evaluate");

    const TemplateStore templates = build_templates(config);
    std::unique_ptr<GatewayBackend> backend = build_backend(config);
    std::unique_ptr<Retriever> retriever = build_retriever(config);

    EvalConfig eval_config;
    eval_config.claim_parallelism = eval_flags.parallel;
    eval_config.dataset_name = dataset_name;
    if (!config.out_dir.empty()) {
        eval_config.persist = [&](const ClaimRecord& record, const RunResult& run) {
            const fs::path dir =
                fs::path(config.out_dir) / "runs" / dataset_name / sanitize_id(record.id);
            write_run_dir(dir, record.claim, config, run);
        };
    }
    ClaimEngine engine = [&](const ClaimRecord& record) {
        Gateway gateway(*backend);
        LlmPlanner planner(gateway, templates);
        ClaimRunner runner(config.run, planner, gateway, *retriever, templates);
        return runner.run(record.claim);
    };

    const EvalReport report = run_eval(records, eval_config, engine);
    const std::string report_str =
        eval_report_json(report).dump(2, ' ', false, nlohmann::json::error_handler_t::replace) +
        "\n";
    if (!config.out_dir.empty()) {
        fs::create_directories(config.out_dir);
        write_file(fs::path(config.out_dir) / "report.json", report_str);
    }
    std::cout << report_str;
    std::cerr << render_eval_report(report);
    return 0;
}

int cmd_replay(const std::string& run_dir) {
    const fs::path dir(run_dir);
    const ordered_json stored_config = ordered_json::parse(read_file(dir / "config.json"));
    const std::string claim = stored_config.at("claim").get<std::string>();

    RunConfig run;
    auto mode = graph_mode_from_string(stored_config.value("mode", std::string("STATIC")));
    if (!mode) throw Error("replay: unknown mode in config.json");
    run.mode = *mode;
    run.budget = stored_config.value("budget", run.mode == GraphMode::DYNAMIC ? 3 : 0);
    run.max_inflight = stored_config.value("max_inflight", 4);
    run.node_timeout_s = stored_config.value("node_timeout_s", 60.0);
    auto strategy =
        search_strategy_from_string(stored_config.value("strategy", std::string("WIKI")));
    if (!strategy) throw Error("replay: unknown strategy in config.json");
    run.strategy = *strategy;
    run.top_k = stored_config.value("top_k", 10);
    run.max_plan_nodes = stored_config.value("max_plan_nodes", 12);

    TemplateStore templates = TemplateStore::builtin();
    const std::string templates_dir = stored_config.value("templates_dir", std::string());
    if (!templates_dir.empty()) {
        try {
            templates = TemplateStore::from_dir(templates_dir);
        } catch (const Error& e) {
            std::cerr << "warning: " << e.what() << "; using built-in templates\n";
        }
    }

    const std::vector<Event> events = load_jsonl((dir / "transcript.jsonl").string());
    ScriptedBackend backend(script_from_events(events));
    ScriptedRetriever retriever(events);
    Gateway gateway(backend);
    LlmPlanner planner(gateway, templates);
    ClaimRunner runner(run, planner, gateway, retriever, templates);

    const RunResult result = runner.run(claim);
    const std::string regenerated = run_result_to_string(result);
    const std::string stored = read_file(dir / "result.json");
    if (regenerated == stored) {
        std::cout << to_string(result.verdict.label) << ": "
                  << single_line(result.verdict.explanation) << "\n";
        return 0;
    }

    const ordered_json a = ordered_json::parse(stored, nullptr, false);
    const ordered_json b = ordered_json::parse(regenerated, nullptr, false);
    std::optional<Diff> diff;
    if (!a.is_discarded() && !b.is_discarded()) diff = first_difference(a, b, "");
    if (diff) {
        std::cout << "divergence: " << diff->path << ": recorded " << diff->recorded
                  << " != replayed " << diff->replayed << "\n";
    } else {
        std::cout << "divergence: result bytes differ\n";
    }
    return 4;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"graph-structured claim verification"};
    app.require_subcommand(1);
    int code = 0;

    std::string plan_claim;
    CommonFlags plan_flags;
    CLI::App* plan = app.add_subcommand("plan", "print the verification plan for a claim");
    plan->add_option("claim", plan_claim, "claim text")->required();
    add_common_flags(plan, plan_flags);
    plan->callback([&]() { code = cmd_plan(plan_claim, plan_flags); });

    std::string verify_claim;
    CommonFlags verify_flags;
    CLI::App* verify = app.add_subcommand("verify", "verify a claim end to end");
    verify->add_option("claim", verify_claim, "claim text")->required();
    add_common_flags(verify, verify_flags);
    verify->callback([&]() { code = cmd_verify(verify_claim, verify_flags); });

    EvalFlags eval_flags;
    CommonFlags eval_common;
    CLI::App* eval = app.add_subcommand("eval", "run a labeled dataset and report macro-F1");
    eval->add_option("dataset", eval_flags.dataset_path, "dataset JSONL");
    eval->add_option("--format", eval_flags.format, "hover, feverous, or custom");
    eval->add_option("--limit", eval_flags.limit, "evaluate at most N claims");
    eval->add_option("--hard-from", eval_flags.hard_from,
                     "report.json from a previous run; evaluate its misses");
    eval->add_option("--hard-n", eval_flags.hard_n, "max hard samples to select");
    eval->add_option("--parallel", eval_flags.parallel, "claims evaluated concurrently");
    add_common_flags(eval, eval_common);
    eval->callback([&]() { code = cmd_eval(eval_flags, eval_common); });

    std::string replay_dir;
    CLI::App* replay = app.add_subcommand("replay", "re-run a recorded run and compare results");
    replay->add_option("run_dir", replay_dir, "directory written by verify --out")->required();
    replay->callback([&]() { code = cmd_replay(replay_dir); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int cli_code = app.exit(e);
        return cli_code == 0 ? 0 : 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return code;
}
