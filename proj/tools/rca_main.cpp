// rca: command-line front end for simulation, analysis, diagnosis and evaluation.
#include <algorithm>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "rca/evaluation.hpp"
#include "rca/faultlab.hpp"
#include "rca/pipeline.hpp"

namespace fs = std::filesystem;
using namespace rca;

namespace {

// Exit codes: 0 success, 1 domain error, 2 usage error.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommonFlags {
    std::string config_path;
    std::string backend;
    std::string stub_mode;
    std::string cassette;
    std::string corpus;
    std::optional<int> agents;
    std::optional<int> k;
};

void add_common(CLI::App *cmd, CommonFlags &f) {
    cmd->add_option("--config", f.config_path, "JSON config file; flags override it");
    cmd->add_option("--backend", f.backend, "stub | http | replay | record");
    cmd->add_option("--stub-mode", f.stub_mode, "template | echo");
    cmd->add_option("--cassette", f.cassette, "record/replay cassette file");
    cmd->add_option("--corpus", f.corpus, "incident corpus file");
    cmd->add_option("--agents", f.agents, "mixture-of-agents draft count");
    cmd->add_option("-k,--top-k", f.k, "number of ranked causes");
}

app::AppConfig resolve_config(const CommonFlags &f) {
    app::AppConfig c;
    if (!f.config_path.empty()) {
        if (!fs::exists(f.config_path)) throw UsageError("config file not found: " + f.config_path);
        c = app::AppConfig::load(f.config_path);
    }
    if (!f.backend.empty()) c.backend = f.backend;
    if (!f.stub_mode.empty()) c.stub_mode = f.stub_mode;
    if (!f.cassette.empty()) c.cassette = f.cassette;
    if (!f.corpus.empty()) c.corpus = f.corpus;
    if (f.agents) c.ensemble.num_agents = *f.agents;
    if (f.k) c.stat.k = *f.k;
    try {
        c.validate();
    } catch (const std::invalid_argument &e) {
        throw UsageError(e.what());
    }
    return c;
}

diagnosis::PromptMode parse_mode(const std::string &text) {
    try {
        return diagnosis::parse_prompt_mode(text);
    } catch (const std::invalid_argument &e) {
        throw UsageError(e.what());
    }
}

topology::TopologySnapshot load_or_fail(const std::string &path) {
    if (!fs::exists(path)) throw std::runtime_error("snapshot not found: " + path);
    auto s = topology::load_snapshot(path);
    for (const auto &w : s.warnings) std::cerr << "warning: " << w << "\n";
    return s;
}

void save_cassette(const std::shared_ptr<const llm::LlmBackend> &backend) {
    if (auto rec = std::dynamic_pointer_cast<const llm::ReplayBackend>(backend); rec && rec->name() == "record")
        rec->save();
}

std::string prediction_text(const diagnosis::DiagnosisReport &d) {
    std::string out;
    for (const auto &h : d.hypotheses) out += (out.empty() ? "" : " ") + h.text;
    std::size_t n = 0;
    for (const auto &plan : d.action_steps)
        for (const auto &step : plan.steps) out += "\n" + std::to_string(++n) + ". " + step;
    return out;
}

int cmd_simulate(const std::string &scenario, std::uint64_t seed, const std::string &out_dir, std::size_t length) {
    std::vector<faultlab::ScenarioSpec> specs;
    if (scenario == "all") {
        specs = faultlab::list_scenarios();
    } else {
        try {
            specs.push_back(faultlab::find_scenario(scenario));
        } catch (const std::invalid_argument &e) {
            throw UsageError(e.what());
        }
    }
    for (auto &spec : specs) {
        spec.seed = seed;
        spec.length = length;
        const auto out = faultlab::generate_scenario(spec);
        const auto path = fs::path(out_dir) / out.snapshot.topology_id / (spec.name + ".json");
        topology::write_file(path, topology::serialize_snapshot(out.snapshot));
        topology::write_file(topology::truth_path_for(path), topology::serialize_ground_truth(out.truth));
        std::cout << path.string() << "\n" << topology::truth_path_for(path).string() << "\n";
    }
    return 0;
}

int cmd_analyze(const std::string &path, const CommonFlags &flags) {
    const auto config = resolve_config(flags);
    const auto snapshot = load_or_fail(path);
    const auto report = statrca::analyze(snapshot, config.stat);
    std::cout << statrca::report_to_json(report) << "\n";
    if (!report.status.empty()) std::cerr << report.status << "\n";
    for (const auto &n : report.notes) std::cerr << "note: " << n << "\n";
    return 0;
}

int cmd_diagnose(const std::string &path, const std::string &mode_text, bool deterministic,
                 const std::string &output, const CommonFlags &flags) {
    const auto mode = parse_mode(mode_text);
    const auto config = resolve_config(flags);
    const auto snapshot = load_or_fail(path);
    const auto ctx = app::make_context(config);
    const auto result = app::run_pipeline(snapshot, mode, ctx);
    save_cassette(ctx.backend);
    const auto text = app::result_to_json(result, {.include_durations = !deterministic});
    if (output.empty())
        std::cout << text;
    else
        topology::write_file(output, text);
    if (result.partial) {
        std::cerr << "error: diagnosis incomplete: " << result.error << "\n";
        return 1;
    }
    return 0;
}

int cmd_corpus_add(const std::vector<std::string> &snapshots, const std::string &store, const std::string &id,
                   const CommonFlags &flags) {
    const auto config = resolve_config(flags);
    std::vector<fs::path> paths(snapshots.begin(), snapshots.end());
    if (!store.empty()) {
        const auto listing = topology::validate_store(store);
        for (const auto &p : listing.problems) std::cerr << "warning: " << p.path.string() << ": " << p.message << "\n";
        for (const auto &e : listing.entries)
            if (e.has_ground_truth) paths.push_back(e.path);
    }
    if (paths.empty()) throw UsageError("corpus-add needs --snapshot or --store");
    if (!id.empty() && paths.size() != 1) throw UsageError("--id applies to a single snapshot");

    auto ctx = app::make_context(config);
    retrieval::VectorIndex index = ctx.corpus ? *ctx.corpus : retrieval::VectorIndex(*ctx.provider);
    for (const auto &p : paths) {
        const auto snapshot = load_or_fail(p.string());
        const auto truth_path = topology::truth_path_for(p);
        if (!fs::exists(truth_path)) throw std::runtime_error("ground truth not found: " + truth_path.string());
        auto input = app::incident_from_snapshot(snapshot, topology::load_ground_truth(truth_path), ctx);
        if (!id.empty()) input.id = id;
        std::cout << index.add(input, *ctx.provider) << "\t" << p.string() << "\n";
    }
    index.save(config.corpus);
    save_cassette(ctx.backend);
    return 0;
}

int cmd_eval(const std::string &cases_path, const std::string &store, const std::string &mode_text,
             const std::string &json_out, const CommonFlags &flags) {
    const auto mode = parse_mode(mode_text);
    std::vector<evaluation::EvalCase> cases;
    if (!cases_path.empty()) {
        if (!fs::exists(cases_path)) throw std::runtime_error("cases file not found: " + cases_path);
        cases = evaluation::parse_cases(topology::read_file(cases_path));
    } else if (!store.empty()) {
        // Leave-one-out: exemplars never come from the scenario being diagnosed.
        const auto config = resolve_config(flags);
        const auto ctx = app::make_context(config);
        // Rows follow the scenario catalogue order; unknown scenarios go last.
        const auto names = faultlab::scenario_names();
        std::vector<std::pair<std::size_t, evaluation::EvalCase>> ordered;
        for (const auto &entry : topology::validate_store(store).entries) {
            if (!entry.has_ground_truth) continue;
            const auto snapshot = topology::load_snapshot(entry.path);
            const auto truth = topology::load_ground_truth(topology::truth_path_for(entry.path));
            std::set<std::string> exclude;
            if (ctx.corpus)
                for (const auto &rec : ctx.corpus->records())
                    if (auto it = rec.metadata.find("scenario"); it != rec.metadata.end() && it->second == truth.scenario_name)
                        exclude.insert(rec.id);
            std::string predicted;
            try {
                const auto result = app::run_pipeline(snapshot, mode, ctx, exclude);
                if (result.diagnosis && !result.diagnosis->parse_failed) predicted = prediction_text(*result.diagnosis);
            } catch (const std::exception &e) {
                std::cerr << "warning: " << entry.snapshot_id << ": " << e.what() << "\n";
            }
            std::string usecase = truth.scenario_name;
            std::size_t order = names.size();
            try {
                const auto spec = faultlab::find_scenario(truth.scenario_name);
                usecase = spec.usecase;
                order = std::find(names.begin(), names.end(), spec.name) - names.begin();
            } catch (const std::invalid_argument &) {
            }
            ordered.push_back({order, {usecase, predicted, truth.gold_text()}});
        }
        std::stable_sort(ordered.begin(), ordered.end(),
                         [](const auto &a, const auto &b) { return a.first < b.first; });
        for (auto &[_, c] : ordered) cases.push_back(std::move(c));
        save_cassette(ctx.backend);
    } else {
        throw UsageError("eval needs --cases or --store");
    }
    const evaluation::HashedTokenEmbedder embedder;
    const retrieval::TrigramEmbeddingProvider provider;
    const auto suite = evaluation::run_eval_suite(cases, mode, embedder, provider);
    std::cout << suite.table;
    if (!json_out.empty()) topology::write_file(json_out, evaluation::results_to_json(suite.results));
    return 0;
}

app::DiagnosisService *g_service = nullptr;

void on_signal(int) {
    if (g_service) g_service->stop();
}

int cmd_serve(const std::string &bind, const CommonFlags &flags) {
    auto config = resolve_config(flags);
    if (!bind.empty()) config.bind = bind;
    const auto colon = config.bind.rfind(':');
    if (colon == std::string::npos) throw UsageError("--bind must look like host:port");
    const auto host = config.bind.substr(0, colon);
    int port = 0;
    try {
        port = std::stoi(config.bind.substr(colon + 1));
    } catch (const std::exception &) {
        throw UsageError("invalid port in '" + config.bind + "'");
    }
    auto ctx = app::make_context(config);
    const auto backend = ctx.backend;
    app::DiagnosisService service(std::move(ctx));
    port = service.bind(host, port);
    std::cout << "listening on " << host << ":" << port << std::endl;
    g_service = &service;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    service.run();
    g_service = nullptr;
    save_cassette(backend);
    return 0;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App cli{"Network root cause analysis"};
    cli.require_subcommand(1);

    std::string scenario, out_dir = "store";
    std::uint64_t seed = 0;
    std::size_t length = 200;
    auto *simulate = cli.add_subcommand("simulate", "Generate a fault scenario snapshot and its ground truth");
    simulate->add_option("--scenario", scenario, "scenario slug or 'all'")->required();
    simulate->add_option("--seed", seed, "random seed");
    simulate->add_option("--out", out_dir, "output store directory");
    simulate->add_option("--length", length, "samples per series");

    CommonFlags analyze_flags;
    std::string analyze_path;
    auto *analyze = cli.add_subcommand("analyze", "Print the ranked root-cause health report");
    analyze->add_option("snapshot", analyze_path, "snapshot file")->required();
    add_common(analyze, analyze_flags);

    CommonFlags diagnose_flags;
    std::string diagnose_path, diagnose_mode = "few_shot", diagnose_out;
    bool deterministic = false;
    auto *diagnose = cli.add_subcommand("diagnose", "Run the full diagnosis pipeline");
    diagnose->add_option("snapshot", diagnose_path, "snapshot file")->required();
    diagnose->add_option("--mode", diagnose_mode, "few_shot | zero_shot");
    diagnose->add_option("-o,--output", diagnose_out, "write the result here instead of stdout");
    diagnose->add_flag("--deterministic", deterministic, "omit stage durations for byte-stable output");
    add_common(diagnose, diagnose_flags);

    CommonFlags corpus_flags;
    std::vector<std::string> corpus_snapshots;
    std::string corpus_store, corpus_id;
    auto *corpus = cli.add_subcommand("corpus-add", "Add labelled snapshots to the incident corpus");
    corpus->add_option("--snapshot", corpus_snapshots, "snapshot with a sibling .truth.json");
    corpus->add_option("--store", corpus_store, "add every labelled snapshot in a store");
    corpus->add_option("--id", corpus_id, "record id (single snapshot only)");
    add_common(corpus, corpus_flags);

    CommonFlags eval_flags;
    std::string eval_cases, eval_store, eval_mode = "few_shot", eval_json;
    auto *eval = cli.add_subcommand("eval", "Score predictions against gold diagnoses");
    eval->add_option("--cases", eval_cases, "JSON array of {usecase, predicted, gold}");
    eval->add_option("--store", eval_store, "diagnose every labelled snapshot in a store and score it");
    eval->add_option("--mode", eval_mode, "few_shot | zero_shot");
    eval->add_option("--json", eval_json, "also write per-case results as JSON");
    add_common(eval, eval_flags);

    CommonFlags serve_flags;
    std::string bind;
    auto *serve = cli.add_subcommand("serve", "Serve POST /diagnose and GET /health");
    serve->add_option("--bind", bind, "host:port (port 0 picks a free port)");
    add_common(serve, serve_flags);

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return cli.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (*simulate) return cmd_simulate(scenario, seed, out_dir, length);
        if (*analyze) return cmd_analyze(analyze_path, analyze_flags);
        if (*diagnose) return cmd_diagnose(diagnose_path, diagnose_mode, deterministic, diagnose_out, diagnose_flags);
        if (*corpus) return cmd_corpus_add(corpus_snapshots, corpus_store, corpus_id, corpus_flags);
        if (*eval) return cmd_eval(eval_cases, eval_store, eval_mode, eval_json, eval_flags);
        if (*serve) return cmd_serve(bind, serve_flags);
    } catch (const UsageError &e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
