#include "rca/pipeline.hpp"

#include <chrono>
#include <functional>

#include <httplib.h>
#include <json.hpp>

namespace rca::app {

using nlohmann::json;
using diagnosis::PromptMode;

// ---- config ----

namespace {

template <typename T>
void take(const json &j, const char *key, T &out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void reject_unknown(const json &j, const std::set<std::string> &known, const std::string &where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto &[key, _] : j.items())
        if (!known.count(key)) throw ConfigError("unknown config key '" + where + "." + key + "'");
}

}  // namespace

void AppConfig::validate() const {
    stat.validate();
    ensemble.validate();
    static const std::set<std::string> backends = {"stub", "http", "replay", "record"};
    if (!backends.count(backend)) throw ConfigError("backend must be one of stub, http, replay, record");
    if (stub_mode != "template" && stub_mode != "echo") throw ConfigError("stub_mode must be template or echo");
    if (record_inner != "stub" && record_inner != "http") throw ConfigError("record_inner must be stub or http");
    if (provider != "trigram" && provider != "http") throw ConfigError("provider must be trigram or http");
    if (provider == "http" && provider_url.empty()) throw ConfigError("provider http needs provider_url");
    if (provider_dimension == 0) throw ConfigError("provider_dimension must be positive");
    if (retrieval_n < 1) throw ConfigError("retrieval_n must be at least 1");
    if (bind.find(':') == std::string::npos) throw ConfigError("bind must look like host:port");
}

AppConfig AppConfig::from_json(std::string_view raw) {
    AppConfig c;
    try {
        const auto j = json::parse(raw.begin(), raw.end());
        reject_unknown(j,
                       {"store", "corpus", "stat", "ensemble", "backend", "stub_mode", "record_inner", "cassette",
                        "provider", "provider_url", "provider_dimension", "bind", "retrieval_n",
                        "domain_knowledge"},
                       "$");
        std::string path;
        if (j.contains("store")) c.store = j.at("store").get<std::string>();
        if (j.contains("corpus")) c.corpus = j.at("corpus").get<std::string>();
        if (j.contains("cassette")) c.cassette = j.at("cassette").get<std::string>();
        if (j.contains("stat")) {
            const auto &s = j.at("stat");
            reject_unknown(s, {"max_lag", "alpha", "z_threshold", "damping", "pagerank_epsilon",
                               "pagerank_max_iters", "k"},
                           "$.stat");
            take(s, "max_lag", c.stat.max_lag);
            take(s, "alpha", c.stat.alpha);
            take(s, "z_threshold", c.stat.z_threshold);
            take(s, "damping", c.stat.damping);
            take(s, "pagerank_epsilon", c.stat.pagerank_epsilon);
            take(s, "pagerank_max_iters", c.stat.pagerank_max_iters);
            take(s, "k", c.stat.k);
        }
        if (j.contains("ensemble")) {
            const auto &e = j.at("ensemble");
            reject_unknown(e, {"num_agents", "aggregate"}, "$.ensemble");
            take(e, "num_agents", c.ensemble.num_agents);
            take(e, "aggregate", c.ensemble.aggregate);
        }
        take(j, "backend", c.backend);
        take(j, "stub_mode", c.stub_mode);
        take(j, "record_inner", c.record_inner);
        take(j, "provider", c.provider);
        take(j, "provider_url", c.provider_url);
        take(j, "provider_dimension", c.provider_dimension);
        take(j, "bind", c.bind);
        take(j, "retrieval_n", c.retrieval_n);
        take(j, "domain_knowledge", c.domain_knowledge);
    } catch (const json::exception &e) {
        throw ConfigError(std::string("invalid config: ") + e.what());
    }
    try {
        c.validate();
    } catch (const ConfigError &) {
        throw;
    } catch (const std::invalid_argument &e) {
        throw ConfigError(std::string("invalid config: ") + e.what());
    }
    return c;
}

AppConfig AppConfig::load(const std::filesystem::path &path) {
    return from_json(topology::read_file(path));
}

std::string AppConfig::to_json() const {
    json j = {{"store", store.string()},
              {"corpus", corpus.string()},
              {"stat",
               {{"max_lag", stat.max_lag},
                {"alpha", stat.alpha},
                {"z_threshold", stat.z_threshold},
                {"damping", stat.damping},
                {"pagerank_epsilon", stat.pagerank_epsilon},
                {"pagerank_max_iters", stat.pagerank_max_iters},
                {"k", stat.k}}},
              {"ensemble", {{"num_agents", ensemble.num_agents}, {"aggregate", ensemble.aggregate}}},
              {"backend", backend},
              {"stub_mode", stub_mode},
              {"record_inner", record_inner},
              {"cassette", cassette.string()},
              {"provider", provider},
              {"provider_url", provider_url},
              {"provider_dimension", provider_dimension},
              {"bind", bind},
              {"retrieval_n", retrieval_n},
              {"domain_knowledge", domain_knowledge}};
    return j.dump(2) + "\n";
}

std::shared_ptr<llm::LlmBackend> make_backend(const AppConfig &config) {
    auto stub = [&]() -> std::shared_ptr<llm::LlmBackend> {
        if (config.stub_mode == "echo") return llm::StubBackend::echo();
        return diagnosis::template_backend();
    };
    if (config.backend == "stub") return stub();
    if (config.backend == "http") return llm::HttpBackend::from_environment();
    if (config.backend == "replay") return llm::ReplayBackend::replay(config.cassette);
    if (config.backend == "record") {
        std::shared_ptr<llm::LlmBackend> inner =
            config.record_inner == "http" ? std::shared_ptr<llm::LlmBackend>(llm::HttpBackend::from_environment())
                                          : stub();
        return llm::ReplayBackend::record(config.cassette, inner);
    }
    throw ConfigError("unknown backend '" + config.backend + "'");
}

std::shared_ptr<retrieval::EmbeddingProvider> make_provider(const AppConfig &config) {
    if (config.provider == "http")
        return std::make_shared<retrieval::HttpEmbeddingProvider>(config.provider_url, "http",
                                                                  config.provider_dimension);
    return std::make_shared<retrieval::TrigramEmbeddingProvider>(config.provider_dimension);
}

PipelineContext make_context(const AppConfig &config) {
    config.validate();
    PipelineContext ctx;
    ctx.config = config;
    ctx.backend = make_backend(config);
    ctx.provider = make_provider(config);
    if (std::filesystem::exists(config.corpus))
        ctx.corpus = std::make_shared<const retrieval::VectorIndex>(retrieval::VectorIndex::load(config.corpus));
    return ctx;
}

// ---- result serialization ----

namespace {

json diagnosis_json(const diagnosis::DiagnosisReport &d) {
    json hyps = json::array();
    for (const auto &h : d.hypotheses) hyps.push_back({{"symptom", h.symptom}, {"text", h.text}});
    json plans = json::array();
    for (const auto &p : d.action_steps) plans.push_back({{"layer", p.layer}, {"node", p.node}, {"steps", p.steps}});
    return {{"symptom", d.symptom},
            {"hypotheses", std::move(hyps)},
            {"action_steps", std::move(plans)},
            {"reasoning_chain", d.reasoning_chain},
            {"raw_model_output", d.raw_model_output},
            {"parse_failed", d.parse_failed},
            {"notes", d.notes}};
}

diagnosis::DiagnosisReport diagnosis_from(const json &j) {
    diagnosis::DiagnosisReport d;
    d.symptom = j.at("symptom").get<std::string>();
    for (const auto &h : j.at("hypotheses"))
        d.hypotheses.push_back({h.at("symptom").get<std::string>(), h.at("text").get<std::string>()});
    for (const auto &p : j.at("action_steps"))
        d.action_steps.push_back({p.at("layer").get<std::string>(), p.at("node").get<std::string>(),
                                  p.at("steps").get<std::vector<std::string>>()});
    d.reasoning_chain = j.at("reasoning_chain").get<std::string>();
    d.raw_model_output = j.at("raw_model_output").get<std::string>();
    d.parse_failed = j.at("parse_failed").get<bool>();
    d.notes = j.at("notes").get<std::vector<std::string>>();
    return d;
}

}  // namespace

std::string result_to_json(const PipelineResult &r, const ResultJsonOptions &options) {
    json hits = json::array();
    for (const auto &h : r.retrieval_hits.hits) hits.push_back({{"record_id", h.record_id}, {"similarity", h.similarity}});
    json timings = json::array();
    for (const auto &t : r.timings) {
        json entry = {{"stage", t.stage}};
        if (options.include_durations) entry["ms"] = t.milliseconds;
        timings.push_back(std::move(entry));
    }
    json j = {{"mode", diagnosis::to_string(r.mode)},
              {"health_report", json::parse(statrca::report_to_json(r.health_report, -1))},
              {"health_status", r.health_report.status},
              {"symptom_summary", r.symptom_summary},
              {"prompt", r.prompt},
              {"diagnosis", r.diagnosis ? diagnosis_json(*r.diagnosis) : json(nullptr)},
              {"retrieval_hits", {{"n", r.retrieval_hits.n}, {"hits", std::move(hits)}}},
              {"timings", std::move(timings)},
              {"partial", r.partial},
              {"error", r.error},
              {"notes", r.notes}};
    return j.dump(options.indent) + "\n";
}

PipelineResult result_from_json(std::string_view raw) {
    try {
        const auto j = json::parse(raw.begin(), raw.end());
        PipelineResult r;
        r.mode = diagnosis::parse_prompt_mode(j.at("mode").get<std::string>());
        r.health_report = statrca::report_from_json(j.at("health_report").dump());
        r.health_report.status = j.at("health_status").get<std::string>();
        r.symptom_summary = j.at("symptom_summary").get<std::string>();
        r.prompt = j.at("prompt").get<std::string>();
        if (!j.at("diagnosis").is_null()) r.diagnosis = diagnosis_from(j.at("diagnosis"));
        const auto &hits = j.at("retrieval_hits");
        r.retrieval_hits.n = hits.at("n").get<std::size_t>();
        for (const auto &h : hits.at("hits"))
            r.retrieval_hits.hits.push_back({h.at("record_id").get<std::string>(), h.at("similarity").get<double>()});
        for (const auto &t : j.at("timings"))
            r.timings.push_back({t.at("stage").get<std::string>(), t.value("ms", 0.0)});
        r.partial = j.at("partial").get<bool>();
        r.error = j.at("error").get<std::string>();
        r.notes = j.at("notes").get<std::vector<std::string>>();
        return r;
    } catch (const json::exception &e) {
        throw PipelineError(std::string("invalid pipeline result: ") + e.what());
    }
}

// ---- pipeline ----

namespace {

class StageClock {
public:
    explicit StageClock(std::vector<StageTiming> &out) : out_(out) {}

    template <typename F>
    auto run(const char *stage, F &&f) {
        const auto start = std::chrono::steady_clock::now();
        auto record = [&] {
            out_.push_back({stage, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                                       .count()});
        };
        try {
            if constexpr (std::is_void_v<decltype(f())>) {
                f();
                record();
            } else {
                auto value = f();
                record();
                return value;
            }
        } catch (...) {
            record();
            throw;
        }
    }

private:
    std::vector<StageTiming> &out_;
};

std::vector<std::string> layer_names(const topology::TopologySnapshot &s) {
    std::vector<std::string> names;
    for (const auto &l : s.layers) names.push_back(l.name);
    return names;
}

}  // namespace

PipelineResult run_pipeline(const topology::TopologySnapshot &snapshot, PromptMode mode,
                            const PipelineContext &ctx, const std::set<std::string> &exclude_records) {
    if (!ctx.backend) throw PipelineError("pipeline context has no backend");
    if (!ctx.provider) throw PipelineError("pipeline context has no embedding provider");
    if (mode == PromptMode::FewShot && (!ctx.corpus || ctx.corpus->size() == 0))
        throw PipelineError("few-shot mode needs a non-empty corpus (looked for " + ctx.config.corpus.string() + ")");
    ctx.config.stat.validate(snapshot.series_length());

    PipelineResult r;
    r.mode = mode;
    StageClock clock(r.timings);
    llm::GenerationParams summary_params;
    summary_params.temperature = 0.0;

    try {
        r.symptom_summary = clock.run("summarize", [&] {
            return diagnosis::summarize_symptoms(snapshot, *ctx.backend, summary_params, ctx.config.stat.z_threshold);
        });
    } catch (const llm::BackendError &e) {
        r.partial = true;
        r.error = e.what();
    }

    r.health_report = clock.run("analyze", [&] { return statrca::analyze(snapshot, ctx.config.stat); });
    if (r.partial) return r;

    std::vector<diagnosis::Exemplar> exemplars;
    if (mode == PromptMode::FewShot) {
        clock.run("retrieve", [&] {
            const auto text = diagnosis::diagnostic_text(snapshot, r.symptom_summary, r.health_report);
            const auto n = static_cast<std::size_t>(ctx.config.retrieval_n);
            auto found = ctx.corpus->query(text, n + exclude_records.size(), *ctx.provider);
            r.retrieval_hits.n = n;
            for (const auto &hit : found.hits) {
                if (exclude_records.count(hit.record_id)) continue;
                if (r.retrieval_hits.hits.size() == n) break;
                r.retrieval_hits.hits.push_back(hit);
                const auto rec = ctx.corpus->find(hit.record_id);
                exemplars.push_back({rec->diagnostic_text, rec->gold_diagnosis, rec->gold_action_steps});
            }
        });
        if (exemplars.empty()) throw PipelineError("retrieval returned no usable exemplars");
    }

    const auto bundle = clock.run("build_prompt", [&] {
        return diagnosis::build_prompt(diagnosis::summarize_topology(snapshot), r.symptom_summary, r.health_report,
                                       std::move(exemplars), ctx.config.domain_knowledge, mode);
    });
    r.prompt = bundle.render();

    try {
        diagnosis::DiagnoseOptions options;
        options.known_layers = layer_names(snapshot);
        r.diagnosis = clock.run("diagnose", [&] {
            return diagnosis::diagnose(bundle, *ctx.backend, ctx.config.ensemble, llm::GenerationParams{}, options);
        });
    } catch (const llm::BackendError &e) {
        r.partial = true;
        r.error = e.what();
    }
    return r;
}

retrieval::IncidentInput incident_from_snapshot(const topology::TopologySnapshot &snapshot,
                                                const topology::GroundTruth &truth, const PipelineContext &ctx) {
    topology::check_truth_matches(truth, snapshot);
    llm::GenerationParams params;
    params.temperature = 0.0;
    const auto summary =
        diagnosis::summarize_symptoms(snapshot, *ctx.backend, params, ctx.config.stat.z_threshold);
    const auto report = statrca::analyze(snapshot, ctx.config.stat);
    retrieval::IncidentInput in;
    in.diagnostic_text = diagnosis::diagnostic_text(snapshot, summary, report);
    in.gold_diagnosis = truth.gold_diagnosis;
    in.gold_action_steps = truth.gold_action_steps;
    in.metadata = {{"topology_id", snapshot.topology_id}, {"scenario", truth.scenario_name}};
    return in;
}

// ---- service ----

struct DiagnosisService::Impl {
    PipelineContext context;
    httplib::Server server;
};

DiagnosisService::DiagnosisService(PipelineContext context) : impl_(std::make_unique<Impl>()) {
    impl_->context = std::move(context);
    impl_->server.Post("/diagnose", [this](const httplib::Request &req, httplib::Response &res) {
        const auto reply = diagnose(req.body, req.has_param("mode") ? req.get_param_value("mode") : "few_shot");
        res.status = reply.status;
        res.set_content(reply.body, "application/json");
    });
    impl_->server.Get("/health", [](const httplib::Request &, httplib::Response &res) {
        res.set_content("{\"status\":\"ok\"}\n", "application/json");
    });
}

DiagnosisService::~DiagnosisService() { stop(); }

HttpReply DiagnosisService::diagnose(const std::string &body, const std::string &mode_text) const {
    auto error_body = [](const std::string &message, const std::string &where = {}) {
        json j = {{"error", message}};
        if (!where.empty()) j["where"] = where;
        return j.dump() + "\n";
    };
    PromptMode mode;
    try {
        mode = diagnosis::parse_prompt_mode(mode_text);
    } catch (const std::invalid_argument &e) {
        return {400, error_body(e.what())};
    }
    topology::TopologySnapshot snapshot;
    try {
        snapshot = topology::parse_snapshot(body);
    } catch (const topology::SnapshotError &e) {
        return {400, error_body(e.what(), e.where())};
    }
    try {
        const auto result = run_pipeline(snapshot, mode, impl_->context);
        return {result.partial ? 502 : 200, result_to_json(result)};
    } catch (const std::invalid_argument &e) {
        return {400, error_body(e.what())};
    } catch (const std::exception &e) {
        return {500, error_body(e.what())};
    }
}

int DiagnosisService::bind(const std::string &host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    if (!impl_->server.bind_to_port(host, port))
        throw PipelineError("cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void DiagnosisService::run() { impl_->server.listen_after_bind(); }

void DiagnosisService::stop() {
    if (impl_) impl_->server.stop();
}

}  // namespace rca::app
