#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "rca/diagnosis.hpp"
#include "rca/llm.hpp"
#include "rca/retrieval.hpp"
#include "rca/statrca.hpp"
#include "rca/topology.hpp"

namespace rca::app {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Raised for requests the pipeline cannot serve (e.g. few-shot without a corpus).
class PipelineError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct AppConfig {
    std::filesystem::path store = "store";
    std::filesystem::path corpus = "corpus.json";
    statrca::StatConfig stat;
    diagnosis::EnsembleConfig ensemble;
    std::string backend = "stub";         // stub | http | replay | record
    std::string stub_mode = "template";   // template | echo
    std::string record_inner = "stub";    // backend wrapped by record mode: stub | http
    std::filesystem::path cassette = "cassette.json";
    std::string provider = "trigram";     // trigram | http
    std::string provider_url;
    std::size_t provider_dimension = 256;
    std::string bind = "127.0.0.1:8080";
    int retrieval_n = 3;
    std::string domain_knowledge;

    void validate() const;

    /// Unknown keys are rejected. Missing keys keep their defaults.
    static AppConfig from_json(std::string_view raw);
    static AppConfig load(const std::filesystem::path &path);
    std::string to_json() const;
};

std::shared_ptr<llm::LlmBackend> make_backend(const AppConfig &config);
std::shared_ptr<retrieval::EmbeddingProvider> make_provider(const AppConfig &config);

struct StageTiming {
    std::string stage;
    double milliseconds = 0.0;
};

struct PipelineResult {
    diagnosis::PromptMode mode = diagnosis::PromptMode::FewShot;
    statrca::HealthReport health_report;
    std::string symptom_summary;
    std::string prompt;
    std::optional<diagnosis::DiagnosisReport> diagnosis;
    retrieval::RetrievalResult retrieval_hits;
    std::vector<StageTiming> timings;  // execution order
    bool partial = false;
    std::string error;
    std::vector<std::string> notes;
};

struct ResultJsonOptions {
    // Off gives byte-stable output: stage names are kept, durations dropped.
    bool include_durations = true;
    int indent = 2;
};

std::string result_to_json(const PipelineResult &result, const ResultJsonOptions &options = {});
PipelineResult result_from_json(std::string_view raw);

/// Everything shared read-only between requests.
struct PipelineContext {
    AppConfig config;
    std::shared_ptr<const llm::LlmBackend> backend;
    std::shared_ptr<const retrieval::EmbeddingProvider> provider;
    std::shared_ptr<const retrieval::VectorIndex> corpus;  // may be null in zero-shot use
};

/// Loads the corpus named by config when the file exists.
PipelineContext make_context(const AppConfig &config);

/// summarize -> analyze -> retrieve (few-shot only) -> build_prompt -> diagnose.
/// A backend failure stops the run with partial = true; the health report is
/// always computed. Records in `exclude_records` are never used as exemplars.
PipelineResult run_pipeline(const topology::TopologySnapshot &snapshot, diagnosis::PromptMode mode,
                            const PipelineContext &context, const std::set<std::string> &exclude_records = {});

/// Diagnostic text plus gold answer for adding a labelled snapshot to the corpus.
retrieval::IncidentInput incident_from_snapshot(const topology::TopologySnapshot &snapshot,
                                                const topology::GroundTruth &truth,
                                                const PipelineContext &context);

struct HttpReply {
    int status = 200;
    std::string body;
};

/// POST /diagnose?mode=... and GET /health over a shared context.
class DiagnosisService {
public:
    explicit DiagnosisService(PipelineContext context);
    ~DiagnosisService();

    DiagnosisService(const DiagnosisService &) = delete;
    DiagnosisService &operator=(const DiagnosisService &) = delete;

    /// Request handling without sockets.
    HttpReply diagnose(const std::string &body, const std::string &mode) const;

    /// Port 0 picks a free port. Returns the bound port.
    int bind(const std::string &host, int port);
    /// Blocks until stop().
    void run();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace rca::app
