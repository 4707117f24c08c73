#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "rca/llm.hpp"
#include "rca/statrca.hpp"
#include "rca/topology.hpp"

namespace rca::diagnosis {

enum class PromptMode { FewShot, ZeroShot };

std::string to_string(PromptMode mode);
/// Accepts "few_shot" / "zero_shot" (hyphens allowed). Throws std::invalid_argument.
PromptMode parse_prompt_mode(std::string_view text);

struct Exemplar {
    std::string diagnostic_text;
    std::string gold_diagnosis;
    std::vector<std::string> action_steps;
};

/// Prompt sections in their fixed rendering order.
struct PromptBundle {
    PromptMode mode = PromptMode::ZeroShot;
    std::string role_instruction;
    std::string domain_knowledge;  // optional
    std::string topology_summary;
    std::string symptom_description;
    std::string health_report;
    std::vector<Exemplar> exemplars;  // empty in zero-shot mode
    std::string cot_instruction;
    std::string output_format;

    /// (heading, body) for all eight sections, including empty ones.
    std::vector<std::pair<std::string, std::string>> sections() const;
    std::size_t non_empty_sections() const;

    /// Renders the non-empty sections as one prompt. Pure.
    std::string render() const;
};

struct Hypothesis {
    std::string symptom;
    std::string text;

    bool operator==(const Hypothesis &) const = default;
};

struct ActionPlan {
    std::string layer;
    std::string node;
    std::vector<std::string> steps;

    bool operator==(const ActionPlan &) const = default;
};

struct DiagnosisReport {
    std::string symptom;  // all symptoms, "; "-joined
    std::vector<Hypothesis> hypotheses;
    std::vector<ActionPlan> action_steps;
    std::string reasoning_chain;
    std::string raw_model_output;
    bool parse_failed = false;
    std::vector<std::string> notes;
};

struct EnsembleConfig {
    int num_agents = 3;
    bool aggregate = true;

    void validate() const;
};

struct DiagnoseOptions {
    double draft_temperature = 0.7;
    double aggregator_temperature = 0.0;
    std::size_t max_prompt_chars = 400'000;
    /// Layer names of the analysed snapshot; action plans naming other layers are dropped.
    std::vector<std::string> known_layers;
};

class DiagnosisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Compact JSON rendering of layers, nodes, edges and per-series summary statistics.
std::string summarize_topology(const topology::TopologySnapshot &s);

/// Prompt for the intermediate symptom-summary call; lists only rank-0 metrics
/// and names every anomalous one.
std::string symptom_prompt(const topology::TopologySnapshot &s, double z_threshold = 3.0);

/// One backend call over symptom_prompt(s). Throws llm::BackendError on failure
/// or an empty answer.
std::string summarize_symptoms(const topology::TopologySnapshot &s, const llm::LlmBackend &backend,
                               const llm::GenerationParams &params, double z_threshold = 3.0);

/// Top-k table of the health report with the rank-1 rows marked.
std::string render_health_report(const statrca::HealthReport &report);

/// Text embedded for retrieval: topology identity, symptoms and the health report.
std::string diagnostic_text(const topology::TopologySnapshot &s, const std::string &symptom_summary,
                            const statrca::HealthReport &report);

/// Throws DiagnosisError in few-shot mode without exemplars.
PromptBundle build_prompt(std::string topology_summary, std::string symptom_summary,
                          const statrca::HealthReport &report, std::vector<Exemplar> exemplars,
                          std::string domain_knowledge, PromptMode mode);

/// The mixture-of-agents consensus prompt wrapping the drafts.
std::string aggregator_prompt(const std::string &prompt, const std::vector<std::string> &drafts);

/// M draft calls, then (M > 1 and aggregation on) one aggregator call, then parse.
/// Throws llm::BackendError if every draft fails, DiagnosisError if the prompt is too long.
DiagnosisReport diagnose(const PromptBundle &bundle, const llm::LlmBackend &backend, const EnsembleConfig &ens,
                         const llm::GenerationParams &params, const DiagnoseOptions &options = {});

/// Extracts Symptom / Root cause hypothesis / Action Steps / Reasoning sections.
/// Never throws; unparseable text gives parse_failed = true.
DiagnosisReport parse_report(const std::string &text);

/// Canonical labeled-section text; parse_report(render_report(r)) reproduces r.
std::string render_report(const DiagnosisReport &report);

/// Maps action plan layers onto `layers` (case-insensitive, singular/plural tolerant)
/// and drops plans naming unknown layers, noting each drop.
void restrict_to_layers(DiagnosisReport &report, const std::vector<std::string> &layers);

/// Offline stub that writes labelled-section answers from the prompt alone: a symptom
/// summary for symptom prompts, a diagnosis built on the rank-1 health-report row
/// for diagnosis prompts, and the first draft for aggregator prompts.
std::shared_ptr<llm::LlmBackend> template_backend();

}  // namespace rca::diagnosis
