#include "rca/diagnosis.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <future>
#include <regex>
#include <sstream>

#include <json.hpp>

namespace rca::diagnosis {

using statrca::HealthReport;
using topology::TopologySnapshot;

namespace {

constexpr const char *kRoleInstruction =
    "You are an on-call network reliability engineer performing root cause analysis across a "
    "layered network topology. Form a hypothesis for the root cause of every observed "
    "application issue, and for each issue give specific action steps that resolve it.";

constexpr const char *kCotInstruction =
    "Think step by step before answering: list the observed symptoms, form several candidate "
    "root-cause hypotheses, test each one against the topology, the telemetry and the health "
    "report, discard the hypotheses the data contradicts, and only then give your final answer.";

constexpr const char *kOutputFormat =
    "Answer with exactly these labeled sections. Repeat the Symptom and Root cause hypothesis "
    "pair once per distinct symptom.\n"
    "Symptom: <the observed application-layer symptom>\n"
    "Root cause hypothesis: <two to three sentences naming the layer, node and metric at fault "
    "and how it affects the applications>\n"
    "Action Steps on <Layer> Layer Node <node>:\n"
    "1. <first action>\n"
    "2. <second action>\n"
    "Reasoning: <your step-by-step reasoning chain>";

constexpr const char *kSymptomPreamble =
    "Summarize the application-layer telemetry below for an on-call network engineer. Explain "
    "what each anomalous metric means in a real network and highlight every anomaly. Reply with "
    "two to four sentences.";

constexpr const char *kConsensusInstruction =
    "Several analysts answered the incident above independently. Synthesize their drafts into "
    "one answer: keep the hypotheses most drafts support, resolve disagreements using the "
    "telemetry and the health report, and reply in the output format requested above.";

constexpr const char *kHealthHeading = "System data health report";
constexpr const char *kCandidatesHeading = "Candidate diagnoses";
constexpr const char *kTopMarker = "1 (most likely)";

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
    for (auto &c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::vector<std::string> split_lines(const std::string &text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    return lines;
}

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

double rounded(double v) { return std::stod(format_number(v)); }

double mean_of(const std::vector<double> &v, std::size_t from, std::size_t to) {
    double sum = 0.0;
    for (std::size_t i = from; i < to; ++i) sum += v[i];
    return to > from ? sum / static_cast<double>(to - from) : 0.0;
}

bool is_anomalous(const topology::MetricSeries &m, double z_threshold) {
    if (m.anomalous) return *m.anomalous;
    try {
        return stats::max_abs_zscore(m.values) > z_threshold;
    } catch (const stats::DegenerateSeries &) {
        return false;
    }
}

}  // namespace

std::string to_string(PromptMode mode) { return mode == PromptMode::FewShot ? "few_shot" : "zero_shot"; }

PromptMode parse_prompt_mode(std::string_view text) {
    auto t = lower(std::string(text));
    std::replace(t.begin(), t.end(), '-', '_');
    if (t == "few_shot") return PromptMode::FewShot;
    if (t == "zero_shot") return PromptMode::ZeroShot;
    throw std::invalid_argument("unknown prompt mode '" + std::string(text) + "' (expected few_shot or zero_shot)");
}

std::vector<std::pair<std::string, std::string>> PromptBundle::sections() const {
    std::ostringstream examples;
    for (std::size_t i = 0; i < exemplars.size(); ++i) {
        const auto &ex = exemplars[i];
        if (i > 0) examples << "\n\n";
        examples << "### Past incident " << (i + 1) << "\n"
                 << "Diagnostic information:\n" << ex.diagnostic_text << "\n"
                 << "Gold diagnosis:\n" << ex.gold_diagnosis << "\n"
                 << "Action steps:";
        for (std::size_t j = 0; j < ex.action_steps.size(); ++j)
            examples << "\n" << (j + 1) << ". " << ex.action_steps[j];
    }
    return {{"Role", role_instruction},
            {"Operator domain knowledge", domain_knowledge},
            {"Network topology", topology_summary},
            {"Application symptoms", symptom_description},
            {kHealthHeading, health_report},
            {"Past incidents", examples.str()},
            {"Reasoning instructions", cot_instruction},
            {"Output format", output_format}};
}

std::size_t PromptBundle::non_empty_sections() const {
    const auto all = sections();
    return static_cast<std::size_t>(
        std::count_if(all.begin(), all.end(), [](const auto &s) { return !trim(s.second).empty(); }));
}

std::string PromptBundle::render() const {
    std::string out;
    for (const auto &[heading, body] : sections()) {
        if (trim(body).empty()) continue;
        if (!out.empty()) out += "\n\n";
        out += "## " + heading + "\n" + body;
    }
    out += "\n";
    return out;
}

void EnsembleConfig::validate() const {
    if (num_agents < 1) throw std::invalid_argument("ensemble needs at least one agent");
}

std::string summarize_topology(const TopologySnapshot &s) {
    using nlohmann::ordered_json;
    ordered_json layers = ordered_json::array();
    auto sorted_layers = s.layers;
    std::sort(sorted_layers.begin(), sorted_layers.end(),
              [](const auto &a, const auto &b) { return a.rank < b.rank; });
    for (const auto &l : sorted_layers) layers.push_back({{"name", l.name}, {"rank", l.rank}});

    ordered_json nodes = ordered_json::array();
    for (const auto &n : s.nodes) {
        ordered_json metrics = ordered_json::object();
        for (const auto &[name, m] : n.metrics) {
            const auto [lo, hi] = std::minmax_element(m.values.begin(), m.values.end());
            ordered_json entry = {{"unit", m.unit},
                                  {"mean", rounded(mean_of(m.values, 0, m.values.size()))},
                                  {"min", rounded(*lo)},
                                  {"max", rounded(*hi)},
                                  {"last", rounded(m.values.back())}};
            if (m.anomalous && *m.anomalous) entry["anomalous"] = true;
            metrics[name] = std::move(entry);
        }
        nodes.push_back({{"id", n.id}, {"layer", n.layer}, {"metrics", std::move(metrics)}});
    }
    ordered_json edges = ordered_json::array();
    for (const auto &e : s.edges) edges.push_back(ordered_json::array({e.source, e.target}));

    ordered_json j = {{"topology_id", s.topology_id},
                      {"timestamp", s.timestamp},
                      {"samples", s.series_length()},
                      {"layers", std::move(layers)},
                      {"nodes", std::move(nodes)},
                      {"edges", std::move(edges)}};
    return j.dump(1);
}

std::string symptom_prompt(const TopologySnapshot &s, double z_threshold) {
    const auto *app = s.application_layer();
    if (!app) throw DiagnosisError("snapshot has no application layer (rank 0)");

    std::ostringstream anomalous, normal;
    std::size_t metric_count = 0;
    for (const auto &n : s.nodes) {
        if (n.layer != app->name) continue;
        for (const auto &[name, m] : n.metrics) {
            ++metric_count;
            const auto half = m.values.size() / 2;
            if (is_anomalous(m, z_threshold)) {
                const auto peak = *std::max_element(m.values.begin(), m.values.end());
                anomalous << "- node=" << n.id << ", metric=" << name << ", unit=" << m.unit
                          << ", baseline_mean=" << format_number(mean_of(m.values, 0, half))
                          << ", recent_mean=" << format_number(mean_of(m.values, half, m.values.size()))
                          << ", peak=" << format_number(peak) << "\n";
            } else {
                normal << "- node=" << n.id << ", metric=" << name << ", unit=" << m.unit
                       << ", mean=" << format_number(mean_of(m.values, 0, m.values.size())) << "\n";
            }
        }
    }
    std::ostringstream out;
    out << kSymptomPreamble << "\n\n"
        << "Application layer: " << app->name << "\n"
        << "Application metrics: " << metric_count << "\n"
        << "Anomalous metrics:\n";
    const auto a = anomalous.str();
    out << (a.empty() ? "- none\n" : a);
    out << "Other metrics:\n";
    const auto o = normal.str();
    out << (o.empty() ? "- none\n" : o);
    return out.str();
}

std::string summarize_symptoms(const TopologySnapshot &s, const llm::LlmBackend &backend,
                               const llm::GenerationParams &params, double z_threshold) {
    const auto prompt = symptom_prompt(s, z_threshold);
    auto text = trim(backend.generate(prompt, params));
    if (text.empty()) throw llm::BackendError("backend '" + backend.name() + "' returned an empty symptom summary");
    return text;
}

std::string render_health_report(const HealthReport &report) {
    if (report.ranked_causes.empty())
        return "No anomalous series were ranked by the statistical analysis.";
    std::ostringstream out;
    out << "Statistical RCA ranking, top " << report.k << " (rank 1 = most likely root cause):\n"
        << "| Rank | Layer | Node | Metric | Score |\n"
        << "| --- | --- | --- | --- | --- |";
    std::size_t rows = 0;
    for (const auto &c : report.ranked_causes) {
        if (rows == static_cast<std::size_t>(std::max(report.k, 1))) break;
        char score[32];
        std::snprintf(score, sizeof score, "%.4f", c.score);
        out << "\n| " << (c.rank == 1 ? kTopMarker : std::to_string(c.rank)) << " | " << c.ref.layer << " | "
            << c.ref.node_id << " | " << c.ref.metric << " | " << score << " |";
        ++rows;
    }
    return out.str();
}

std::string diagnostic_text(const TopologySnapshot &s, const std::string &symptom_summary,
                            const HealthReport &report) {
    auto layers = s.layers;
    std::sort(layers.begin(), layers.end(), [](const auto &a, const auto &b) { return a.rank < b.rank; });
    std::ostringstream out;
    out << "Topology: " << s.topology_id << " (layers:";
    for (std::size_t i = 0; i < layers.size(); ++i) out << (i ? ", " : " ") << layers[i].name;
    out << ")\nSymptoms: " << trim(symptom_summary) << "\nHealth report:\n" << render_health_report(report);
    return out.str();
}

PromptBundle build_prompt(std::string topology_summary, std::string symptom_summary, const HealthReport &report,
                          std::vector<Exemplar> exemplars, std::string domain_knowledge, PromptMode mode) {
    if (mode == PromptMode::FewShot && exemplars.empty())
        throw DiagnosisError("few-shot prompting needs at least one exemplar");
    PromptBundle b;
    b.mode = mode;
    b.role_instruction = kRoleInstruction;
    b.domain_knowledge = trim(domain_knowledge);
    b.topology_summary = std::move(topology_summary);
    b.symptom_description = trim(symptom_summary);
    b.health_report = render_health_report(report);
    if (mode == PromptMode::FewShot) b.exemplars = std::move(exemplars);
    b.cot_instruction = kCotInstruction;
    b.output_format = kOutputFormat;
    return b;
}

std::string aggregator_prompt(const std::string &prompt, const std::vector<std::string> &drafts) {
    std::ostringstream out;
    out << prompt << "\n## " << kCandidatesHeading << "\n";
    for (std::size_t i = 0; i < drafts.size(); ++i) out << "\n### Draft " << (i + 1) << "\n" << drafts[i] << "\n";
    out << "\n## Consensus instruction\n" << kConsensusInstruction << "\n";
    return out.str();
}

DiagnosisReport diagnose(const PromptBundle &bundle, const llm::LlmBackend &backend, const EnsembleConfig &ens,
                         const llm::GenerationParams &params, const DiagnoseOptions &options) {
    ens.validate();
    const auto prompt = bundle.render();
    if (prompt.size() > options.max_prompt_chars)
        throw DiagnosisError("prompt of " + std::to_string(prompt.size()) + " characters exceeds the limit of " +
                             std::to_string(options.max_prompt_chars));

    std::vector<std::future<std::string>> pending;
    for (int i = 0; i < ens.num_agents; ++i) {
        auto draft_params = params;
        draft_params.temperature = options.draft_temperature;
        draft_params.sample = static_cast<unsigned>(i);
        pending.push_back(std::async(std::launch::async, [&backend, &prompt, draft_params] {
            return backend.generate(prompt, draft_params);
        }));
    }

    std::vector<std::string> drafts;
    std::vector<std::string> notes;
    for (std::size_t i = 0; i < pending.size(); ++i) {
        try {
            drafts.push_back(pending[i].get());
        } catch (const std::exception &e) {
            notes.push_back("draft " + std::to_string(i + 1) + " dropped: " + e.what());
        }
    }
    if (drafts.empty()) {
        std::string detail;
        for (const auto &n : notes) detail += "; " + n;
        throw llm::BackendError("all " + std::to_string(ens.num_agents) + " draft calls failed" + detail);
    }

    std::string final_text = drafts.front();
    if (ens.aggregate && ens.num_agents > 1) {
        auto agg_params = params;
        agg_params.temperature = options.aggregator_temperature;
        agg_params.sample = 0;
        try {
            final_text = backend.generate(aggregator_prompt(prompt, drafts), agg_params);
        } catch (const std::exception &e) {
            notes.push_back(std::string("aggregator failed, using the first surviving draft: ") + e.what());
        }
    }

    auto report = parse_report(final_text);
    report.notes.insert(report.notes.begin(), notes.begin(), notes.end());
    if (!options.known_layers.empty()) restrict_to_layers(report, options.known_layers);
    return report;
}

namespace {

enum class Section { None, Symptom, Hypothesis, Actions, Reasoning };

struct Header {
    Section section = Section::None;
    std::string content;
    std::string layer;
    std::string node;
};

std::string strip_markup(std::string line) {
    for (const char *token : {"**", "__"}) {
        for (auto pos = line.find(token); pos != std::string::npos; pos = line.find(token))
            line.erase(pos, 2);
    }
    line = trim(line);
    if (!line.empty() && line.front() == '|') {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream in(line);
        while (std::getline(in, cell, '|')) {
            cell = trim(cell);
            if (!cell.empty()) cells.push_back(cell);
        }
        if (cells.empty()) return {};
        // Markdown table separator rows carry no content.
        if (std::all_of(cells.begin(), cells.end(),
                        [](const std::string &c) { return c.find_first_not_of("-: ") == std::string::npos; }))
            return {};
        line = cells.front();
        if (cells.size() > 1) {
            line += ":";
            for (std::size_t i = 1; i < cells.size(); ++i) line += " " + cells[i];
        }
    }
    std::size_t i = 0;
    while (i < line.size() && (line[i] == '#' || line[i] == '>')) ++i;
    return trim(line.substr(i));
}

Header detect_header(const std::string &line) {
    static const std::regex action_label(
        R"(^action\s+steps?(?:\s+on\s+(?:the\s+)?(.+?)\s+layer(?:\s+node\s+(.+))?)?$)", std::regex::icase);
    static const std::regex bullet_prefix(R"(^(?:[-*]\s+|\d+[.)]\s+))");

    Header h;
    const auto colon = line.find(':');
    if (colon == std::string::npos || colon > 120) return h;
    auto label = trim(std::regex_replace(line.substr(0, colon), bullet_prefix, ""));
    auto key = lower(label);
    key = std::regex_replace(key, std::regex(R"(\s*#?\d+$)"), "");
    h.content = trim(line.substr(colon + 1));

    if (key == "symptom" || key == "symptoms") {
        h.section = Section::Symptom;
    } else if (key == "root cause hypothesis" || key == "root-cause hypothesis" || key == "hypothesis" ||
               key == "root cause") {
        h.section = Section::Hypothesis;
    } else if (key == "reasoning" || key == "reasoning chain" || key == "chain of thought") {
        h.section = Section::Reasoning;
    } else {
        std::smatch m;
        if (std::regex_match(label, m, action_label)) {
            h.section = Section::Actions;
            h.layer = trim(m[1].str());
            h.node = trim(m[2].str());
        }
    }
    return h;
}

std::string join(const std::vector<std::string> &parts, const std::string &sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
    return out;
}

}  // namespace

DiagnosisReport parse_report(const std::string &text) {
    static const std::regex step_marker(R"(^(?:\d+[.)]|[-*])\s+(.*)$)");

    DiagnosisReport report;
    report.raw_model_output = text;

    std::vector<std::string> symptoms;
    std::string current_symptom;
    std::vector<std::string> buffer;
    Section section = Section::None;
    std::vector<std::string> reasoning;

    auto flush = [&] {
        if (section == Section::Symptom) {
            current_symptom = join(buffer, " ");
            symptoms.push_back(current_symptom);
        } else if (section == Section::Hypothesis) {
            auto body = join(buffer, " ");
            if (!body.empty()) report.hypotheses.push_back({current_symptom, body});
        } else if (section == Section::Reasoning) {
            reasoning.insert(reasoning.end(), buffer.begin(), buffer.end());
        }
        buffer.clear();
    };

    for (const auto &raw : split_lines(text)) {
        const auto line = strip_markup(raw);
        const auto header = detect_header(line);
        if (header.section != Section::None) {
            flush();
            section = header.section;
            if (section == Section::Actions) {
                report.action_steps.push_back({header.layer, header.node, {}});
                if (!header.content.empty()) report.action_steps.back().steps.push_back(header.content);
            } else if (!header.content.empty()) {
                buffer.push_back(header.content);
            }
            continue;
        }
        if (line.empty()) continue;
        if (section == Section::Actions) {
            auto &steps = report.action_steps.back().steps;
            std::smatch m;
            if (std::regex_match(line, m, step_marker))
                steps.push_back(trim(m[1].str()));
            else if (steps.empty())
                steps.push_back(line);
            else
                steps.back() += " " + line;
        } else if (section != Section::None) {
            buffer.push_back(line);
        }
    }
    flush();

    std::erase_if(report.action_steps, [](const ActionPlan &p) { return p.steps.empty(); });
    report.reasoning_chain = join(reasoning, "\n");
    std::vector<std::string> unique_symptoms;
    for (const auto &s : symptoms)
        if (!s.empty() && std::find(unique_symptoms.begin(), unique_symptoms.end(), s) == unique_symptoms.end())
            unique_symptoms.push_back(s);
    report.symptom = join(unique_symptoms, "; ");

    if (report.hypotheses.empty()) {
        report.symptom.clear();
        report.action_steps.clear();
        report.reasoning_chain.clear();
        report.parse_failed = true;
        report.notes.push_back("model output has no root cause hypothesis section");
    }
    return report;
}

std::string render_report(const DiagnosisReport &report) {
    std::ostringstream out;
    for (const auto &h : report.hypotheses)
        out << "Symptom: " << h.symptom << "\n" << "Root cause hypothesis: " << h.text << "\n";
    for (const auto &plan : report.action_steps) {
        out << "Action Steps";
        if (!plan.layer.empty()) {
            out << " on " << plan.layer << " Layer";
            if (!plan.node.empty()) out << " Node " << plan.node;
        }
        out << ":\n";
        for (std::size_t i = 0; i < plan.steps.size(); ++i) out << (i + 1) << ". " << plan.steps[i] << "\n";
    }
    if (!report.reasoning_chain.empty()) out << "Reasoning: " << report.reasoning_chain << "\n";
    return out.str();
}

namespace {

std::string layer_key(const std::string &name) {
    std::string key;
    for (unsigned char c : name)
        if (std::isalnum(c)) key.push_back(static_cast<char>(std::tolower(c)));
    if (key.size() > 1 && key.back() == 's') key.pop_back();
    return key;
}

}  // namespace

void restrict_to_layers(DiagnosisReport &report, const std::vector<std::string> &layers) {
    std::vector<ActionPlan> kept;
    for (auto &plan : report.action_steps) {
        auto it = std::find_if(layers.begin(), layers.end(),
                               [&](const std::string &l) { return layer_key(l) == layer_key(plan.layer); });
        if (it == layers.end() || plan.layer.empty()) {
            report.notes.push_back("dropped action steps for unknown layer '" + plan.layer + "'");
            continue;
        }
        plan.layer = *it;
        kept.push_back(std::move(plan));
    }
    report.action_steps = std::move(kept);
}

namespace {

struct TemplateRow {
    std::string layer;
    std::string node;
    std::string metric;
};

std::optional<TemplateRow> top_row(const std::string &prompt) {
    const std::string needle = std::string("| ") + kTopMarker + " |";
    const auto pos = prompt.find(needle);
    if (pos == std::string::npos) return std::nullopt;
    const auto end = prompt.find('\n', pos);
    const auto row = prompt.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    std::vector<std::string> cells;
    std::istringstream in(row);
    for (std::string cell; std::getline(in, cell, '|');)
        if (!trim(cell).empty()) cells.push_back(trim(cell));
    if (cells.size() < 4) return std::nullopt;
    return TemplateRow{cells[1], cells[2], cells[3]};
}

std::string section_body(const std::string &prompt, const std::string &heading) {
    const auto start = prompt.find("## " + heading + "\n");
    if (start == std::string::npos) return {};
    const auto body = start + heading.size() + 4;
    const auto end = prompt.find("\n\n## ", body);
    return prompt.substr(body, end == std::string::npos ? std::string::npos : end - body);
}

std::string template_summary(const std::string &prompt) {
    std::string app_layer = "application";
    std::string metric_count = "0";
    std::vector<std::string> findings;
    bool in_anomalies = false;
    for (const auto &line : split_lines(prompt)) {
        if (line.rfind("Application layer: ", 0) == 0) app_layer = line.substr(19);
        if (line.rfind("Application metrics: ", 0) == 0) metric_count = line.substr(21);
        if (line == "Anomalous metrics:") {
            in_anomalies = true;
            continue;
        }
        if (line == "Other metrics:") in_anomalies = false;
        if (!in_anomalies || line.rfind("- node=", 0) != 0) continue;
        std::map<std::string, std::string> fields;
        std::istringstream in(line.substr(2));
        for (std::string kv; std::getline(in, kv, ',');) {
            kv = trim(kv);
            const auto eq = kv.find('=');
            if (eq != std::string::npos) fields[kv.substr(0, eq)] = kv.substr(eq + 1);
        }
        findings.push_back(fields["metric"] + " on node " + fields["node"] + " moved from a baseline mean of " +
                           fields["baseline_mean"] + " to " + fields["recent_mean"] + " " + fields["unit"] +
                           " (peak " + fields["peak"] + ")");
    }
    if (findings.empty())
        return "No application-layer anomalies detected across " + metric_count + " " + app_layer + " layer metrics.";
    return "Application-layer anomalies detected in the " + app_layer + " layer: " + join(findings, "; ") + ".";
}

std::string template_diagnosis(const std::string &prompt) {
    auto symptom = trim(section_body(prompt, "Application symptoms"));
    if (auto colon = symptom.find(':'); colon != std::string::npos) symptom = symptom.substr(0, colon);
    if (auto dot = symptom.find(". "); dot != std::string::npos) symptom = symptom.substr(0, dot);
    if (symptom.empty()) symptom = "Degraded application-layer performance";

    const auto row = top_row(prompt);
    std::ostringstream out;
    out << "Symptom: " << symptom << "\n";
    if (!row) {
        out << "Root cause hypothesis: The statistical analysis ranked no anomalous series, so no root cause can "
               "be localized from the available telemetry.\n"
            << "Reasoning: The health report is empty; there is no causal evidence to follow.\n";
        return out.str();
    }
    out << "Root cause hypothesis: The root cause is likely the anomalous " << row->metric << " on the "
        << row->layer << " node " << row->node << ". It ranks first in the statistical health report and its "
        << "causal influence propagates to the application-layer metrics.\n"
        << "Action Steps on " << row->layer << " Layer Node " << row->node << ":\n"
        << "1. Inspect " << row->metric << " on " << row->node << " and confirm the deviation from its baseline.\n"
        << "2. Relieve the condition driving " << row->metric << " on " << row->node
        << " and verify that the application metrics recover.\n"
        << "Reasoning: The health report ranks " << row->metric << " on " << row->node << " in the " << row->layer
        << " layer first. Granger-causal edges point from it toward the application symptoms, which makes it the "
           "most upstream anomaly.\n";
    return out.str();
}

std::string first_draft(const std::string &prompt) {
    const std::string open = "\n### Draft 1\n";
    const auto start = prompt.find(open);
    if (start == std::string::npos) return {};
    const auto body = start + open.size();
    auto end = prompt.find("\n\n### Draft 2\n", body);
    if (end == std::string::npos) end = prompt.find("\n\n## Consensus instruction\n", body);
    return prompt.substr(body, end == std::string::npos ? std::string::npos : end - body);
}

}  // namespace

std::shared_ptr<llm::LlmBackend> template_backend() {
    return llm::StubBackend::custom("template", [](const std::string &prompt, const llm::GenerationParams &) {
        if (prompt.find(std::string("\n## ") + kCandidatesHeading + "\n") != std::string::npos)
            return first_draft(prompt);
        if (prompt.rfind(kSymptomPreamble, 0) == 0) return template_summary(prompt);
        return template_diagnosis(prompt);
    });
}

}  // namespace rca::diagnosis
