#include "rca/statrca.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <json.hpp>

namespace rca::statrca {

using nlohmann::json;
using topology::TopologySnapshot;

void StatConfig::validate(std::size_t series_length) const {
    if (max_lag < 1) throw std::invalid_argument("max_lag must be a positive integer");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
    if (!(z_threshold > 0.0)) throw std::invalid_argument("z_threshold must be positive");
    if (!(damping > 0.0 && damping < 1.0)) throw std::invalid_argument("damping must lie in (0, 1)");
    if (!(pagerank_epsilon > 0.0)) throw std::invalid_argument("pagerank_epsilon must be positive");
    if (pagerank_max_iters < 1) throw std::invalid_argument("pagerank_max_iters must be positive");
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (series_length > 0 && !(3 * static_cast<std::size_t>(max_lag) < series_length))
        throw std::invalid_argument("max_lag " + std::to_string(max_lag) +
                                    " must be below T/3 for series length " +
                                    std::to_string(series_length));
}

AnomalyScan extract_anomalies(const TopologySnapshot &s, const StatConfig &cfg) {
    AnomalyScan scan;
    for (const auto &node : s.nodes) {
        for (const auto &[name, series] : node.metrics) {
            SeriesRef ref{node.id, name, node.layer};
            if (series.anomalous) {
                if (*series.anomalous) scan.anomalies.push_back(std::move(ref));
                continue;
            }
            try {
                if (stats::max_abs_zscore(series.values) > cfg.z_threshold)
                    scan.anomalies.push_back(std::move(ref));
            } catch (const stats::DegenerateSeries &) {
                scan.degenerate.push_back(std::move(ref));
            }
        }
    }
    std::sort(scan.anomalies.begin(), scan.anomalies.end());
    std::sort(scan.degenerate.begin(), scan.degenerate.end());
    return scan;
}

namespace {

const std::vector<double> &series_of(const TopologySnapshot &s, const SeriesRef &ref) {
    const auto *m = s.find_metric(ref.node_id, ref.metric);
    if (!m) throw std::invalid_argument("unknown series " + ref.label());
    return m->values;
}

}  // namespace

CausalGraph build_causal_graph(const TopologySnapshot &s, const std::vector<SeriesRef> &anomalies,
                               const StatConfig &cfg) {
    if (anomalies.empty()) throw std::invalid_argument("causal graph needs at least one anomalous series");
    CausalGraph g;
    g.vertices = anomalies;
    std::sort(g.vertices.begin(), g.vertices.end());
    g.vertices.erase(std::unique(g.vertices.begin(), g.vertices.end()), g.vertices.end());

    for (const auto &cause : g.vertices) {
        for (const auto &effect : g.vertices) {
            if (cause == effect) continue;
            const auto &x = series_of(s, effect);
            const auto &y = series_of(s, cause);
            try {
                const auto test = stats::granger_test(x, y, cfg.max_lag, cfg.alpha);
                if (!test.note.empty())
                    g.notes.push_back(cause.label() + " -> " + effect.label() + ": " + test.note);
                if (!test.causes) continue;
                g.edges.push_back({cause, effect, test.p_value, std::abs(stats::pearson(y, x))});
            } catch (const stats::DegenerateSeries &e) {
                g.notes.push_back(cause.label() + " -> " + effect.label() + " skipped: " + e.what());
            }
        }
    }
    return g;
}

std::vector<double> pagerank_scores(const CausalGraph &g, const StatConfig &cfg) {
    const std::size_t n = g.vertices.size();
    if (n == 0) return {};

    std::map<SeriesRef, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) index.emplace(g.vertices[i], i);

    // Reversed adjacency: effect -> cause, so upstream causes collect score.
    struct Link {
        std::size_t from;
        std::size_t to;
        double weight;
    };
    std::vector<Link> links;
    std::vector<double> out_weight(n, 0.0);
    for (const auto &e : g.edges) {
        const auto from = index.at(e.effect);
        const auto to = index.at(e.cause);
        links.push_back({from, to, e.weight});
        out_weight[from] += e.weight;
    }

    const double d = cfg.damping;
    const double uniform = 1.0 / static_cast<double>(n);
    std::vector<double> score(n, uniform);
    std::vector<double> next(n);
    for (int iter = 0; iter < cfg.pagerank_max_iters; ++iter) {
        double dangling = 0.0;
        for (std::size_t v = 0; v < n; ++v)
            if (!(out_weight[v] > 0.0)) dangling += score[v];

        std::fill(next.begin(), next.end(), (1.0 - d) * uniform + d * dangling * uniform);
        for (const auto &link : links) {
            if (out_weight[link.from] > 0.0)
                next[link.to] += d * score[link.from] * link.weight / out_weight[link.from];
        }

        double change = 0.0;
        for (std::size_t v = 0; v < n; ++v) change += std::abs(next[v] - score[v]);
        score.swap(next);
        if (change < cfg.pagerank_epsilon) break;
    }

    double total = 0.0;
    for (double v : score) total += v;
    for (double &v : score) v /= total;
    return score;
}

HealthReport pagerank_rank(const CausalGraph &g, const StatConfig &cfg) {
    HealthReport report;
    report.k = cfg.k;
    report.notes = g.notes;
    const auto scores = pagerank_scores(g, cfg);

    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    // Scores closer than this are reported as ties; structurally symmetric
    // vertices can differ in the last few ulps after summation.
    constexpr double kTieTolerance = 1e-12;
    int rank = 0;
    double leader = 0.0;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        const double score = scores[order[pos]];
        if (pos == 0 || leader - score > kTieTolerance) {
            rank = static_cast<int>(pos) + 1;
            leader = score;
        }
        if (rank > cfg.k) break;
        report.ranked_causes.push_back({rank, g.vertices[order[pos]], score});
    }
    // Tied entries are listed in SeriesRef order.
    std::stable_sort(report.ranked_causes.begin(), report.ranked_causes.end(),
                     [](const RankedCause &a, const RankedCause &b) {
                         if (a.rank != b.rank) return a.rank < b.rank;
                         return a.ref < b.ref;
                     });
    return report;
}

HealthReport analyze(const TopologySnapshot &s, const StatConfig &cfg) {
    cfg.validate(s.series_length());
    const auto scan = extract_anomalies(s, cfg);
    if (scan.anomalies.empty()) {
        HealthReport report;
        report.k = cfg.k;
        report.status = "no anomalous series found; nothing to rank";
        for (const auto &ref : scan.degenerate)
            report.notes.push_back(ref.label() + " has zero variance and no anomaly flag");
        return report;
    }
    const auto graph = build_causal_graph(s, scan.anomalies, cfg);
    auto report = pagerank_rank(graph, cfg);
    report.status = std::to_string(scan.anomalies.size()) + " anomalous series, " +
                    std::to_string(graph.edges.size()) + " causal edges";
    for (const auto &ref : scan.degenerate)
        report.notes.push_back(ref.label() + " has zero variance and no anomaly flag");
    return report;
}

std::string report_to_json(const HealthReport &report, int indent) {
    json causes = json::array();
    for (const auto &c : report.ranked_causes) {
        causes.push_back({{"rank", c.rank},
                          {"layer", c.ref.layer},
                          {"node", c.ref.node_id},
                          {"metric", c.ref.metric},
                          {"score", c.score}});
    }
    json j = {{"k", report.k}, {"ranked_causes", std::move(causes)}};
    return j.dump(indent);
}

HealthReport report_from_json(std::string_view raw) {
    const auto j = json::parse(raw.begin(), raw.end());
    HealthReport report;
    report.k = j.at("k").get<int>();
    for (const auto &c : j.at("ranked_causes")) {
        report.ranked_causes.push_back({c.at("rank").get<int>(),
                                        {c.at("node").get<std::string>(), c.at("metric").get<std::string>(),
                                         c.at("layer").get<std::string>()},
                                        c.at("score").get<double>()});
    }
    return report;
}

}  // namespace rca::statrca
