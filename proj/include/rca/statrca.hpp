#pragma once

#include <compare>
#include <string>
#include <vector>

#include "rca/stats.hpp"
#include "rca/topology.hpp"

namespace rca::statrca {

struct StatConfig {
    int max_lag = 3;
    double alpha = 0.05;
    double z_threshold = 3.0;
    double damping = 0.85;
    double pagerank_epsilon = 1e-9;
    int pagerank_max_iters = 200;
    int k = 5;

    /// Throws std::invalid_argument on out-of-range fields. `series_length`
    /// of 0 skips the max_lag < T / 3 check.
    void validate(std::size_t series_length = 0) const;
};

/// Identifies one metric series in a snapshot. Ordered by (node, metric, layer).
struct SeriesRef {
    std::string node_id;
    std::string metric;
    std::string layer;

    auto operator<=>(const SeriesRef &) const = default;
    bool operator==(const SeriesRef &) const = default;

    std::string label() const { return layer + "/" + node_id + "/" + metric; }
};

struct CausalEdge {
    SeriesRef cause;
    SeriesRef effect;
    double p_value = 1.0;
    double weight = 0.0;  // |pearson(cause, effect)|
};

struct CausalGraph {
    std::vector<SeriesRef> vertices;  // sorted
    std::vector<CausalEdge> edges;    // sorted by (cause, effect)
    std::vector<std::string> notes;   // skipped degenerate pairs
};

struct RankedCause {
    int rank = 0;
    SeriesRef ref;
    double score = 0.0;
};

struct HealthReport {
    int k = 5;
    std::vector<RankedCause> ranked_causes;
    // Diagnostics for operators; not part of the report's wire format.
    std::string status;
    std::vector<std::string> notes;
};

struct AnomalyScan {
    std::vector<SeriesRef> anomalies;   // sorted
    std::vector<SeriesRef> degenerate;  // unflagged zero-variance series, excluded
};

/// Series flagged anomalous, plus unflagged series whose max |z| exceeds the
/// threshold. An explicit `anomalous: false` is respected and never re-tested.
AnomalyScan extract_anomalies(const topology::TopologySnapshot &s, const StatConfig &cfg);

/// Adds cause -> effect whenever the cause Granger-causes the effect at cfg.alpha.
CausalGraph build_causal_graph(const topology::TopologySnapshot &s,
                               const std::vector<SeriesRef> &anomalies, const StatConfig &cfg);

/// Weighted PageRank over the reversed causal graph.
///
/// Returns one score per vertex, in `g.vertices` order, summing to 1.
std::vector<double> pagerank_scores(const CausalGraph &g, const StatConfig &cfg);

/// Top-k causes by PageRank score with standard competition ranking.
HealthReport pagerank_rank(const CausalGraph &g, const StatConfig &cfg);

/// extract_anomalies -> build_causal_graph -> pagerank_rank.
HealthReport analyze(const topology::TopologySnapshot &s, const StatConfig &cfg);

/// `{"k": int, "ranked_causes": [{"rank", "layer", "node", "metric", "score"}]}`
std::string report_to_json(const HealthReport &report, int indent = 2);
HealthReport report_from_json(std::string_view raw);

}  // namespace rca::statrca
