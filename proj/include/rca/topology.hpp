#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rca::topology {

struct Layer {
    std::string name;
    int rank = 0;  // 0 = application-most layer

    bool operator==(const Layer &) const = default;
};

struct MetricSeries {
    std::string name;
    std::string unit;
    double interval_seconds = 1.0;
    std::vector<double> values;
    std::optional<bool> anomalous;

    bool operator==(const MetricSeries &) const = default;
};

struct NetNode {
    std::string id;
    std::string layer;
    std::map<std::string, MetricSeries> metrics;

    bool operator==(const NetNode &) const = default;
};

struct Edge {
    std::string source;
    std::string target;

    bool operator==(const Edge &) const = default;
};

/// One capture window of a layered topology. Immutable once parsed.
struct TopologySnapshot {
    std::string topology_id;
    std::string timestamp;  // RFC 3339, UTC ("Z" suffix)
    std::vector<Layer> layers;
    std::vector<NetNode> nodes;
    std::vector<Edge> edges;

    // Non-fatal validation findings (e.g. disconnected graph). Not serialized.
    std::vector<std::string> warnings;

    const NetNode *find_node(std::string_view id) const;
    const Layer *find_layer(std::string_view name) const;
    const MetricSeries *find_metric(std::string_view node_id, std::string_view metric) const;

    /// Layer with rank 0, or nullptr if the snapshot has no layers.
    const Layer *application_layer() const;

    /// Shared series length T. 0 for a snapshot with no metrics.
    std::size_t series_length() const;

    bool operator==(const TopologySnapshot &other) const {
        return topology_id == other.topology_id && timestamp == other.timestamp &&
               layers == other.layers && nodes == other.nodes && edges == other.edges;
    }
};

struct GroundTruth {
    std::string scenario_name;
    std::string fault_layer;
    std::string fault_node;
    std::string fault_metric;
    std::string gold_diagnosis;
    std::vector<std::string> gold_action_steps;

    bool operator==(const GroundTruth &) const = default;

    /// Gold diagnosis followed by numbered action steps; the reference text for scoring.
    std::string gold_text() const;
};

class SnapshotError : public std::runtime_error {
public:
    enum class Kind { MalformedJson, Schema, Invariant };

    SnapshotError(Kind kind, std::string where, const std::string &what)
        : std::runtime_error(describe(kind, where, what)), kind_(kind), where_(std::move(where)) {}

    Kind kind() const noexcept { return kind_; }
    /// JSON path (schema errors) or rule name (invariant errors).
    const std::string &where() const noexcept { return where_; }

private:
    static std::string describe(Kind kind, const std::string &where, const std::string &what);

    Kind kind_;
    std::string where_;
};

TopologySnapshot parse_snapshot(std::string_view raw);
std::string serialize_snapshot(const TopologySnapshot &s);

GroundTruth parse_ground_truth(std::string_view raw);
std::string serialize_ground_truth(const GroundTruth &truth);

/// Throws SnapshotError(Invariant) if the truth's fault series is absent from the snapshot.
void check_truth_matches(const GroundTruth &truth, const TopologySnapshot &s);

bool is_rfc3339_utc(std::string_view ts);

std::string read_file(const std::filesystem::path &path);
void write_file(const std::filesystem::path &path, std::string_view contents);

TopologySnapshot load_snapshot(const std::filesystem::path &path);
GroundTruth load_ground_truth(const std::filesystem::path &path);

/// `<dir>/<stem>.truth.json` for a snapshot stored at `<dir>/<stem>.json`.
std::filesystem::path truth_path_for(const std::filesystem::path &snapshot_path);

struct StoreEntry {
    std::string snapshot_id;  // path relative to the store root, without ".json"
    std::filesystem::path path;
    bool has_ground_truth = false;
};

struct StoreProblem {
    std::filesystem::path path;
    std::string message;
};

struct StoreListing {
    std::vector<StoreEntry> entries;     // sorted by snapshot_id
    std::vector<StoreProblem> problems;  // unparsable files, truth mismatches
};

/// Enumerates `<dir>/<topology_id>/<name>.json` snapshots and their `.truth.json` companions.
/// Throws std::runtime_error if `dir` cannot be read.
StoreListing validate_store(const std::filesystem::path &dir);

}  // namespace rca::topology
