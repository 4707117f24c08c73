#include "rca/topology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <regex>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace rca::topology {

using nlohmann::json;

namespace {

using Kind = SnapshotError::Kind;

[[noreturn]] void schema_error(const std::string &path, const std::string &what) {
    throw SnapshotError(Kind::Schema, path, what);
}

[[noreturn]] void invariant_error(const std::string &rule, const std::string &what) {
    throw SnapshotError(Kind::Invariant, rule, what);
}

const json &require(const json &obj, const std::string &path, const char *key) {
    auto it = obj.find(key);
    if (it == obj.end()) schema_error(path + "." + key, "missing required field");
    return *it;
}

std::string require_string(const json &obj, const std::string &path, const char *key) {
    const auto &v = require(obj, path, key);
    if (!v.is_string()) schema_error(path + "." + key, "expected string");
    return v.get<std::string>();
}

std::string require_nonempty_string(const json &obj, const std::string &path, const char *key) {
    auto s = require_string(obj, path, key);
    if (s.empty()) schema_error(path + "." + key, "must not be empty");
    return s;
}

const json &require_array(const json &obj, const std::string &path, const char *key) {
    const auto &v = require(obj, path, key);
    if (!v.is_array()) schema_error(path + "." + key, "expected array");
    return v;
}

void require_object(const json &v, const std::string &path) {
    if (!v.is_object()) schema_error(path, "expected object");
}

json parse_json(std::string_view raw) {
    try {
        return json::parse(raw.begin(), raw.end());
    } catch (const json::parse_error &e) {
        throw SnapshotError(Kind::MalformedJson, "$", e.what());
    }
}

MetricSeries parse_series(const json &j, const std::string &path, const std::string &name) {
    require_object(j, path);
    MetricSeries m;
    m.name = name;
    if (auto it = j.find("unit"); it != j.end()) {
        if (!it->is_string()) schema_error(path + ".unit", "expected string");
        m.unit = it->get<std::string>();
    }
    const auto &interval = require(j, path, "interval_seconds");
    if (!interval.is_number()) schema_error(path + ".interval_seconds", "expected number");
    m.interval_seconds = interval.get<double>();
    if (!std::isfinite(m.interval_seconds) || m.interval_seconds <= 0.0)
        schema_error(path + ".interval_seconds", "must be a positive finite number");

    const auto &values = require_array(j, path, "values");
    if (values.size() < 2) schema_error(path + ".values", "series needs at least 2 samples");
    m.values.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto &v = values[i];
        const auto vpath = path + ".values[" + std::to_string(i) + "]";
        if (!v.is_number()) schema_error(vpath, "expected number");
        double d = v.get<double>();
        if (!std::isfinite(d)) schema_error(vpath, "value is not finite");
        m.values.push_back(d);
    }
    if (auto it = j.find("anomalous"); it != j.end()) {
        if (!it->is_boolean()) schema_error(path + ".anomalous", "expected boolean");
        m.anomalous = it->get<bool>();
    }
    return m;
}

TopologySnapshot from_json(const json &root) {
    require_object(root, "$");
    TopologySnapshot s;
    s.topology_id = require_nonempty_string(root, "$", "topology_id");
    s.timestamp = require_string(root, "$", "timestamp");
    if (!is_rfc3339_utc(s.timestamp))
        schema_error("$.timestamp", "expected RFC 3339 UTC timestamp, got '" + s.timestamp + "'");

    const auto &layers = require_array(root, "$", "layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto path = "$.layers[" + std::to_string(i) + "]";
        require_object(layers[i], path);
        Layer l;
        l.name = require_nonempty_string(layers[i], path, "name");
        const auto &rank = require(layers[i], path, "rank");
        if (!rank.is_number_integer()) schema_error(path + ".rank", "expected integer");
        l.rank = rank.get<int>();
        s.layers.push_back(std::move(l));
    }

    const auto &nodes = require_array(root, "$", "nodes");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto path = "$.nodes[" + std::to_string(i) + "]";
        require_object(nodes[i], path);
        NetNode n;
        n.id = require_nonempty_string(nodes[i], path, "id");
        n.layer = require_nonempty_string(nodes[i], path, "layer");
        const auto &metrics = require(nodes[i], path, "metrics");
        if (!metrics.is_object()) schema_error(path + ".metrics", "expected object");
        for (const auto &[name, series] : metrics.items()) {
            if (name.empty()) schema_error(path + ".metrics", "metric name must not be empty");
            n.metrics.emplace(name, parse_series(series, path + ".metrics." + name, name));
        }
        s.nodes.push_back(std::move(n));
    }

    const auto &edges = require_array(root, "$", "edges");
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const auto path = "$.edges[" + std::to_string(i) + "]";
        require_object(edges[i], path);
        s.edges.push_back({require_nonempty_string(edges[i], path, "source"),
                           require_nonempty_string(edges[i], path, "target")});
    }
    return s;
}

void check_invariants(TopologySnapshot &s) {
    if (s.layers.empty()) invariant_error("layers.nonempty", "snapshot declares no layers");

    std::set<std::string> layer_names;
    std::vector<int> ranks;
    for (const auto &l : s.layers) {
        if (!layer_names.insert(l.name).second)
            invariant_error("layers.unique_names", "duplicate layer name '" + l.name + "'");
        ranks.push_back(l.rank);
    }
    std::sort(ranks.begin(), ranks.end());
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        if (ranks[i] != static_cast<int>(i))
            invariant_error("layers.contiguous_ranks",
                            "layer ranks must be unique and contiguous from 0");
    }

    if (s.nodes.empty()) invariant_error("nodes.nonempty", "snapshot declares no nodes");

    std::set<std::string> node_ids;
    std::optional<std::size_t> length;
    std::optional<double> interval;
    for (const auto &n : s.nodes) {
        if (!node_ids.insert(n.id).second)
            invariant_error("nodes.unique_ids", "duplicate node id '" + n.id + "'");
        if (!layer_names.contains(n.layer))
            invariant_error("nodes.layer_exists",
                            "node '" + n.id + "' references unknown layer '" + n.layer + "'");
        if (n.metrics.empty())
            invariant_error("nodes.has_metrics", "node '" + n.id + "' has no metrics");
        for (const auto &[name, m] : n.metrics) {
            if (!length) length = m.values.size();
            if (!interval) interval = m.interval_seconds;
            if (m.values.size() != *length)
                invariant_error("metrics.equal_length",
                                "series " + n.id + "/" + name + " has " +
                                    std::to_string(m.values.size()) + " samples, expected " +
                                    std::to_string(*length));
            if (m.interval_seconds != *interval)
                invariant_error("metrics.equal_interval",
                                "series " + n.id + "/" + name + " has a different interval_seconds");
        }
    }

    std::unordered_map<std::string, std::vector<std::string>> adjacency;
    for (std::size_t i = 0; i < s.edges.size(); ++i) {
        const auto &e = s.edges[i];
        const auto label = "edges[" + std::to_string(i) + "] (" + e.source + " -> " + e.target + ")";
        if (!node_ids.contains(e.source) || !node_ids.contains(e.target))
            invariant_error("edges.endpoints_exist", label + " references an unknown node id");
        if (e.source == e.target) invariant_error("edges.no_self_edge", label + " is a self-edge");
        adjacency[e.source].push_back(e.target);
        adjacency[e.target].push_back(e.source);
    }

    std::set<std::string> seen{s.nodes.front().id};
    std::queue<std::string> frontier;
    frontier.push(s.nodes.front().id);
    while (!frontier.empty()) {
        auto cur = frontier.front();
        frontier.pop();
        for (const auto &next : adjacency[cur]) {
            if (seen.insert(next).second) frontier.push(next);
        }
    }
    if (seen.size() != s.nodes.size()) {
        s.warnings.push_back("topology graph is not connected: " +
                             std::to_string(s.nodes.size() - seen.size()) +
                             " node(s) unreachable from '" + s.nodes.front().id + "'");
    }
}

json to_json(const TopologySnapshot &s) {
    json layers = json::array();
    for (const auto &l : s.layers) layers.push_back({{"name", l.name}, {"rank", l.rank}});

    json nodes = json::array();
    for (const auto &n : s.nodes) {
        json metrics = json::object();
        for (const auto &[name, m] : n.metrics) {
            json series = {{"unit", m.unit},
                           {"interval_seconds", m.interval_seconds},
                           {"values", m.values}};
            if (m.anomalous) series["anomalous"] = *m.anomalous;
            metrics[name] = std::move(series);
        }
        nodes.push_back({{"id", n.id}, {"layer", n.layer}, {"metrics", std::move(metrics)}});
    }

    json edges = json::array();
    for (const auto &e : s.edges) edges.push_back({{"source", e.source}, {"target", e.target}});

    return {{"topology_id", s.topology_id},
            {"timestamp", s.timestamp},
            {"layers", std::move(layers)},
            {"nodes", std::move(nodes)},
            {"edges", std::move(edges)}};
}

}  // namespace

std::string SnapshotError::describe(Kind kind, const std::string &where, const std::string &what) {
    switch (kind) {
        case Kind::MalformedJson:
            return "malformed JSON: " + what;
        case Kind::Schema:
            return "schema violation at " + where + ": " + what;
        case Kind::Invariant:
            return "invariant '" + where + "' violated: " + what;
    }
    return what;
}

const NetNode *TopologySnapshot::find_node(std::string_view id) const {
    auto it = std::find_if(nodes.begin(), nodes.end(), [&](const NetNode &n) { return n.id == id; });
    return it == nodes.end() ? nullptr : &*it;
}

const Layer *TopologySnapshot::find_layer(std::string_view name) const {
    auto it = std::find_if(layers.begin(), layers.end(), [&](const Layer &l) { return l.name == name; });
    return it == layers.end() ? nullptr : &*it;
}

const MetricSeries *TopologySnapshot::find_metric(std::string_view node_id,
                                                  std::string_view metric) const {
    const auto *node = find_node(node_id);
    if (!node) return nullptr;
    auto it = node->metrics.find(std::string(metric));
    return it == node->metrics.end() ? nullptr : &it->second;
}

const Layer *TopologySnapshot::application_layer() const {
    auto it = std::find_if(layers.begin(), layers.end(), [](const Layer &l) { return l.rank == 0; });
    return it == layers.end() ? nullptr : &*it;
}

std::size_t TopologySnapshot::series_length() const {
    for (const auto &n : nodes)
        for (const auto &[_, m] : n.metrics) return m.values.size();
    return 0;
}

std::string GroundTruth::gold_text() const {
    std::ostringstream out;
    out << gold_diagnosis;
    for (std::size_t i = 0; i < gold_action_steps.size(); ++i)
        out << "\n" << (i + 1) << ". " << gold_action_steps[i];
    return out.str();
}

bool is_rfc3339_utc(std::string_view ts) {
    static const std::regex pattern(R"(^(\d{4})-(\d{2})-(\d{2})T(\d{2}):(\d{2}):(\d{2})(\.\d{1,9})?Z$)");
    std::cmatch m;
    if (!std::regex_match(ts.begin(), ts.end(), m, pattern)) return false;
    auto field = [&](int i) { return std::stoi(m[i].str()); };
    int month = field(2), day = field(3), hour = field(4), minute = field(5), second = field(6);
    return month >= 1 && month <= 12 && day >= 1 && day <= 31 && hour <= 23 && minute <= 59 &&
           second <= 60;
}

TopologySnapshot parse_snapshot(std::string_view raw) {
    auto root = parse_json(raw);
    TopologySnapshot s;
    try {
        s = from_json(root);
    } catch (const json::exception &e) {
        // Type or range failures the explicit checks above did not anticipate.
        throw SnapshotError(Kind::Schema, "$", e.what());
    }
    check_invariants(s);
    return s;
}

std::string serialize_snapshot(const TopologySnapshot &s) { return to_json(s).dump(2) + "\n"; }

GroundTruth parse_ground_truth(std::string_view raw) {
    auto root = parse_json(raw);
    try {
        require_object(root, "$");
        GroundTruth t;
        t.scenario_name = require_nonempty_string(root, "$", "scenario_name");
        t.fault_layer = require_nonempty_string(root, "$", "fault_layer");
        t.fault_node = require_nonempty_string(root, "$", "fault_node");
        t.fault_metric = require_nonempty_string(root, "$", "fault_metric");
        t.gold_diagnosis = require_nonempty_string(root, "$", "gold_diagnosis");
        const auto &steps = require_array(root, "$", "gold_action_steps");
        if (steps.empty()) schema_error("$.gold_action_steps", "must not be empty");
        for (std::size_t i = 0; i < steps.size(); ++i) {
            const auto path = "$.gold_action_steps[" + std::to_string(i) + "]";
            if (!steps[i].is_string() || steps[i].get<std::string>().empty())
                schema_error(path, "expected non-empty string");
            t.gold_action_steps.push_back(steps[i].get<std::string>());
        }
        return t;
    } catch (const json::exception &e) {
        throw SnapshotError(Kind::Schema, "$", e.what());
    }
}

std::string serialize_ground_truth(const GroundTruth &t) {
    json j = {{"scenario_name", t.scenario_name},
              {"fault_layer", t.fault_layer},
              {"fault_node", t.fault_node},
              {"fault_metric", t.fault_metric},
              {"gold_diagnosis", t.gold_diagnosis},
              {"gold_action_steps", t.gold_action_steps}};
    return j.dump(2) + "\n";
}

void check_truth_matches(const GroundTruth &truth, const TopologySnapshot &s) {
    const auto *node = s.find_node(truth.fault_node);
    if (!node || node->layer != truth.fault_layer || !node->metrics.contains(truth.fault_metric)) {
        invariant_error("truth.fault_exists", "fault series (" + truth.fault_layer + ", " +
                                                  truth.fault_node + ", " + truth.fault_metric +
                                                  ") is not present in snapshot");
    }
}

std::string read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::filesystem::path &path, std::string_view contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write file: " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
}

TopologySnapshot load_snapshot(const std::filesystem::path &path) {
    return parse_snapshot(read_file(path));
}

GroundTruth load_ground_truth(const std::filesystem::path &path) {
    return parse_ground_truth(read_file(path));
}

std::filesystem::path truth_path_for(const std::filesystem::path &snapshot_path) {
    auto p = snapshot_path;
    p.replace_extension(".truth.json");
    return p;
}

namespace {

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

StoreListing validate_store(const std::filesystem::path &dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw std::runtime_error("not a readable directory: " + dir.string());

    std::vector<fs::path> candidates;
    fs::recursive_directory_iterator it(dir, ec);
    if (ec) throw std::runtime_error("cannot read directory " + dir.string() + ": " + ec.message());
    for (; it != fs::recursive_directory_iterator(); it.increment(ec)) {
        if (ec) throw std::runtime_error("cannot read directory " + dir.string() + ": " + ec.message());
        if (!it->is_regular_file()) continue;
        const auto name = it->path().filename().string();
        if (ends_with(name, ".json") && !ends_with(name, ".truth.json")) candidates.push_back(it->path());
    }
    std::sort(candidates.begin(), candidates.end());

    StoreListing listing;
    for (const auto &path : candidates) {
        TopologySnapshot snapshot;
        try {
            snapshot = load_snapshot(path);
        } catch (const std::exception &e) {
            listing.problems.push_back({path, e.what()});
            continue;
        }
        StoreEntry entry;
        entry.path = path;
        auto rel = fs::relative(path, dir, ec);
        fs::path id = ec ? path : rel;
        entry.snapshot_id = id.replace_extension().generic_string();

        const auto truth_path = truth_path_for(path);
        if (fs::exists(truth_path)) {
            try {
                check_truth_matches(load_ground_truth(truth_path), snapshot);
                entry.has_ground_truth = true;
            } catch (const std::exception &e) {
                listing.problems.push_back({truth_path, e.what()});
            }
        }
        listing.entries.push_back(std::move(entry));
    }
    return listing;
}

}  // namespace rca::topology
