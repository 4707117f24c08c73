#include "rca/faultlab.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <ctime>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <stdexcept>

#include "rca/retrieval.hpp"

namespace rca::faultlab {

using statrca::SeriesRef;
using topology::TopologySnapshot;

namespace {

struct MetricTemplate {
    const char *name;
    const char *unit;
    double offset;  // physical value = offset + scale * normalized signal
    double scale;
};

struct LayerTemplate {
    const char *layer;
    std::vector<const char *> nodes;
    std::vector<MetricTemplate> metrics;
};

struct TopologyTemplate {
    const char *topology_id;
    std::vector<LayerTemplate> layers;
    std::vector<std::pair<const char *, const char *>> edges;
};

const TopologyTemplate &vista_template() {
    static const TopologyTemplate t{
        "vista",
        {{"Application",
          {"Sausalito-spoke-us-east-2", "Oakland-spoke-us-west-1", "Fremont-spoke-eu-west-1"},
          {{"applications_time_to_first_data_packet_avg", "ms", 120.0, 60.0},
           {"applications_ack_round_trip_forward_avg", "ms", 40.0, 30.0},
           {"applications_bandwidth_avg", "Mbps", 250.0, 200.0},
           {"tcp_retransmissions", "count", 25.0, 20.0}}},
         {"Spokes",
          {"spoke-vpc-us-east-2", "spoke-vpc-us-west-1", "spoke-vpc-eu-west-1"},
          {{"throughput_mbps", "Mbps", 800.0, 400.0}, {"packet_drops", "count", 25.0, 20.0}}},
         {"TGW",
          {"tgw-us-east-2", "tgw-us-west-2"},
          {{"route_blackhole_drops", "count", 30.0, 30.0}, {"bytes_processed", "MB", 900.0, 500.0}}},
         {"Gateways",
          {"VistaDev-aws-us-west-2", "VistaDev-aws-us-east-2"},
          {{"total_cpu_utilization", "percent", 35.0, 40.0},
           {"packet_loss_pct", "percent", 2.0, 2.0},
           {"memory_utilization", "percent", 55.0, 20.0}}}},
        {{"Sausalito-spoke-us-east-2", "spoke-vpc-us-east-2"},
         {"Oakland-spoke-us-west-1", "spoke-vpc-us-west-1"},
         {"Fremont-spoke-eu-west-1", "spoke-vpc-eu-west-1"},
         {"spoke-vpc-us-east-2", "tgw-us-east-2"},
         {"spoke-vpc-eu-west-1", "tgw-us-east-2"},
         {"spoke-vpc-us-west-1", "tgw-us-west-2"},
         {"tgw-us-east-2", "tgw-us-west-2"},
         {"tgw-us-west-2", "VistaDev-aws-us-west-2"},
         {"tgw-us-east-2", "VistaDev-aws-us-east-2"}}};
    return t;
}

const TopologyTemplate &aiml_template() {
    static const TopologyTemplate t{
        "aiml",
        {{"Application",
          {"aiapp-train-01", "aiapp-infer-01"},
          {{"iteration_completion_time", "ms", 450.0, 300.0},
           {"premature_iteration_completions", "count", 12.0, 10.0},
           {"samples_per_second", "samples/s", 1200.0, 800.0}}},
         {"GPU",
          {"gpu-node-01", "gpu-node-02"},
          {{"gpu_utilization", "percent", 60.0, 40.0}, {"gpu_memory_utilization", "percent", 50.0, 30.0}}},
         {"NICs",
          {"nic-01", "nic-02"},
          {{"ack_timeout_errors", "count", 10.0, 10.0},
           {"cnp_sent", "count", 20.0, 20.0},
           {"rx_throughput_gbps", "Gbps", 80.0, 40.0}}},
         {"Compute",
          {"compute-01", "compute-02"},
          {{"cpu_utilization", "percent", 40.0, 30.0}, {"memory_utilization", "percent", 55.0, 25.0}}},
         {"NetworkDevices",
          {"leaf-switch-01", "spine-switch-01"},
          {{"port_utilization", "percent", 50.0, 40.0}, {"egress_queue_depth", "KB", 200.0, 150.0}}}},
        {{"aiapp-train-01", "compute-01"},
         {"aiapp-infer-01", "compute-02"},
         {"compute-01", "gpu-node-01"},
         {"compute-02", "gpu-node-02"},
         {"compute-01", "nic-01"},
         {"compute-02", "nic-02"},
         {"nic-01", "leaf-switch-01"},
         {"nic-02", "leaf-switch-01"},
         {"leaf-switch-01", "spine-switch-01"}}};
    return t;
}

const TopologyTemplate &template_for(TopologyKind kind) {
    return kind == TopologyKind::Vista ? vista_template() : aiml_template();
}

// Portable gaussian stream: mt19937_64 output is fully specified, unlike the
// standard distributions, so snapshots are byte-identical across toolchains.
class Gaussian {
public:
    explicit Gaussian(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t series_seed(std::uint64_t seed, const std::string &node, const std::string &metric) {
    return retrieval::fnv1a(std::to_string(seed) + "/" + node + "/" + metric);
}

// Smooth diurnal-like pattern plus white noise. The oscillation keeps the
// baseline's max |z| well under 3 while giving Granger tests real dynamics.
std::vector<double> baseline_signal(std::uint64_t seed, const std::string &node, const std::string &metric,
                                    std::size_t length, double sigma) {
    Gaussian rng(series_seed(seed, node, metric));
    const double amplitude = 6.0 * sigma;
    const double period = 30.0 + 60.0 * rng.uniform();
    const double phase = 2.0 * std::numbers::pi * rng.uniform();
    std::vector<double> z(length);
    for (std::size_t t = 0; t < length; ++t)
        z[t] = amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / period + phase) +
               sigma * rng.next();
    return z;
}

std::string capture_timestamp(std::uint64_t seed, std::size_t length, double interval_seconds) {
    using namespace std::chrono;
    // 2024-06-01T00:00:00Z, then one capture window per seed.
    const sys_seconds base{seconds{1717200000}};
    const auto offset = seconds{static_cast<long long>((seed % 100000) * length * interval_seconds)};
    const std::time_t tt = system_clock::to_time_t(base + offset);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct Physical {
    double offset;
    double scale;
};

TopologySnapshot build_topology(const TopologyTemplate &tpl, std::uint64_t seed, const GeneratorOptions &opt,
                                std::map<std::pair<std::string, std::string>, Physical> *units_out = nullptr) {
    if (opt.length < 16) throw std::invalid_argument("series length must be at least 16");
    if (!(opt.noise_sigma > 0.0)) throw std::invalid_argument("noise_sigma must be positive");
    if (!(opt.interval_seconds > 0.0)) throw std::invalid_argument("interval_seconds must be positive");

    TopologySnapshot s;
    s.topology_id = tpl.topology_id;
    s.timestamp = capture_timestamp(seed, opt.length, opt.interval_seconds);
    for (std::size_t rank = 0; rank < tpl.layers.size(); ++rank) {
        const auto &lt = tpl.layers[rank];
        s.layers.push_back({lt.layer, static_cast<int>(rank)});
        for (const char *node_id : lt.nodes) {
            topology::NetNode node{node_id, lt.layer, {}};
            for (const auto &mt : lt.metrics) {
                auto z = baseline_signal(seed, node_id, mt.name, opt.length, opt.noise_sigma);
                topology::MetricSeries series{mt.name, mt.unit, opt.interval_seconds, {}, std::nullopt};
                series.values.reserve(z.size());
                for (double v : z) series.values.push_back(mt.offset + mt.scale * v);
                node.metrics.emplace(mt.name, std::move(series));
                if (units_out) (*units_out)[{node_id, mt.name}] = {mt.offset, mt.scale};
            }
            s.nodes.push_back(std::move(node));
        }
    }
    for (const auto &[a, b] : tpl.edges) s.edges.push_back({a, b});
    return s;
}

struct GoldTemplate {
    std::string diagnosis;
    std::vector<std::string> steps;
};

GoldTemplate gold_for(const std::string &slug) {
    static const std::map<std::string, GoldTemplate> gold = {
        {"high-app-bandwidth",
         {"The root cause is a heavy burst of traffic injected between the application endpoints "
          "Sausalito-spoke-us-east-2 and Oakland-spoke-us-west-1. The excessive data transfer raises "
          "applications_bandwidth_avg on the Application layer and saturates throughput on the spoke "
          "spoke-vpc-us-east-2.",
          {"Identify the flows between Sausalito-spoke-us-east-2 and Oakland-spoke-us-west-1 responsible for "
           "the excessive data transfer and rate-limit or reschedule them.",
           "Apply QoS policies on the spoke spoke-vpc-us-east-2 so bulk transfers cannot starve "
           "latency-sensitive application traffic."}}},
        {"high-app-latency",
         {"The root cause is localized to the application node Oakland-spoke-us-west-1, which reports "
          "anomalous time to first data packet while no other layer shows anomalies. The delay originates "
          "in the application endpoint itself rather than in the network path.",
          {"Inspect the application service on Oakland-spoke-us-west-1 for slow request handling, thread "
           "pool exhaustion or a recent deployment.",
           "Restart or scale out the affected application instance and confirm that "
           "applications_time_to_first_data_packet_avg returns to baseline."}}},
        {"gpu-over-utilization",
         {"The root cause is over-utilization of the GPU on gpu-node-01. Sustained high gpu_utilization "
          "causes premature iteration completion in the AI application aiapp-train-01, leading to "
          "incomplete data processing.",
          {"Reduce the workload scheduled on gpu-node-01 or migrate training jobs to less utilized GPUs.",
           "Review batch size and job placement for aiapp-train-01 so GPU demand stays within capacity."}}},
        {"nic-ack-timeout",
         {"The root cause is a surge of ACK timeout errors on the NIC nic-01 in the NICs layer. The "
          "acknowledgment timeouts delay communication, which leads to incomplete data processing and "
          "premature iteration completion in the AIApps node aiapp-train-01.",
          {"Check the link, cabling and RDMA configuration of nic-01 and replace or reset the NIC if errors "
           "persist.",
           "Tune the transport retry and timeout settings on nic-01 and verify that ack_timeout_errors "
           "return to baseline."}}},
        {"tgw-blackhole",
         {"The root cause is a blackhole route on the Transit Gateway tgw-us-east-2. Traffic matching the "
          "blackholed route is dropped, causing packet drops on the spoke spoke-vpc-us-east-2 and repeated "
          "TCP retransmissions between the application endpoints.",
          {"Inspect the route tables of tgw-us-east-2 and remove or correct the blackhole route.",
           "Verify the attachment and propagation of spoke-vpc-us-east-2 routes and confirm that "
           "tcp_retransmissions on the application nodes return to baseline."}}},
        {"gateway-packet-loss",
         {"The root cause is packet loss on the gateway VistaDev-aws-us-east-2 in the Gateways layer. The "
          "loss increases network delays, which extends the time to receive the first data packet at the "
          "application layer.",
          {"Inspect the interfaces and links of VistaDev-aws-us-east-2 for errors and drops and fail over to "
           "a healthy path if needed.",
           "Shift traffic away from VistaDev-aws-us-east-2 until packet_loss_pct returns to baseline."}}},
        {"gateway-resource-contention",
         {"The root cause of the high latency is likely due to the high CPU utilization on the Gateway node "
          "VistaDev-aws-us-west-2. The high CPU utilization can cause delays in processing packets, leading "
          "to increased acknowledgment round trip times and overall latency.",
          {"Reduce the CPU load on the Gateways node VistaDev-aws-us-west-2 as the high CPU utilization on "
           "this node is likely causing delays in packet processing, leading to increased latency.",
           "Implement load balancing across the Gateways nodes to distribute the processing load more "
           "evenly"}}},
        {"switch-congestion",
         {"The root cause is congestion on the switch leaf-switch-01 in the network fabric. Its egress queues "
          "build up, the NIC nic-02 sends congestion notification packets, the GPU on gpu-node-02 runs at "
          "full utilization, and application processing on aiapp-infer-01 slows down.",
          {"Relieve congestion on leaf-switch-01 by rebalancing flows across uplinks or adding fabric "
           "capacity.",
           "Review ECN and PFC thresholds on leaf-switch-01 and nic-02 so congestion is signalled before "
           "queues overflow."}}},
    };
    auto it = gold.find(slug);
    if (it == gold.end()) throw std::invalid_argument("no gold template for scenario '" + slug + "'");
    return it->second;
}

std::string lower(std::string s) {
    for (auto &c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

}  // namespace

std::string to_string(TopologyKind kind) { return kind == TopologyKind::Vista ? "vista" : "aiml"; }

TopologySnapshot make_vista_topology(std::uint64_t seed, const GeneratorOptions &options) {
    return build_topology(vista_template(), seed, options);
}

TopologySnapshot make_aiml_topology(std::uint64_t seed, const GeneratorOptions &options) {
    return build_topology(aiml_template(), seed, options);
}

std::vector<ScenarioSpec> list_scenarios() {
    auto ref = [](const char *layer, const char *node, const char *metric) {
        return SeriesRef{node, metric, layer};
    };
    const auto saus = "Sausalito-spoke-us-east-2";
    const auto oak = "Oakland-spoke-us-west-1";
    const auto fre = "Fremont-spoke-eu-west-1";

    std::vector<ScenarioSpec> specs;
    auto add = [&](const char *slug, const char *display, TopologyKind kind, SeriesRef target,
                   std::vector<Coupling> coupling) {
        ScenarioSpec s;
        s.name = slug;
        s.display_name = display;
        s.usecase = display;
        s.topology = kind;
        s.fault_target = std::move(target);
        s.coupling = std::move(coupling);
        specs.push_back(std::move(s));
    };

    const auto bw = ref("Application", saus, "applications_bandwidth_avg");
    add("high-app-bandwidth", "High App Bandwidth", TopologyKind::Vista, bw,
        {{bw, ref("Spokes", "spoke-vpc-us-east-2", "throughput_mbps"), 1, 0.9},
         {bw, ref("Application", oak, "applications_bandwidth_avg"), 1, 0.9}});

    const auto ttfb = ref("Application", oak, "applications_time_to_first_data_packet_avg");
    add("high-app-latency", "High App Latency", TopologyKind::Vista, ttfb,
        {{ttfb, ref("Application", oak, "applications_ack_round_trip_forward_avg"), 1, 0.9}});
    // Only the application layer may look abnormal in this scenario.
    specs.back().distractor_layer = "Application";

    const auto gpu = ref("GPU", "gpu-node-01", "gpu_utilization");
    add("gpu-over-utilization", "Over-utilization of the GPU", TopologyKind::Aiml, gpu,
        {{gpu, ref("Application", "aiapp-train-01", "premature_iteration_completions"), 1, 0.9},
         {gpu, ref("Application", "aiapp-train-01", "iteration_completion_time"), 2, 0.9}});
    specs.back().usecase = "High GPU Utilization";

    const auto ack = ref("NICs", "nic-01", "ack_timeout_errors");
    add("nic-ack-timeout", "Nic Ack Timeout Error", TopologyKind::Aiml, ack,
        {{ack, ref("Application", "aiapp-train-01", "iteration_completion_time"), 1, 0.9},
         {ack, ref("Application", "aiapp-train-01", "premature_iteration_completions"), 2, 0.9}});
    specs.back().usecase = "Nic ACK Timeout Error";

    const auto hole = ref("TGW", "tgw-us-east-2", "route_blackhole_drops");
    const auto drops = ref("Spokes", "spoke-vpc-us-east-2", "packet_drops");
    add("tgw-blackhole", "TGW Blackhole", TopologyKind::Vista, hole,
        {{hole, drops, 1, 0.9},
         {drops, ref("Application", saus, "tcp_retransmissions"), 1, 0.9},
         {hole, ref("Application", fre, "tcp_retransmissions"), 2, 0.9}});

    const auto loss = ref("Gateways", "VistaDev-aws-us-east-2", "packet_loss_pct");
    add("gateway-packet-loss", "Gateway Packet Loss", TopologyKind::Vista, loss,
        {{loss, ref("Application", fre, "applications_time_to_first_data_packet_avg"), 1, 0.9},
         {loss, ref("Application", saus, "applications_time_to_first_data_packet_avg"), 2, 0.9}});

    const auto cpu = ref("Gateways", "VistaDev-aws-us-west-2", "total_cpu_utilization");
    add("gateway-resource-contention", "Gateway Resource Contention", TopologyKind::Vista, cpu,
        {{cpu, ref("Application", saus, "applications_time_to_first_data_packet_avg"), 1, 0.9},
         {cpu, ref("Application", saus, "applications_ack_round_trip_forward_avg"), 1, 0.9}});

    const auto queue = ref("NetworkDevices", "leaf-switch-01", "egress_queue_depth");
    const auto cnp = ref("NICs", "nic-02", "cnp_sent");
    add("switch-congestion", "Switch Congestion", TopologyKind::Aiml, queue,
        {{queue, cnp, 1, 0.9},
         {cnp, ref("Application", "aiapp-infer-01", "iteration_completion_time"), 1, 0.9},
         {queue, ref("GPU", "gpu-node-02", "gpu_utilization"), 1, 0.9}});
    return specs;
}

std::vector<std::string> scenario_names() {
    std::vector<std::string> names;
    for (const auto &s : list_scenarios()) names.push_back(s.name);
    return names;
}

ScenarioSpec find_scenario(const std::string &name) {
    const auto key = lower(name);
    for (auto &s : list_scenarios())
        if (s.name == key || lower(s.display_name) == key || lower(s.usecase) == key) return s;
    std::string valid;
    for (const auto &n : scenario_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown scenario '" + name + "'; valid scenarios: " + valid);
}

ScenarioOutput generate_scenario(const ScenarioSpec &spec) {
    gold_for(spec.name);  // rejects unknown scenario names early
    std::map<std::pair<std::string, std::string>, Physical> units;
    GeneratorOptions opt;
    opt.length = spec.length;
    opt.noise_sigma = spec.noise_sigma;
    auto snapshot = build_topology(template_for(spec.topology), spec.seed, opt, &units);

    auto normalized = [&](const SeriesRef &ref) -> std::vector<double> {
        const auto *m = snapshot.find_metric(ref.node_id, ref.metric);
        const auto *node = snapshot.find_node(ref.node_id);
        if (!m || node->layer != ref.layer)
            throw std::invalid_argument("scenario '" + spec.name + "' references unknown series " + ref.label());
        const auto phys = units.at({ref.node_id, ref.metric});
        std::vector<double> z;
        for (double v : m->values) z.push_back((v - phys.offset) / phys.scale);
        return z;
    };

    std::map<SeriesRef, std::vector<double>> signal;
    const auto T = spec.length;
    auto target = normalized(spec.fault_target);
    for (std::size_t t = T - T / 2; t < T; ++t) target[t] += 5.0 * spec.noise_sigma;
    signal.emplace(spec.fault_target, std::move(target));

    // Couplings may be listed in any order as long as they form a tree rooted at the target.
    std::vector<bool> done(spec.coupling.size(), false);
    std::set<SeriesRef> dests;
    for (std::size_t remaining = spec.coupling.size(); remaining > 0;) {
        bool progressed = false;
        for (std::size_t i = 0; i < spec.coupling.size(); ++i) {
            if (done[i]) continue;
            const auto &c = spec.coupling[i];
            if (c.lag < 1 || c.lag > 3)
                throw std::invalid_argument("coupling lag must lie in [1, 3] for " + c.dest.label());
            auto src = signal.find(c.source);
            if (src == signal.end()) continue;
            if (c.dest == spec.fault_target || !dests.insert(c.dest).second)
                throw std::invalid_argument("coupling graph is not a tree at " + c.dest.label());
            auto dest = normalized(c.dest);
            for (std::size_t t = 0; t < T; ++t) {
                const auto lagged = t >= static_cast<std::size_t>(c.lag) ? t - c.lag : 0;
                dest[t] += c.gain * src->second[lagged];
            }
            signal.emplace(c.dest, std::move(dest));
            done[i] = true;
            --remaining;
            progressed = true;
        }
        if (!progressed) throw std::invalid_argument("coupling in scenario '" + spec.name + "' is not reachable from the fault target");
    }

    if (spec.distractors < 0) throw std::invalid_argument("distractors must be non-negative");
    std::vector<SeriesRef> pool;
    std::set<std::string> busy_nodes;
    for (const auto &[ref, _] : signal) busy_nodes.insert(ref.node_id);
    for (const auto &node : snapshot.nodes)
        if (!busy_nodes.count(node.id) && (spec.distractor_layer.empty() || node.layer == spec.distractor_layer))
            for (const auto &[name, _] : node.metrics) pool.push_back({node.id, name, node.layer});
    Gaussian pick(retrieval::fnv1a(std::to_string(spec.seed) + "/distractors/" + spec.name));
    for (int d = 0; d < spec.distractors && !pool.empty(); ++d) {
        const auto idx = static_cast<std::size_t>(pick.uniform() * static_cast<double>(pool.size()));
        const auto ref = pool[std::min(idx, pool.size() - 1)];
        std::erase_if(pool, [&](const SeriesRef &r) { return r.node_id == ref.node_id; });
        auto z = normalized(ref);
        const auto width = T / 8 + static_cast<std::size_t>(pick.uniform() * static_cast<double>(T / 8));
        const auto start = static_cast<std::size_t>(pick.uniform() * static_cast<double>(T - width));
        for (std::size_t t = start; t < start + width; ++t) z[t] += 5.0 * spec.noise_sigma;
        signal.emplace(ref, std::move(z));
    }

    for (auto &node : snapshot.nodes) {
        for (auto &[name, series] : node.metrics) {
            auto it = signal.find(SeriesRef{node.id, name, node.layer});
            if (it == signal.end()) continue;
            const auto phys = units.at({node.id, name});
            for (std::size_t t = 0; t < T; ++t) series.values[t] = phys.offset + phys.scale * it->second[t];
            series.anomalous = true;
        }
    }

    const auto gold = gold_for(spec.name);
    topology::GroundTruth truth{spec.display_name,
                                spec.fault_target.layer,
                                spec.fault_target.node_id,
                                spec.fault_target.metric,
                                gold.diagnosis,
                                gold.steps};
    return {std::move(snapshot), std::move(truth)};
}

}  // namespace rca::faultlab
