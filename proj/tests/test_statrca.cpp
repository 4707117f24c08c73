#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <random>

#include <json.hpp>

#include "helpers.hpp"
#include "oracles.hpp"
#include "rca/faultlab.hpp"
#include "rca/statrca.hpp"

using namespace rca;
using namespace rca::statrca;

namespace {

topology::TopologySnapshot snapshot_of(const std::vector<std::pair<std::string, std::vector<double>>> &series,
                                       std::vector<std::optional<bool>> flags = {}) {
    topology::TopologySnapshot s;
    s.topology_id = "unit";
    s.timestamp = "2024-01-01T00:00:00Z";
    s.layers = {{"Application", 0}};
    for (std::size_t i = 0; i < series.size(); ++i) {
        topology::MetricSeries m{"m", "u", 1.0, series[i].second, std::nullopt};
        if (i < flags.size()) m.anomalous = flags[i];
        s.nodes.push_back({series[i].first, "Application", {{"m", m}}});
    }
    return s;
}

SeriesRef vref(int i) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "v%02d", i);
    return {buf, "m", "L"};
}

CausalGraph graph_of(int n, const std::vector<oracle::WEdge> &edges) {
    CausalGraph g;
    for (int i = 0; i < n; ++i) g.vertices.push_back(vref(i));
    for (const auto &e : edges) g.edges.push_back({vref(e.cause), vref(e.effect), 0.01, e.weight});
    return g;
}

int rank_of(const HealthReport &r, const SeriesRef &ref) {
    for (const auto &c : r.ranked_causes)
        if (c.ref == ref) return c.rank;
    return -1;
}

bool has_edge(const CausalGraph &g, const SeriesRef &a, const SeriesRef &b) {
    return std::any_of(g.edges.begin(), g.edges.end(), [&](const CausalEdge &e) { return e.cause == a && e.effect == b; });
}

}  // namespace

TEST_CASE("config validation") {
    StatConfig c;
    CHECK_NOTHROW(c.validate(200));
    c.max_lag = 70;
    CHECK_THROWS_AS(c.validate(200), std::invalid_argument);
    c = {};
    c.k = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = {};
    c.alpha = 1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = {};
    c.damping = 0.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("extract_anomalies") {
    const StatConfig cfg;
    SUBCASE("all flags false and constant series give nothing") {
        const auto s = snapshot_of({{"a", {1, 1, 1, 1}}, {"b", {2, 2, 2, 2}}}, {false, false});
        const auto scan = extract_anomalies(s, cfg);
        CHECK(scan.anomalies.empty());
        CHECK(scan.degenerate.empty());
    }
    SUBCASE("a flag wins") {
        const auto s = snapshot_of({{"a", {1, 2, 1, 2}}, {"b", {5, 1, 4, 2}}}, {std::nullopt, true});
        const auto scan = extract_anomalies(s, cfg);
        REQUIRE(scan.anomalies.size() == 1);
        CHECK(scan.anomalies[0] == SeriesRef{"b", "m", "Application"});
    }
    SUBCASE("unflagged spike exceeds z = 3") {
        std::vector<double> spike(20, 0.0);
        spike[4] = 10.0;  // z = 9.5 / sqrt(5) = 4.2485
        const auto s = snapshot_of({{"a", spike}});
        const auto scan = extract_anomalies(s, cfg);
        REQUIRE(scan.anomalies.size() == 1);
        CHECK(scan.anomalies[0].node_id == "a");
    }
    SUBCASE("explicit false is not re-tested") {
        std::vector<double> spike(20, 0.0);
        spike[4] = 10.0;
        CHECK(extract_anomalies(snapshot_of({{"a", spike}}, {false}), cfg).anomalies.empty());
    }
    SUBCASE("unflagged constant series is degenerate") {
        const auto scan = extract_anomalies(snapshot_of({{"a", {3, 3, 3}}}), cfg);
        CHECK(scan.anomalies.empty());
        REQUIRE(scan.degenerate.size() == 1);
    }
}

TEST_CASE("causal graph construction") {
    const StatConfig cfg;
    SUBCASE("single anomaly") {
        std::mt19937_64 rng(1);
        const auto s = snapshot_of({{"a", oracle::white_noise(rng, 50)}}, {true});
        const auto g = build_causal_graph(s, extract_anomalies(s, cfg).anomalies, cfg);
        CHECK(g.vertices.size() == 1);
        CHECK(g.edges.empty());
    }
    SUBCASE("planted chain from faultlab") {
        const auto s = testutil::load_fixture("vista", "tgw-blackhole");
        const SeriesRef hole{"tgw-us-east-2", "route_blackhole_drops", "TGW"};
        const SeriesRef drops{"spoke-vpc-us-east-2", "packet_drops", "Spokes"};
        const SeriesRef retrans{"Sausalito-spoke-us-east-2", "tcp_retransmissions", "Application"};
        const auto g = build_causal_graph(s, extract_anomalies(s, cfg).anomalies, cfg);
        CHECK(has_edge(g, hole, drops));
        CHECK(has_edge(g, drops, retrans));
        CHECK_FALSE(has_edge(g, retrans, hole));

        // the oracle agrees on each of the three decisions
        auto series = [&](const SeriesRef &r) { return s.find_metric(r.node_id, r.metric)->values; };
        CHECK(oracle::granger(series(drops), series(hole), 3).p <= 0.05);
        CHECK(oracle::granger(series(retrans), series(drops), 3).p <= 0.05);
        CHECK(oracle::granger(series(hole), series(retrans), 3).p > 0.05);
    }
    SUBCASE("independent noise rarely links") {
        std::mt19937_64 rng(2);
        int linked = 0;
        for (int i = 0; i < 100; ++i) {
            const auto s = snapshot_of({{"a", oracle::white_noise(rng, 200)}, {"b", oracle::white_noise(rng, 200)}},
                                       {true, true});
            linked += !build_causal_graph(s, extract_anomalies(s, cfg).anomalies, cfg).edges.empty();
        }
        CHECK(linked <= 10);
    }
    SUBCASE("edge weights are |pearson| and p-values within alpha") {
        const auto s = testutil::load_fixture("vista", "gateway-resource-contention");
        const auto g = build_causal_graph(s, extract_anomalies(s, cfg).anomalies, cfg);
        REQUIRE_FALSE(g.edges.empty());
        for (const auto &e : g.edges) {
            CHECK_FALSE(e.cause == e.effect);
            CHECK(e.p_value <= cfg.alpha);
            const auto &x = s.find_metric(e.cause.node_id, e.cause.metric)->values;
            const auto &y = s.find_metric(e.effect.node_id, e.effect.metric)->values;
            CHECK(std::fabs(e.weight - std::fabs(oracle::pearson(x, y))) < 1e-12);
        }
    }
}

TEST_CASE("pagerank basics") {
    const StatConfig cfg;
    SUBCASE("two isolated vertices share rank 1") {
        const auto r = pagerank_rank(graph_of(2, {}), cfg);
        REQUIRE(r.ranked_causes.size() == 2);
        for (const auto &c : r.ranked_causes) {
            CHECK(c.rank == 1);
            CHECK(c.score == doctest::Approx(0.5).epsilon(1e-12));
        }
    }
    SUBCASE("chain A -> B -> C ranks A first") {
        const std::vector<oracle::WEdge> edges{{0, 1, 1.0}, {1, 2, 1.0}};
        const auto g = graph_of(3, edges);
        const auto r = pagerank_rank(g, cfg);
        CHECK(r.ranked_causes.front().ref == vref(0));
        CHECK(r.ranked_causes.front().rank == 1);
        const auto want = oracle::pagerank(3, edges, 0.85);
        const auto got = pagerank_scores(g, cfg);
        for (int i = 0; i < 3; ++i) CHECK(std::fabs(got[i] - want[i]) < 1e-6);
    }
    SUBCASE("symmetric effects tie and use competition ranking") {
        // diamond a -> b, a -> c, b -> d, c -> d: b and c are symmetric, ranks 1, 2, 2, 4
        const auto r = pagerank_rank(graph_of(4, {{0, 1, 0.7}, {0, 2, 0.7}, {1, 3, 0.5}, {2, 3, 0.5}}), cfg);
        REQUIRE(r.ranked_causes.size() == 4);
        CHECK(r.ranked_causes[0].rank == 1);
        CHECK(r.ranked_causes[1].rank == 2);
        CHECK(r.ranked_causes[2].rank == 2);
        CHECK(r.ranked_causes[3].rank == 4);
        CHECK(r.ranked_causes[1].ref < r.ranked_causes[2].ref);
    }
    SUBCASE("boundary ties extend past k") {
        StatConfig k2 = cfg;
        k2.k = 2;
        const auto r = pagerank_rank(graph_of(4, {{0, 1, 0.7}, {0, 2, 0.7}, {0, 3, 0.7}}), k2);
        CHECK(r.ranked_causes.size() == 4);
        CHECK(r.ranked_causes.back().rank == 2);
    }
}

TEST_CASE("property: pagerank matches dense oracle and is a distribution") {
    std::mt19937_64 rng(77);
    const StatConfig cfg;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 12);
        std::vector<oracle::WEdge> edges;
        std::uniform_real_distribution<double> w(0.05, 1.0);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                if (a != b && rng() % 4 == 0) edges.push_back({a, b, w(rng)});
        const auto g = graph_of(n, edges);
        const auto got = pagerank_scores(g, cfg);
        const auto want = oracle::pagerank(n, edges, cfg.damping);
        double sum = 0;
        for (int i = 0; i < n; ++i) {
            CHECK(std::fabs(got[i] - want[i]) < 1e-6);
            CHECK(got[i] >= 0.0);
            sum += got[i];
        }
        CHECK(std::fabs(sum - 1.0) < 1e-9);

        // uniform positive weight scaling keeps the order
        auto scaled = edges;
        for (auto &e : scaled) e.weight *= 3.7;
        const auto a = pagerank_rank(g, cfg);
        const auto b = pagerank_rank(graph_of(n, scaled), cfg);
        REQUIRE(a.ranked_causes.size() == b.ranked_causes.size());
        for (std::size_t i = 0; i < a.ranked_causes.size(); ++i) {
            CHECK(a.ranked_causes[i].ref == b.ranked_causes[i].ref);
            CHECK(a.ranked_causes[i].rank == b.ranked_causes[i].rank);
        }
    }
}

TEST_CASE("analyze") {
    const StatConfig cfg;
    SUBCASE("all-constant snapshot gives an empty report with status") {
        const auto r = analyze(snapshot_of({{"a", {1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1}}, {"b", {2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2}}}), cfg);
        CHECK(r.ranked_causes.empty());
        CHECK_FALSE(r.status.empty());
    }
    SUBCASE("gateway resource contention fixture") {
        const auto r = analyze(testutil::load_fixture("vista", "gateway-resource-contention"), cfg);
        REQUIRE_FALSE(r.ranked_causes.empty());
        const auto &top = r.ranked_causes.front();
        CHECK(top.rank == 1);
        CHECK(top.ref.layer == "Gateways");
        CHECK(top.ref.node_id == "VistaDev-aws-us-west-2");
        CHECK(top.ref.metric == "total_cpu_utilization");
        // longer than k only through a tie at the boundary
        for (std::size_t i = 5; i < r.ranked_causes.size(); ++i) CHECK(r.ranked_causes[i].rank <= 5);
    }
    SUBCASE("tgw blackhole fixture ranks a TGW series first") {
        const auto r = analyze(testutil::load_fixture("vista", "tgw-blackhole"), cfg);
        REQUIRE_FALSE(r.ranked_causes.empty());
        CHECK(r.ranked_causes.front().ref.layer == "TGW");
    }
    SUBCASE("every fixture ranks its injected series in the top five") {
        for (const auto &entry : topology::validate_store(testutil::fixture_store()).entries) {
            const auto s = topology::load_snapshot(entry.path);
            const auto truth = topology::load_ground_truth(topology::truth_path_for(entry.path));
            const auto r = analyze(s, cfg);
            const int rank = rank_of(r, {truth.fault_node, truth.fault_metric, truth.fault_layer});
            CHECK_MESSAGE(rank >= 1, entry.snapshot_id);
            CHECK_MESSAGE(rank <= 5, entry.snapshot_id);
        }
    }
    SUBCASE("pure: repeated calls give byte-identical reports") {
        const auto s = testutil::load_fixture("aiml", "switch-congestion");
        CHECK(report_to_json(analyze(s, cfg)) == report_to_json(analyze(s, cfg)));
    }
    SUBCASE("ranked list is sorted by score") {
        const auto r = analyze(testutil::load_fixture("aiml", "nic-ack-timeout"), cfg);
        for (std::size_t i = 1; i < r.ranked_causes.size(); ++i) {
            CHECK(r.ranked_causes[i - 1].score >= r.ranked_causes[i].score);
            CHECK(r.ranked_causes[i - 1].rank <= r.ranked_causes[i].rank);
        }
    }
}

TEST_CASE("health report JSON") {
    const auto r = analyze(testutil::load_fixture("vista", "gateway-resource-contention"), StatConfig{});
    const auto text = report_to_json(r);
    const auto back = report_from_json(text);
    CHECK(back.k == r.k);
    REQUIRE(back.ranked_causes.size() == r.ranked_causes.size());
    for (std::size_t i = 0; i < r.ranked_causes.size(); ++i) {
        CHECK(back.ranked_causes[i].ref == r.ranked_causes[i].ref);
        CHECK(back.ranked_causes[i].score == r.ranked_causes[i].score);
    }
    CHECK(report_to_json(back) == text);
    const auto j = nlohmann::json::parse(text);
    CHECK(j.size() == 2);
    for (const auto &c : j["ranked_causes"]) {
        CHECK(c.size() == 5);
        for (const char *key : {"rank", "layer", "node", "metric", "score"}) CHECK(c.contains(key));
    }
}
