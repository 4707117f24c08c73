#include <doctest.h>

#include <json.hpp>
#include <random>

#include "helpers.hpp"
#include "rca/faultlab.hpp"
#include "rca/topology.hpp"

using namespace rca::topology;
using nlohmann::json;
using testutil::TempDir;

namespace {

SnapshotError parse_error(const std::string &raw) {
    try {
        parse_snapshot(raw);
    } catch (const SnapshotError &e) {
        return e;
    }
    FAIL("expected a SnapshotError");
    throw std::logic_error("unreachable");
}

json minimal() { return json::parse(testutil::kMinimalSnapshot); }

TopologySnapshot random_snapshot(std::mt19937_64 &rng) {
    std::uniform_int_distribution<int> nlayers(1, 4), nnodes(1, 3), nmetrics(1, 3), len(2, 12);
    std::uniform_real_distribution<double> val(-1e6, 1e6);
    std::bernoulli_distribution coin(0.5);
    TopologySnapshot s;
    s.topology_id = "rand-" + std::to_string(rng() % 1000);
    s.timestamp = "2024-02-29T23:59:59Z";
    const int T = len(rng);
    const int L = nlayers(rng);
    for (int l = 0; l < L; ++l) s.layers.push_back({"L" + std::to_string(l), l});
    for (int l = 0; l < L; ++l) {
        for (int n = nnodes(rng); n > 0; --n) {
            NetNode node{"n" + std::to_string(s.nodes.size()), "L" + std::to_string(l), {}};
            for (int m = nmetrics(rng); m > 0; --m) {
                MetricSeries ms{"m" + std::to_string(m), "u", 15.0, {}, std::nullopt};
                for (int t = 0; t < T; ++t) ms.values.push_back(val(rng));
                if (coin(rng)) ms.anomalous = coin(rng);
                node.metrics.emplace(ms.name, ms);
            }
            s.nodes.push_back(node);
        }
    }
    for (std::size_t i = 1; i < s.nodes.size(); ++i) s.edges.push_back({s.nodes[i - 1].id, s.nodes[i].id});
    return s;
}

}  // namespace

TEST_CASE("minimal document parses with T from the values") {
    const auto s = parse_snapshot(testutil::kMinimalSnapshot);
    CHECK(s.topology_id == "tiny");
    CHECK(s.layers.size() == 1);
    CHECK(s.nodes.size() == 1);
    CHECK(s.series_length() == 3);
    CHECK_FALSE(s.find_metric("app-1", "latency_ms")->anomalous.has_value());
    CHECK(s.warnings.empty());
}

TEST_CASE("edge to an unknown node is an invariant error naming the edge") {
    auto j = minimal();
    j["edges"] = json::array({{{"source", "app-1"}, {"target", "ghost"}}});
    const auto e = parse_error(j.dump());
    CHECK(e.kind() == SnapshotError::Kind::Invariant);
    CHECK(e.where() == "edges.endpoints_exist");
    CHECK(std::string(e.what()).find("ghost") != std::string::npos);
    CHECK(std::string(e.what()).find("edges[0]") != std::string::npos);
}

TEST_CASE("four-layer vista fixture") {
    const auto s = testutil::load_fixture("vista", "gateway-resource-contention");
    REQUIRE(s.layers.size() == 4);
    CHECK(s.layers[0].name == "Application");
    CHECK(s.layers[1].name == "Spokes");
    CHECK(s.layers[2].name == "TGW");
    CHECK(s.layers[3].name == "Gateways");
    for (int i = 0; i < 4; ++i) CHECK(s.layers[i].rank == i);
}

TEST_CASE("schema errors name the offending path") {
    SUBCASE("non-numeric value") {
        auto j = minimal();
        j["nodes"][0]["metrics"]["latency_ms"]["values"][1] = "x";
        const auto e = parse_error(j.dump());
        CHECK(e.kind() == SnapshotError::Kind::Schema);
        CHECK(e.where() == "$.nodes[0].metrics.latency_ms.values[1]");
    }
    SUBCASE("missing layers") {
        auto j = minimal();
        j.erase("layers");
        CHECK(parse_error(j.dump()).where() == "$.layers");
    }
    SUBCASE("bad timestamp") {
        auto j = minimal();
        j["timestamp"] = "2024-06-01 00:00:00";
        CHECK(parse_error(j.dump()).where() == "$.timestamp");
    }
    SUBCASE("single sample") {
        auto j = minimal();
        j["nodes"][0]["metrics"]["latency_ms"]["values"] = json::array({1.0});
        CHECK(parse_error(j.dump()).kind() == SnapshotError::Kind::Schema);
    }
    SUBCASE("non-positive interval") {
        auto j = minimal();
        j["nodes"][0]["metrics"]["latency_ms"]["interval_seconds"] = 0;
        CHECK(parse_error(j.dump()).kind() == SnapshotError::Kind::Schema);
    }
}

TEST_CASE("invariant rules") {
    auto two_nodes = [] {
        auto j = minimal();
        auto n = j["nodes"][0];
        n["id"] = "app-2";
        j["nodes"].push_back(n);
        return j;
    };
    SUBCASE("unequal lengths") {
        auto j = two_nodes();
        j["nodes"][1]["metrics"]["latency_ms"]["values"] = json::array({1, 2});
        CHECK(parse_error(j.dump()).where() == "metrics.equal_length");
    }
    SUBCASE("unequal intervals") {
        auto j = two_nodes();
        j["nodes"][1]["metrics"]["latency_ms"]["interval_seconds"] = 30;
        CHECK(parse_error(j.dump()).where() == "metrics.equal_interval");
    }
    SUBCASE("duplicate node id") {
        auto j = two_nodes();
        j["nodes"][1]["id"] = "app-1";
        CHECK(parse_error(j.dump()).where() == "nodes.unique_ids");
    }
    SUBCASE("unknown layer") {
        auto j = minimal();
        j["nodes"][0]["layer"] = "Nowhere";
        CHECK(parse_error(j.dump()).where() == "nodes.layer_exists");
    }
    SUBCASE("self edge") {
        auto j = minimal();
        j["edges"] = json::array({{{"source", "app-1"}, {"target", "app-1"}}});
        CHECK(parse_error(j.dump()).where() == "edges.no_self_edge");
    }
    SUBCASE("ranks not contiguous") {
        auto j = minimal();
        j["layers"][0]["rank"] = 1;
        CHECK(parse_error(j.dump()).where() == "layers.contiguous_ranks");
    }
    SUBCASE("node without metrics") {
        auto j = minimal();
        j["nodes"][0]["metrics"] = json::object();
        CHECK(parse_error(j.dump()).where() == "nodes.has_metrics");
    }
    SUBCASE("disconnected graph only warns") {
        const auto s = parse_snapshot(two_nodes().dump());
        REQUIRE(s.warnings.size() == 1);
        CHECK(s.warnings[0].find("not connected") != std::string::npos);
    }
}

TEST_CASE("malformed JSON") {
    CHECK(parse_error("{\"topology_id\": ").kind() == SnapshotError::Kind::MalformedJson);
    CHECK(parse_error("").kind() == SnapshotError::Kind::MalformedJson);
}

TEST_CASE("serialize round trip") {
    const auto s = parse_snapshot(testutil::kMinimalSnapshot);
    CHECK(parse_snapshot(serialize_snapshot(s)) == s);
    CHECK(serialize_snapshot(s) == serialize_snapshot(parse_snapshot(serialize_snapshot(s))));

    auto flagged = minimal();
    flagged["nodes"][0]["metrics"]["latency_ms"]["anomalous"] = false;
    const auto f = parse_snapshot(flagged.dump());
    const auto once = serialize_snapshot(f);
    CHECK(once.find("\"anomalous\": false") != std::string::npos);
    CHECK(serialize_snapshot(parse_snapshot(once)) == once);
    CHECK(parse_snapshot(once).find_metric("app-1", "latency_ms")->anomalous == std::optional<bool>(false));
}

TEST_CASE("property: random snapshots round-trip and share T") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 200; ++i) {
        const auto s = random_snapshot(rng);
        const auto text = serialize_snapshot(s);
        const auto back = parse_snapshot(text);
        REQUIRE(back == s);
        CHECK(serialize_snapshot(back) == text);
        const auto T = back.series_length();
        for (const auto &n : back.nodes)
            for (const auto &[_, m] : n.metrics) {
                CHECK(m.values.size() == T);
                CHECK(m.interval_seconds == back.nodes.front().metrics.begin()->second.interval_seconds);
            }
    }
}

TEST_CASE("property: validation is total on mutated input") {
    std::mt19937_64 rng(11);
    const std::string base = serialize_snapshot(parse_snapshot(testutil::kMinimalSnapshot));
    std::uniform_int_distribution<int> byte(0, 255);
    int accepted = 0, rejected = 0;
    for (int i = 0; i < 2000; ++i) {
        std::string s = base;
        const int edits = 1 + static_cast<int>(rng() % 4);
        for (int e = 0; e < edits; ++e) {
            const auto pos = rng() % s.size();
            switch (rng() % 3) {
            case 0: s[pos] = static_cast<char>(byte(rng)); break;
            case 1: s.erase(pos, 1 + rng() % 8); break;
            default: s.insert(pos, 1, "{}[],:\"0-e"[rng() % 10]); break;
            }
            if (s.empty()) s = "x";
        }
        try {
            parse_snapshot(s);
            ++accepted;
        } catch (const SnapshotError &) {
            ++rejected;
        }
    }
    CHECK(accepted + rejected == 2000);
}

TEST_CASE("ground truth round trip and pairing") {
    const auto s = testutil::load_fixture("vista", "gateway-resource-contention");
    const auto truth =
        load_ground_truth(truth_path_for(testutil::fixture_store() / "vista" / "gateway-resource-contention.json"));
    CHECK(parse_ground_truth(serialize_ground_truth(truth)) == truth);
    CHECK_NOTHROW(check_truth_matches(truth, s));
    auto wrong = truth;
    wrong.fault_metric = "no_such_metric";
    CHECK_THROWS_AS(check_truth_matches(wrong, s), SnapshotError);
    CHECK(truth.gold_text().find("\n1. ") != std::string::npos);
}

TEST_CASE("validate_store") {
    SUBCASE("empty directory") {
        TempDir dir;
        const auto listing = validate_store(dir.path());
        CHECK(listing.entries.empty());
        CHECK(listing.problems.empty());
    }
    SUBCASE("eight scenario fixtures, all with ground truth") {
        const auto listing = validate_store(testutil::fixture_store());
        CHECK(listing.problems.empty());
        REQUIRE(listing.entries.size() == 8);
        for (const auto &e : listing.entries) CHECK(e.has_ground_truth);
        CHECK(listing.entries.front().snapshot_id == "aiml/gpu-over-utilization");
    }
    SUBCASE("corrupt file is reported, valid ones kept") {
        TempDir dir;
        write_file(dir / "good.json", testutil::kMinimalSnapshot);
        write_file(dir / "bad.json", "{ not json");
        const auto listing = validate_store(dir.path());
        REQUIRE(listing.entries.size() == 1);
        CHECK(listing.entries[0].snapshot_id == "good");
        CHECK_FALSE(listing.entries[0].has_ground_truth);
        REQUIRE(listing.problems.size() == 1);
        CHECK(listing.problems[0].path.filename() == "bad.json");
    }
    SUBCASE("missing directory throws") {
        CHECK_THROWS(validate_store("/nonexistent/rca-store"));
    }
}

TEST_CASE("committed fixtures match regeneration") {
    for (auto spec : rca::faultlab::list_scenarios()) {
        spec.seed = 16;
        const auto out = rca::faultlab::generate_scenario(spec);
        const auto path = testutil::fixture_store() / out.snapshot.topology_id / (spec.name + ".json");
        CHECK_MESSAGE(read_file(path) == serialize_snapshot(out.snapshot), spec.name);
        CHECK(read_file(truth_path_for(path)) == serialize_ground_truth(out.truth));
    }
}
