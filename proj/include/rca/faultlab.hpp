#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rca/statrca.hpp"
#include "rca/topology.hpp"

namespace rca::faultlab {

enum class TopologyKind { Vista, Aiml };

std::string to_string(TopologyKind kind);

struct Coupling {
    statrca::SeriesRef source;
    statrca::SeriesRef dest;
    int lag = 1;
    double gain = 0.9;
};

struct ScenarioSpec {
    std::string name;          // slug, e.g. "gateway-resource-contention"
    std::string display_name;  // e.g. "Gateway Resource Contention"
    std::string usecase;       // label used in evaluation tables
    TopologyKind topology = TopologyKind::Vista;
    statrca::SeriesRef fault_target;
    std::vector<Coupling> coupling;
    double noise_sigma = 0.05;
    std::size_t length = 200;
    std::uint64_t seed = 0;
    // Unrelated flagged series carrying their own transient burst.
    int distractors = 3;
    std::string distractor_layer;  // empty: any layer
};

struct ScenarioOutput {
    topology::TopologySnapshot snapshot;
    topology::GroundTruth truth;
};

struct GeneratorOptions {
    std::size_t length = 200;
    double noise_sigma = 0.05;
    double interval_seconds = 60.0;
};

/// Layers Application, Spokes, TGW, Gateways with baseline telemetry.
topology::TopologySnapshot make_vista_topology(std::uint64_t seed, const GeneratorOptions &options = {});

/// Layers Application, GPU, NICs, Compute, NetworkDevices with baseline telemetry.
topology::TopologySnapshot make_aiml_topology(std::uint64_t seed, const GeneratorOptions &options = {});

/// The eight fault scenarios with default parameters and seed 0.
std::vector<ScenarioSpec> list_scenarios();

/// Scenario by slug (or display name, case-insensitive). Throws std::invalid_argument
/// listing the valid slugs.
ScenarioSpec find_scenario(const std::string &name);

std::vector<std::string> scenario_names();

/// Baseline topology plus a level-shift fault on the target and lagged linear
/// propagation along the coupling tree. Deterministic in (spec, seed).
ScenarioOutput generate_scenario(const ScenarioSpec &spec);

}  // namespace rca::faultlab
