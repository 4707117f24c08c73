#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include "rca/topology.hpp"

#ifndef RCA_FIXTURE_DIR
#error "RCA_FIXTURE_DIR must point at tests/fixtures"
#endif

namespace testutil {

inline std::filesystem::path fixtures() { return RCA_FIXTURE_DIR; }
inline std::filesystem::path fixture_store() { return fixtures() / "store"; }

inline rca::topology::TopologySnapshot load_fixture(const std::string &topology, const std::string &scenario) {
    return rca::topology::load_snapshot(fixture_store() / topology / (scenario + ".json"));
}

// Fresh directory under the system temp dir, removed on scope exit.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("rca-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir &) = delete;
    TempDir &operator=(const TempDir &) = delete;

    const std::filesystem::path &path() const { return path_; }
    std::filesystem::path operator/(const std::string &name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline const char *kMinimalSnapshot = R"({
  "topology_id": "tiny",
  "timestamp": "2024-06-01T00:00:00Z",
  "layers": [{"name": "Application", "rank": 0}],
  "nodes": [{"id": "app-1", "layer": "Application",
             "metrics": {"latency_ms": {"unit": "ms", "interval_seconds": 60, "values": [1.0, 2.0, 3.5]}}}],
  "edges": []
})";

}  // namespace testutil
