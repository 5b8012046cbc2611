#pragma once
// Run manifests: a JSON record carrying the scene, every knob that affects
// sampling, the realized beta grid and the results, so a run can be replayed
// bit-for-bit (same seed and worker count) from the manifest alone.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "wlc/engine.hpp"

namespace wlc {

inline constexpr const char* kVersion = "0.1.0";

struct RunManifest {
    std::string kind;       // "energy" or "spectral"
    std::string version = kVersion;
    double wall_seconds = 0.0; // informational; excluded from reproducibility
    std::string scene_text;    // canonical scene rendering
    std::uint64_t scene_hash = 0;

    std::uint64_t seed = 0;
    std::uint64_t n_loops = 0;
    std::uint32_t points = 0;
    std::uint32_t workers = 0;
    std::uint32_t x_samples = 0;
    std::string scheme = "bisection";
    bool extrapolate = true;

    double beta_min = 0.0; // as configured; 0 means automatic
    double beta_max = 0.0;
    std::uint32_t beta_nodes = 0;
    std::uint32_t nodes_per_decade = 0;
    std::vector<double> grid; // realized quadrature nodes
    std::vector<double> weights;

    double value = 0.0;
    double stat_error = 0.0;
    double quadrature_error = 0.0;
    double discretization_error = 0.0;
    double lmin = 0.0;
    bool lmin_approximate = false;
};

RunManifest make_manifest(const Scene& scene, const EngineConfig& config,
                          const EnergyResult& result);

std::string manifest_json(const RunManifest& m);
RunManifest parse_manifest(const std::string& json_text);

void save_manifest(const std::string& path, const RunManifest& m);
RunManifest load_manifest(const std::string& path);

// scene and engine configuration for replaying the recorded run
std::pair<Scene, EngineConfig> manifest_run_inputs(const RunManifest& m);

} // namespace wlc
