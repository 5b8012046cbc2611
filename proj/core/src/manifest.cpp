#include "wlc/manifest.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "wlc/scene_io.hpp"

namespace wlc {

using nlohmann::json;

RunManifest make_manifest(const Scene& scene, const EngineConfig& config,
                          const EnergyResult& result) {
    RunManifest m;
    m.kind = "energy";
    m.scene_text = render_scene(scene);
    m.scene_hash = result.scene_hash;
    m.seed = config.seed;
    m.n_loops = config.n_loops;
    m.points = config.points;
    m.workers = result.workers;
    m.x_samples = config.x_samples;
    m.scheme = config.scheme == LoopScheme::bisection ? "bisection"
                                                      : "incremental";
    m.extrapolate = config.extrapolate;
    m.beta_min = config.beta_min;
    m.beta_max = config.beta_max;
    m.beta_nodes = config.beta_nodes;
    m.nodes_per_decade = config.nodes_per_decade;
    for (const SpectralEstimate& s : result.spectral) m.grid.push_back(s.beta);
    m.weights = result.weights;
    m.value = result.value;
    m.stat_error = result.stat_error;
    m.quadrature_error = result.quadrature_error;
    m.discretization_error = result.discretization_error;
    m.lmin = result.lmin;
    m.lmin_approximate = result.lmin_approximate;
    return m;
}

std::string manifest_json(const RunManifest& m) {
    json j;
    j["kind"] = m.kind;
    j["version"] = m.version;
    j["wall_seconds"] = m.wall_seconds;
    j["scene"] = m.scene_text;
    j["scene_hash"] = m.scene_hash;
    j["seed"] = m.seed;
    j["n_loops"] = m.n_loops;
    j["points"] = m.points;
    j["workers"] = m.workers;
    j["x_samples"] = m.x_samples;
    j["scheme"] = m.scheme;
    j["extrapolate"] = m.extrapolate;
    j["beta_min"] = m.beta_min;
    j["beta_max"] = m.beta_max;
    j["beta_nodes"] = m.beta_nodes;
    j["nodes_per_decade"] = m.nodes_per_decade;
    j["grid"] = m.grid;
    j["weights"] = m.weights;
    j["value"] = m.value;
    j["stat_error"] = m.stat_error;
    j["quadrature_error"] = m.quadrature_error;
    j["discretization_error"] = m.discretization_error;
    j["lmin"] = m.lmin;
    j["lmin_approximate"] = m.lmin_approximate;
    return j.dump(2) + "\n";
}

RunManifest parse_manifest(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("manifest parse error: ") +
                                 e.what());
    }
    RunManifest m;
    try {
        m.kind = j.at("kind").get<std::string>();
        m.version = j.at("version").get<std::string>();
        m.wall_seconds = j.at("wall_seconds").get<double>();
        m.scene_text = j.at("scene").get<std::string>();
        m.scene_hash = j.at("scene_hash").get<std::uint64_t>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.n_loops = j.at("n_loops").get<std::uint64_t>();
        m.points = j.at("points").get<std::uint32_t>();
        m.workers = j.at("workers").get<std::uint32_t>();
        m.x_samples = j.at("x_samples").get<std::uint32_t>();
        m.scheme = j.at("scheme").get<std::string>();
        m.extrapolate = j.at("extrapolate").get<bool>();
        m.beta_min = j.at("beta_min").get<double>();
        m.beta_max = j.at("beta_max").get<double>();
        m.beta_nodes = j.at("beta_nodes").get<std::uint32_t>();
        m.nodes_per_decade = j.at("nodes_per_decade").get<std::uint32_t>();
        m.grid = j.at("grid").get<std::vector<double>>();
        m.weights = j.at("weights").get<std::vector<double>>();
        m.value = j.at("value").get<double>();
        m.stat_error = j.at("stat_error").get<double>();
        m.quadrature_error = j.at("quadrature_error").get<double>();
        m.discretization_error = j.at("discretization_error").get<double>();
        m.lmin = j.at("lmin").get<double>();
        m.lmin_approximate = j.at("lmin_approximate").get<bool>();
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("manifest missing field: ") +
                                 e.what());
    }
    if (m.scheme != "bisection" && m.scheme != "incremental")
        throw std::invalid_argument("manifest scheme must be bisection or "
                                 "incremental");
    return m;
}

void save_manifest(const std::string& path, const RunManifest& m) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write manifest: " + path);
    f << manifest_json(m);
    if (!f) throw std::runtime_error("short write to manifest: " + path);
}

RunManifest load_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open manifest: " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_manifest(buf.str());
}

std::pair<Scene, EngineConfig> manifest_run_inputs(const RunManifest& m) {
    Scene scene = parse_scene(m.scene_text);
    if (scene_hash(scene) != m.scene_hash)
        throw std::invalid_argument("manifest scene hash mismatch");
    EngineConfig config;
    config.n_loops = m.n_loops;
    config.points = m.points;
    config.seed = m.seed;
    config.scheme = m.scheme == "bisection" ? LoopScheme::bisection
                                            : LoopScheme::incremental;
    config.workers = m.workers;
    config.x_samples = m.x_samples;
    config.beta_min = m.beta_min;
    config.beta_max = m.beta_max;
    config.beta_nodes = m.beta_nodes;
    config.nodes_per_decade = m.nodes_per_decade;
    config.extrapolate = m.extrapolate;
    return {std::move(scene), config};
}

} // namespace wlc
