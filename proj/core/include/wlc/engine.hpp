#pragma once
// Worldline Monte Carlo engine.  The irreducible N-body spectral function is
// estimated as
//
//   phi_tilde(beta) = (-1)^N (2 pi beta)^(-d/2) Vol(box) < kill(x, loop) >
//
// with x uniform over a sampling box that provably contains the support of
// the kill probability, and loops drawn from a counter-based ensemble.  The
// energy follows by trapezoidal quadrature in ln(beta) of
// -(1/sqrt(8 pi)) phi_tilde(beta) beta^(-3/2) with explicit truncation
// accounting at both ends.
//
// Every estimate runs the (M/2, M) refinement pair in one pass: the coarse
// value walks the even-index samples of each loop, so the pair shares loops
// and base points and their difference drives a Richardson step.  Statistical
// errors are delete-1 jackknife over loops, which is the correct clustering
// because loops are reused across base points and beta nodes.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wlc/geometry.hpp"
#include "wlc/loops.hpp"
#include "wlc/stats.hpp"

namespace wlc {

struct EngineConfig {
    std::uint64_t n_loops = 20000;
    std::uint32_t points = 4096; // fine dyadic sample count M
    std::uint64_t seed = 1;
    LoopScheme scheme = LoopScheme::bisection;
    std::uint32_t workers = 0;   // 0 -> hardware concurrency
    std::uint32_t x_samples = 4; // base points per loop per beta node

    // beta grid: explicit [beta_min, beta_max] when both are positive,
    // otherwise chosen automatically (envelope rule below, adaptive tail)
    double beta_min = 0.0;
    double beta_max = 0.0;
    std::uint32_t beta_nodes = 0; // total nodes for an explicit grid (0: auto)
    std::uint32_t nodes_per_decade = 8;

    // combine the refinement pair into a Richardson-extrapolated value
    bool extrapolate = true;
    // accept scenes whose empty-common-intersection check is undecidable
    bool acknowledge_undecidable = false;
    // optional loop bank; read when the file exists, else loops regenerate
    std::string loop_cache;
};

struct SpectralEstimate {
    double beta = 0.0;
    double value = 0.0;   // estimate of phi_tilde(beta)
    double stderr_ = 0.0; // jackknife standard error
    std::uint64_t n_loops = 0;
    std::uint64_t n_basepoints = 0;
    BoxShape sampling_box{};
    double box_volume = 0.0;
    double value_fine = 0.0;   // plain fine-level estimate (no extrapolation)
    double value_coarse = 0.0; // even-index half of the refinement pair
};

struct EnergyResult {
    double value = 0.0;
    double stat_error = 0.0;
    double quadrature_error = 0.0;     // T_low + T_tail + step-halving change
    double discretization_error = 0.0; // |value(M)| vs |value(M/2)| gap
    double lmin = 0.0;
    bool lmin_approximate = false;
    std::vector<SpectralEstimate> spectral; // one row per beta node, ascending
    std::vector<double> weights;            // quadrature weights, d(beta) units
    // metadata for the run manifest
    std::uint64_t scene_hash = 0;
    std::uint64_t seed = 0;
    std::uint64_t n_loops = 0;
    std::uint32_t points = 0;
    std::uint32_t workers = 0;
    double tail_low = 0.0;  // truncation bound below beta_min
    double tail_high = 0.0; // power-law tail estimate beyond beta_max
};

struct LminResult {
    double value = 0.0;
    bool approximate = false; // numerical upper bound rather than analytic
};

// shortest closed tour touching every object: analytic for hyperplane
// families grouped into mutually orthogonal parallel groups (2 sqrt(sum of
// squared spans)), multi-start coordinate-descent upper bound otherwise
LminResult estimate_lmin(const Scene& scene);

// axis-aligned box containing the support of the kill probability at this
// beta: the union bounding box of all objects padded by 5 sqrt(beta) *
// max_radius per axis when every object is bounded; with unbounded objects,
// the bounding box of the intersection of all per-object reach regions.
// Always clipped by the scene domain.  nullopt means the support is empty
// (no loop can reach every object) and the estimate is exactly zero.
// Throws std::runtime_error("sampling box unbounded") when the reach
// intersection is unbounded and no domain box closes it.
std::optional<BoxShape> sampling_box(const Scene& scene, double beta,
                                     double max_radius);

// mean over loops of the probability that the physical loop at (x, beta) is
// killed by every object (and never exits the domain box, when present)
MeanErr estimate_kill_probability(const Scene& scene,
                                  const LoopEnsembleSpec& ensemble,
                                  const Vec3& x, double beta,
                                  bool extrapolate = true,
                                  std::uint32_t workers = 0);

// single-beta spectral estimate; uses config.{n_loops, points, seed, scheme,
// workers, x_samples, extrapolate, loop_cache}
SpectralEstimate estimate_spectral(const Scene& scene, double beta,
                                   const EngineConfig& config);

// full energy: builds the beta grid, streams the ensemble once per node
// batch, extends the grid until the last decade contributes < 0.5%, and
// assembles value and the three error components.
// Throws std::invalid_argument when the common-intersection check certifies
// a nonempty intersection (the subtraction is then infinite), or reports
// undecidable without config.acknowledge_undecidable.
// Throws std::runtime_error("tail not converged") when the large-beta fit
// fails to decay within the extension budget.
EnergyResult integrate_energy(const Scene& scene, const EngineConfig& config);

} // namespace wlc
