#pragma once
// Closed Brownian bridge ensembles.  A unit loop u has M+1 samples per
// coordinate on t = k/M with u_0 = u_M = 0 and covariance t(1-t); the
// physical loop at base point x and diffusion time beta is x + sqrt(beta) u.
//
// Loops are pure functions of (seed, scheme, loop index), drawn from
// counter-based streams: ensembles regenerate bitwise identically on any
// thread layout, and individual loops can be streamed without materializing
// the whole bank.  The bisection scheme keys its midpoint draws by absolute
// dyadic position, so the ensemble at 2M restricted to even indices is
// bitwise the ensemble at M with the same seed ("refinement pair").

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wlc {

enum class LoopScheme : std::uint32_t { incremental = 0, bisection = 1 };

struct LoopEnsembleSpec {
    std::uint64_t count = 0;  // L
    std::uint32_t points = 0; // M: samples per loop excluding the closing point
    std::uint32_t dim = 0;
    std::uint64_t seed = 0;
    LoopScheme scheme = LoopScheme::bisection;
};

// per-loop reductions kept for the whole ensemble; enough for axis-aligned
// reach tests and for the exit check of a finite embedding box
struct LoopExtents {
    std::array<double, 3> lo{};
    std::array<double, 3> hi{};
    double radius = 0.0; // max Euclidean sample norm
};

class LoopEnsemble {
  public:
    // validates the spec and runs one streaming pass to collect extents;
    // materializes the sample bank only if keep_samples is set
    LoopEnsemble(const LoopEnsembleSpec& spec, bool keep_samples = false);

    const LoopEnsembleSpec& spec() const { return spec_; }
    std::uint64_t count() const { return spec_.count; }
    std::uint32_t points() const { return spec_.points; }
    std::uint32_t dim() const { return spec_.dim; }

    // fills out with the (M+1) x dim samples of loop i, coordinate-minor
    void unit_loop(std::uint64_t i, std::span<double> out) const;

    const LoopExtents& extents(std::uint64_t i) const { return extents_[i]; }
    double max_radius() const { return max_radius_; }

    // physical samples at base point x: out_k = x + sqrt(beta) u_k
    void physical_loop(std::uint64_t i, std::span<const double> x, double beta,
                       std::span<double> out) const;

    bool materialized() const { return !samples_.empty(); }
    std::span<const double> samples(std::uint64_t i) const;

  private:
    LoopEnsembleSpec spec_;
    std::vector<LoopExtents> extents_;
    std::vector<double> samples_; // optional bank, loop-major
    double max_radius_ = 0.0;
};

// generates one unit loop straight into out ((M+1) x dim, coordinate-minor);
// the core primitive behind LoopEnsemble and the streaming engine pass
void generate_unit_loop(const LoopEnsembleSpec& spec, std::uint64_t index,
                        std::span<double> out);

// the ensemble refined to 2M with identical seed/scheme; bisection only
LoopEnsembleSpec refined_spec(const LoopEnsembleSpec& spec);

// binary cache: fixed 48-byte header, then count*(points+1)*dim f64
// little-endian samples, loop-major, coordinate-minor.
//   bytes 0..7   magic "WLLOOPS1"
//   8..11  u32 version (=1)     12..15 u32 points
//   16..23 u64 count            24..27 u32 dim
//   28..31 u32 scheme           32..39 u64 seed
//   40..47 reserved (zero)
void write_loop_cache(const std::string& path, const LoopEnsembleSpec& spec);
LoopEnsembleSpec read_loop_cache_header(const std::string& path);
// loads samples for loop i from a cache file previously written
void read_cached_loop(const std::string& path, const LoopEnsembleSpec& spec,
                      std::uint64_t i, std::span<double> out);

} // namespace wlc
