#pragma once
// finite-difference oracle for small scenes: dense spectra of
// H = -laplacian/2 + V on 1d/2d grids with dirichlet outer walls, one
// eigenproblem per object subset.  Everything here is deterministic and
// cross-checks the path sampler.

#include <cstdint>
#include <span>
#include <vector>

#include "wlc/combinatorics.hpp"
#include "wlc/geometry.hpp"

namespace wlc {

struct GridConfig {
    std::uint32_t points = 200; // interior nodes per axis
};

// dense complete spectra stay tractable up to this many interior nodes
inline constexpr std::uint32_t kMaxLabPoints = 20000;

struct Spectrum {
    std::vector<double> eigenvalues; // ascending, strictly positive
    double h = 0.0;                  // grid spacing (largest axis)
    SubsetMask subset = 0;
};

struct LabGrid {
    std::uint32_t dim = 1;
    std::uint32_t n[2] = {0, 0};   // interior nodes per axis
    double h[2] = {0.0, 0.0};
    double lo[2] = {0.0, 0.0};     // box corner; node i sits at lo + (i+1) h
    std::vector<std::int32_t> compact; // grid node -> matrix index, -1 removed
    std::uint32_t kept = 0;
};

struct EigenSystem {
    LabGrid grid;
    std::vector<double> values;
    std::vector<double> vectors; // kept x kept, column-major, empty if not requested
    SubsetMask subset = 0;
};

// assembles H restricted to the objects selected by `subset` and solves it
// completely (dirichlet objects delete grid nodes, potentials add to the
// diagonal); throws "grid too large" past kMaxLabPoints
EigenSystem build_eigensystem(const Scene& scene, SubsetMask subset,
                              const GridConfig& grid, bool with_vectors);

Spectrum build_spectrum(const Scene& scene, SubsetMask subset,
                        const GridConfig& grid);

// sum_n e^{-beta mu_n} with mu the stored eigenvalues of -laplacian/2 + V
double spectral_function(const Spectrum& spectrum, double beta);

// alternating subset sum of spectral functions at one beta
double irreducible_spectral_exact(const Scene& scene, const GridConfig& grid,
                                  double beta);

// same, evaluated on a beta list with the 2^N spectra built once (parallel
// across subsets); out[b] = phi_tilde(beta_list[b])
std::vector<double> irreducible_spectral_table(const Scene& scene,
                                               const GridConfig& grid,
                                               std::span<const double> betas);

struct DecayResult {
    double slope = 0.0;     // d ln|phi_tilde| / d (1/beta), expected -l_min^2/2
    double power = 0.0;     // d ln|phi_tilde| / d ln beta, alternative model
    double ssr_exp = 0.0;
    double ssr_pow = 0.0;
    bool power_series = false; // power-law model wins: subtraction incomplete
    std::vector<double> phi;   // phi_tilde at each requested beta
};

// fits the large-1/beta suppression of |phi_tilde|; rejects N=1 scenes
DecayResult decay_check(const Scene& scene, const GridConfig& grid,
                        std::span<const double> betas);

struct KernelTriple {
    Vec3 x{};
    Vec3 y{};
    double beta = 0.0;
};

struct KernelCheckResult {
    bool pass = false;
    double worst_excess = 0.0; // max of K - bound - slack over the triples
    double min_value = 0.0;    // most negative kernel value seen
    std::size_t checked = 0;
};

// eigenfunction-expansion kernel against the free gaussian bound; slack
// covers grid error, which enters at relative order h^2/beta
KernelCheckResult kernel_bound_check(const Scene& scene, SubsetMask subset,
                                     const GridConfig& grid,
                                     std::span<const KernelTriple> triples);

// kernel at the nearest grid nodes, 0 if either node was deleted
double heat_kernel_value(const EigenSystem& sys, const Vec3& x, const Vec3& y,
                         double beta);

struct HeatKernelFit {
    double volume_coeff = 0.0;   // leading (2 pi beta)^{-d/2} coefficient
    double boundary_coeff = 0.0; // next order, proportional to sqrt(beta)
    double curvature_coeff = 0.0;
    double ssr = 0.0;
    bool window_ok = false; // next-order term stays under 10% in the window
};

// least-squares fit of phi(beta) (2 pi beta)^{d/2} = a0 + a1 sqrt(beta) + a2 beta
HeatKernelFit heat_kernel_fit(const Spectrum& spectrum, std::uint32_t dim,
                              std::span<const double> betas);

} // namespace wlc
