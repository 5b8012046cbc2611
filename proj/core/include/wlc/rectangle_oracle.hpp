#pragma once
// closed-form reference energies for the 2^d-plane hyper-rectangle family:
//   E = -Gamma((d+1)/2) / (4 pi^((d+1)/2)) * V * sum_{n>=1} L(n)^-(d+1),
//   L(n)^2 = sum_j n_j^2 l_j^2,  V = prod_j l_j.
// Two evaluation routes: the literal truncated lattice sum with an
// integral-comparison tail bound, and a certified route that reduces the
// lattice sum one axis at a time (zeta plus exponentially small Bessel
// corrections), reaching ~1e-14 relative tails at any aspect ratio.

#include <array>
#include <cstdint>
#include <vector>

namespace wlc {

struct RectangleConfig {
    std::uint32_t dim = 1;
    std::array<double, 3> lengths{1.0, 1.0, 1.0};
    std::uint64_t n_max = 0; // 0 selects the certified route
};

struct OracleValue {
    double value = 0.0;
    double tail_bound = 0.0; // rigorous bound on the truncation remainder
};

// dispatches on n_max: truncated lattice sum or certified evaluation
OracleValue hrectangle_energy(const RectangleConfig& config);

OracleValue hrectangle_energy_certified(std::uint32_t dim,
                                        const std::array<double, 3>& lengths);

struct CollapseResult {
    bool pass = false;
    double extrapolated = 0.0; // Richardson limit of E(l_k = eps), eps -> 0
    double target = 0.0;       // half the (d-1)-dimensional energy
    std::vector<double> energies; // along eps = 1/2, 1/4, ..., 1/64
};

// shrinking axis k must land on half the one-lower-dimensional energy
CollapseResult collapse_limit_check(const RectangleConfig& config,
                                    std::uint32_t axis);

} // namespace wlc
