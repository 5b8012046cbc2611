#pragma once
// delta-plate stacks on a line: irreducible 2- and 3-body vacuum energies
// from log-determinants of the plate scattering matrix, integrated over
// Euclidean frequency.  Serves as an oracle independent of the path
// sampler: no randomness, certified by quadrature refinement.

#include <cstdint>
#include <vector>

#include "wlc/combinatorics.hpp"

namespace wlc {

struct PlateStack {
    std::vector<double> positions; // length units
    std::vector<double> couplings; // deltas of strength lambda >= 0
};

void validate_stack(const PlateStack& stack);

// ln det [ delta_ij + (lambda_i / 2 xi) e^{-xi |a_i - a_j|} ] over i,j in s
double subset_logdet(const PlateStack& stack, SubsetMask s, double xi);

// two-plate reflection factor product entering 1/X_ij
double x_factor_denominator(const PlateStack& stack, std::size_t i,
                            std::size_t j, double xi);

struct ScatterResult {
    double value = 0.0;
    double quadrature_error = 0.0;
    bool converged = false;
};

// (1/2pi) int_0^inf dxi of the alternating subset sum, assembled as one
// integrand so the divergent single-plate logs cancel pointwise
ScatterResult irreducible_energy_1d(const PlateStack& stack,
                                    double rel_tol = 1e-9);

// energies along a scan moving plate 2 through the given positions
std::vector<ScatterResult> coincidence_scan(const PlateStack& stack,
                                            const std::vector<double>& a2_seq,
                                            double rel_tol = 1e-9);

} // namespace wlc
