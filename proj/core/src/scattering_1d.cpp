#include "wlc/scattering_1d.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "wlc/quadrature.hpp"

namespace wlc {

namespace {

constexpr double kPi = std::numbers::pi;

double reflection(double lambda, double xi) { return lambda / (lambda + 2.0 * xi); }

// Normalized subset determinants det(M_s) / prod_i (1 + lambda_i / 2 xi)
// vanish like xi^(k-1) as xi -> 0, so the textbook expansion (unit diagonal
// minus products of r_i e^{-xi gap}) cancels catastrophically exactly where
// the contour integral picks up its weight.  Regrouped with
// alpha_i = 1 - r_i = xi A_i and gamma_ij = 1 - e^{-2 xi gap} = xi G_ij:
//
//   d_ij / xi = G_ij + (A_j + A_i r_j) e^{-2 xi gap}        (all terms >= 0)
//   d_123     = d_12 d_23 - r_1 r_3 e^{-2 xi (g12+g23)} alpha_2^2
//               (plates ordered by position, so e12 e13 e23 = e13^2 exactly)
//
// Every logarithm below is assembled from these forms, which hold to full
// relative precision over the whole xi contour.
struct PairDet {
    double scaled;   // d_ij / xi, strictly positive for finite couplings
    double product;  // r_i r_j e^{-2 xi gap}, in [0, 1)
};

PairDet pair_det(double li, double lj, double gap, double xi) {
    const double ai = 2.0 / (li + 2.0 * xi);
    const double aj = 2.0 / (lj + 2.0 * xi);
    const double ri = reflection(li, xi);
    const double rj = reflection(lj, xi);
    const double esq = std::exp(-2.0 * xi * gap);
    const double gij = gap > 0.0 ? -std::expm1(-2.0 * xi * gap) / xi : 0.0;
    return {gij + (aj + ai * rj) * esq, ri * rj * esq};
}

double pair_logdet(const PairDet& p, double xi) {
    return p.product < 0.5 ? std::log1p(-p.product)
                           : std::log(xi) + std::log(p.scaled);
}

// t = (d_12 d_23 - d_123) / (d_12 d_23); the xi powers cancel in the ratio,
// so it is finite for every representable xi > 0 and lies in [0, 1)
double triple_ratio(double l1, double l2, double l3, double span, double xi,
                    const PairDet& p12, const PairDet& p23) {
    const double a2 = 2.0 / (l2 + 2.0 * xi);
    const double e13sq = std::exp(-2.0 * xi * span);
    return reflection(l1, xi) * reflection(l3, xi) * e13sq * a2 * a2 /
           (p12.scaled * p23.scaled);
}

std::vector<std::size_t> subset_indices(SubsetMask s, std::size_t n) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i)
        if (s & (SubsetMask(1) << i)) idx.push_back(i);
    return idx;
}

} // namespace

void validate_stack(const PlateStack& stack) {
    const std::size_t k = stack.positions.size();
    if (k != 2 && k != 3)
        throw std::invalid_argument("plate stack must hold 2 or 3 plates");
    if (stack.couplings.size() != k)
        throw std::invalid_argument("one coupling per plate required");
    for (double a : stack.positions)
        if (!std::isfinite(a))
            throw std::invalid_argument("plate positions must be finite");
    for (double l : stack.couplings)
        if (!(l >= 0.0) || !std::isfinite(l))
            throw std::invalid_argument("couplings must be finite and nonnegative");
}

double subset_logdet(const PlateStack& stack, SubsetMask s, double xi) {
    validate_stack(stack);
    if (!(xi > 0.0)) throw std::invalid_argument("xi must be positive");
    const std::size_t n = stack.positions.size();
    if (s >= (SubsetMask(1) << n))
        throw std::invalid_argument("subset mask out of range");
    auto idx = subset_indices(s, n);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return stack.positions[a] < stack.positions[b];
    });
    double log_diag = 0.0;
    for (std::size_t i : idx)
        log_diag += std::log1p(stack.couplings[i] / (2.0 * xi));
    if (idx.size() <= 1) return log_diag;
    auto lam = [&](std::size_t p) { return stack.couplings[idx[p]]; };
    auto gap = [&](std::size_t p, std::size_t q) {
        return stack.positions[idx[q]] - stack.positions[idx[p]];
    };
    if (idx.size() == 2) {
        const PairDet p01 = pair_det(lam(0), lam(1), gap(0, 1), xi);
        return log_diag + pair_logdet(p01, xi);
    }
    const PairDet p12 = pair_det(lam(0), lam(1), gap(0, 1), xi);
    const PairDet p23 = pair_det(lam(1), lam(2), gap(1, 2), xi);
    const double t =
        triple_ratio(lam(0), lam(1), lam(2), gap(0, 2), xi, p12, p23);
    if (!(t < 1.0))
        throw std::runtime_error("determinant positivity violated");
    return log_diag + pair_logdet(p12, xi) + pair_logdet(p23, xi) +
           std::log1p(-t);
}

double x_factor_denominator(const PlateStack& stack, std::size_t i,
                            std::size_t j, double xi) {
    const double e =
        std::exp(-xi * std::abs(stack.positions[i] - stack.positions[j]));
    return 1.0 - reflection(stack.couplings[i], xi) *
                     reflection(stack.couplings[j], xi) * e * e;
}

ScatterResult irreducible_energy_1d(const PlateStack& stack, double rel_tol) {
    validate_stack(stack);
    const std::size_t k = stack.positions.size();

    // the single-plate logs cancel in the alternating sum; what survives is
    // built from normalized determinants only.  For three plates the pair
    // factors d_12 and d_23 drop out of
    // ln d_123 - ln d_12 - ln d_13 - ln d_23 via the exact factorization of
    // d_123, leaving log1p(-t) - ln d_13.
    std::array<std::size_t, 3> ord{0, 1, 2};
    std::sort(ord.begin(), ord.begin() + static_cast<std::ptrdiff_t>(k),
              [&](std::size_t a, std::size_t b) {
                  return stack.positions[a] < stack.positions[b];
              });
    auto lam = [&](std::size_t p) { return stack.couplings[ord[p]]; };
    auto gap = [&](std::size_t p, std::size_t q) {
        return stack.positions[ord[q]] - stack.positions[ord[p]];
    };

    auto integrand = [&](double xi) -> double {
        double g = 0.0;
        if (k == 2) {
            g = pair_logdet(pair_det(lam(0), lam(1), gap(0, 1), xi), xi);
        } else {
            const PairDet p12 = pair_det(lam(0), lam(1), gap(0, 1), xi);
            const PairDet p23 = pair_det(lam(1), lam(2), gap(1, 2), xi);
            const PairDet p13 = pair_det(lam(0), lam(2), gap(0, 2), xi);
            const double t =
                triple_ratio(lam(0), lam(1), lam(2), gap(0, 2), xi, p12, p23);
            if (!(t < 1.0))
                throw std::runtime_error("integrand cancellation violated");
            g = std::log1p(-t) - pair_logdet(p13, xi);
        }
        if (!std::isfinite(g))
            throw std::runtime_error("integrand cancellation violated");
        return g;
    };

    double span = 0.0;
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j)
            span = std::max(span,
                            std::abs(stack.positions[i] - stack.positions[j]));
    if (span <= 0.0) {
        double lam = 0.0;
        for (double l : stack.couplings) lam = std::max(lam, l);
        span = lam > 0.0 ? 1.0 / lam : 1.0;
    }

    const QuadResult q = integrate_exp_sinh(integrand, 0.5 / span, rel_tol);
    ScatterResult out;
    out.value = q.value / (2.0 * kPi);
    out.quadrature_error = q.error / (2.0 * kPi);
    out.converged = q.converged;
    return out;
}

std::vector<ScatterResult> coincidence_scan(const PlateStack& stack,
                                            const std::vector<double>& a2_seq,
                                            double rel_tol) {
    validate_stack(stack);
    if (stack.positions.size() != 3)
        throw std::invalid_argument("coincidence scan needs 3 plates");
    std::vector<ScatterResult> out;
    PlateStack moved = stack;
    for (double a2 : a2_seq) {
        moved.positions[1] = a2;
        out.push_back(irreducible_energy_1d(moved, rel_tol));
    }
    return out;
}

} // namespace wlc
