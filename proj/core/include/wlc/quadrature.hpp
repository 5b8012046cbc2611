#pragma once
// Double-exponential quadrature on (0, inf) and trapezoidal weights on a
// logarithmic grid.  The DE rule tolerates integrable endpoint features
// (logarithmic at 0, slow algebraic decay at infinity) without special
// casing, which is exactly what the scattering integrands need.

#include <functional>
#include <vector>

namespace wlc {

struct QuadResult {
    double value = 0.0;
    double error = 0.0; // change under the final step halving
    int levels = 0;     // refinement levels actually used
    bool converged = false;
};

// integral of f over (0, inf) via the exp-sinh substitution
// x = scale * exp(sinh(t)); refines until the relative change of a halving
// step drops below rel_tol or max_level is hit.
QuadResult integrate_exp_sinh(const std::function<double(double)>& f,
                              double scale, double rel_tol,
                              int max_level = 12);

// trapezoidal weights for nodes strictly increasing in x, applied in
// log space: returns w_j with sum_j w_j g(x_j) ~ int g(x) dx/x
std::vector<double> log_trapezoid_weights(const std::vector<double>& x);

} // namespace wlc
