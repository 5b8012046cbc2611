#include "wlc/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace wlc {

namespace {

// contribution of the node at parameter u to sum f(x(u)) x'(u)
double node_term(const std::function<double(double)>& f, double scale,
                 double u) {
    const double sh = std::sinh(u);
    const double x = scale * std::exp(sh);
    const double w = x * std::cosh(u);
    if (x <= 0.0 || !std::isfinite(x) || !std::isfinite(w)) return 0.0;
    const double fx = f(x);
    return std::isfinite(fx) ? fx * w : 0.0;
}

} // namespace

QuadResult integrate_exp_sinh(const std::function<double(double)>& f,
                              double scale, double rel_tol, int max_level) {
    if (scale <= 0.0)
        throw std::invalid_argument("integrate_exp_sinh: scale must be > 0");
    const double tmax = 4.0; // exp(sinh(4)) spans ~23 decades each way
    double h = 0.5;

    // trapezoid sum at the coarsest grid
    double sum = node_term(f, scale, 0.0);
    for (double t = h; t <= tmax; t += h)
        sum += node_term(f, scale, t) + node_term(f, scale, -t);

    QuadResult r;
    double prev = h * sum;
    for (int lvl = 1; lvl <= max_level; ++lvl) {
        h *= 0.5;
        // new points sit at odd multiples of the refined step
        for (double t = h; t <= tmax; t += 2.0 * h)
            sum += node_term(f, scale, t) + node_term(f, scale, -t);
        const double cur = h * sum;
        r.levels = lvl;
        r.error = std::abs(cur - prev);
        r.value = cur;
        const double denom = std::max(std::abs(cur), 1e-300);
        if (lvl >= 3 && r.error <= rel_tol * denom) {
            r.converged = true;
            return r;
        }
        prev = cur;
    }
    return r;
}

std::vector<double> log_trapezoid_weights(const std::vector<double>& x) {
    const std::size_t n = x.size();
    if (n < 2)
        throw std::invalid_argument("log_trapezoid_weights: need >= 2 nodes");
    std::vector<double> lx(n), w(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i] <= 0.0)
            throw std::invalid_argument("log_trapezoid_weights: nodes must be > 0");
        if (i > 0 && x[i] <= x[i - 1])
            throw std::invalid_argument("log_trapezoid_weights: nodes must increase");
        lx[i] = std::log(x[i]);
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double dh = lx[i + 1] - lx[i];
        w[i] += 0.5 * dh;
        w[i + 1] += 0.5 * dh;
    }
    return w;
}

} // namespace wlc
