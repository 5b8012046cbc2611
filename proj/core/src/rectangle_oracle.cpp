#include "wlc/rectangle_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace wlc {

namespace {

constexpr double kPi = std::numbers::pi;

struct Summed {
    double value = 0.0;
    double bound = 0.0;
};

void check_config(std::uint32_t dim, const std::array<double, 3>& lengths) {
    if (dim < 1 || dim > 3)
        throw std::invalid_argument("rectangle dimension must be 1, 2 or 3");
    for (std::uint32_t c = 0; c < dim; ++c)
        if (!(lengths[c] > 0.0) || !std::isfinite(lengths[c]))
            throw std::invalid_argument("rectangle lengths must be positive");
}

// rigorous pointwise bound K_nu(y) <= sqrt(2 pi / y) e^{nu^2/(2y)} e^{-y}
double bessel_term_bound(double pref, double nu, double a, double c, double k) {
    const double y = 2.0 * kPi * k * c / a;
    if (y > 700.0) return 0.0; // underflows together with the term itself
    return pref * std::pow(kPi * k / (a * c), nu) * std::sqrt(a / (k * c)) *
           std::exp(nu * nu * a / (4.0 * kPi * k * c) - y);
}

// sum over k >= 1 of the Bessel correction at fixed transverse norm c,
// with a geometric bound on the omitted k-tail
Summed bessel_k_sum(double pref, double nu, double a, double c, double qk) {
    Summed out;
    for (int k = 1; k <= 20000; ++k) {
        const double y = 2.0 * kPi * k * c / a;
        const double t = y > 700.0 ? 0.0
                                   : pref * std::pow(kPi * k / (a * c), nu) *
                                         std::cyl_bessel_k(nu, y);
        out.value += t;
        if (t == 0.0 || t < 1e-22 * out.value) {
            out.bound += bessel_term_bound(pref, nu, a, c, k + 1) / (1.0 - qk);
            return out;
        }
    }
    out.bound += bessel_term_bound(pref, nu, a, c, 20001) / (1.0 - qk);
    return out;
}

// exponentially small correction from reducing axis a against the lattice
// spanned by the remaining axes (1 or 2 of them)
Summed bessel_correction(const std::vector<double>& rest, double a, double s) {
    const double nu = s - 0.5;
    const double pref = 2.0 * std::sqrt(kPi) / (a * std::tgamma(s));
    const double cmin = rest.size() == 1 ? rest[0] : std::hypot(rest[0], rest[1]);
    const double qk =
        std::pow(2.0, std::max(nu - 0.5, 0.0)) * std::exp(-2.0 * kPi * cmin / a);
    Summed out;
    if (rest.size() == 1) {
        const double l = rest[0];
        const double qn = std::exp(-2.0 * kPi * l / a);
        for (int n = 1; n <= 20000; ++n) {
            const double c = n * l;
            const Summed strip = bessel_k_sum(pref, nu, a, c, qk);
            out.value += strip.value;
            out.bound += strip.bound;
            const double next = bessel_term_bound(pref, nu, a, c + l, 1.0) /
                                (1.0 - qk);
            if (next < std::max(1e-22 * out.value, 1e-300)) {
                out.bound += next / (1.0 - qn);
                return out;
            }
        }
        return out;
    }
    // two remaining axes: bound tails through c >= (n l1 + m l2)/sqrt(2)
    const double l1 = rest[0], l2 = rest[1];
    const double r1 = std::exp(-std::sqrt(2.0) * kPi * l1 / a);
    const double r2 = std::exp(-std::sqrt(2.0) * kPi * l2 / a);
    auto cell_bound = [&](int n, int m) {
        const double c = std::hypot(n * l1, m * l2);
        const double alg = bessel_term_bound(pref, nu, a, c, 1.0);
        return alg / (1.0 - qk);
    };
    for (int n = 1; n <= 20000; ++n) {
        for (int m = 1; m <= 20000; ++m) {
            const double c = std::hypot(n * l1, m * l2);
            const Summed cell = bessel_k_sum(pref, nu, a, c, qk);
            out.value += cell.value;
            out.bound += cell.bound;
            const double next_m = cell_bound(n, m + 1);
            if (next_m < std::max(1e-22 * out.value, 1e-300)) {
                out.bound += next_m / (1.0 - r2);
                break;
            }
        }
        const double next_n = cell_bound(n + 1, 1);
        if (next_n < std::max(1e-22 * out.value, 1e-300)) {
            out.bound += next_n / ((1.0 - r2) * (1.0 - r1));
            return out;
        }
    }
    return out;
}

// S(axes, s) = sum over the positive lattice of (sum_j n_j^2 l_j^2)^(-s);
// peeling the shortest axis trades one lattice dimension for zeta values
// plus Bessel terms decaying like e^{-2 pi c / a}
Summed lattice_sum(std::vector<double> axes, double s) {
    if (axes.size() == 1) {
        const double v =
            std::riemann_zeta(2.0 * s) * std::pow(axes[0], -2.0 * s);
        return {v, std::abs(v) * 1e-15};
    }
    const auto it = std::min_element(axes.begin(), axes.end());
    const double a = *it;
    std::vector<double> rest;
    for (auto jt = axes.begin(); jt != axes.end(); ++jt)
        if (jt != it) rest.push_back(*jt);
    const Summed sa = lattice_sum(rest, s - 0.5);
    const Summed sb = lattice_sum(rest, s);
    const double A = std::sqrt(kPi) * std::tgamma(s - 0.5) /
                     (2.0 * a * std::tgamma(s));
    const Summed bes = bessel_correction(rest, a, s);
    Summed out;
    out.value = A * sa.value - 0.5 * sb.value + bes.value;
    out.bound = A * sa.bound + 0.5 * sb.bound + bes.bound +
                std::abs(out.value) * 1e-15;
    return out;
}

double energy_prefactor(std::uint32_t dim, const std::array<double, 3>& lengths) {
    const double s = 0.5 * (dim + 1);
    double vol = 1.0;
    for (std::uint32_t c = 0; c < dim; ++c) vol *= lengths[c];
    return -std::tgamma(s) / (4.0 * std::pow(kPi, s)) * vol;
}

} // namespace

OracleValue hrectangle_energy_certified(std::uint32_t dim,
                                        const std::array<double, 3>& lengths) {
    check_config(dim, lengths);
    std::vector<double> axes(lengths.begin(), lengths.begin() + dim);
    const Summed s = lattice_sum(axes, 0.5 * (dim + 1));
    const double pref = energy_prefactor(dim, lengths);
    return {pref * s.value, std::abs(pref) * s.bound};
}

OracleValue hrectangle_energy(const RectangleConfig& config) {
    check_config(config.dim, config.lengths);
    if (config.n_max == 0)
        return hrectangle_energy_certified(config.dim, config.lengths);

    const std::uint32_t d = config.dim;
    const auto& l = config.lengths;
    const std::int64_t K = std::int64_t(config.n_max);
    double sum = 0.0;
    if (d == 1) {
        for (std::int64_t n = K; n >= 1; --n) {
            const double L2 = double(n) * double(n) * l[0] * l[0];
            sum += 1.0 / L2;
        }
    } else if (d == 2) {
        for (std::int64_t n = K; n >= 1; --n)
            for (std::int64_t m = K; m >= 1; --m) {
                const double L2 = double(n * n) * l[0] * l[0] +
                                  double(m * m) * l[1] * l[1];
                sum += 1.0 / (L2 * std::sqrt(L2));
            }
    } else {
        for (std::int64_t n = K; n >= 1; --n)
            for (std::int64_t m = K; m >= 1; --m)
                for (std::int64_t p = K; p >= 1; --p) {
                    const double L2 = double(n * n) * l[0] * l[0] +
                                      double(m * m) * l[1] * l[1] +
                                      double(p * p) * l[2] * l[2];
                    sum += 1.0 / (L2 * L2);
                }
    }
    // strips beyond the box compare against integrals of L^-(d+1); each
    // strip integrates to 1 / (2^(d+1) pi l_j (K-1))
    double tail = 0.0;
    for (std::uint32_t c = 0; c < d; ++c) {
        if (K < 2) {
            tail = std::numeric_limits<double>::infinity();
            break;
        }
        tail += 1.0 / (std::pow(2.0, double(d) + 1.0) * kPi * l[c] *
                       double(K - 1));
    }
    return {energy_prefactor(d, l) * sum, tail};
}

CollapseResult collapse_limit_check(const RectangleConfig& config,
                                    std::uint32_t axis) {
    check_config(config.dim, config.lengths);
    if (config.dim < 2)
        throw std::invalid_argument("collapse check needs dimension >= 2");
    if (axis >= config.dim)
        throw std::invalid_argument("collapse axis out of range");

    CollapseResult out;
    std::array<double, 3> shrunk = config.lengths;
    for (int i = 1; i <= 6; ++i) {
        shrunk[axis] = std::ldexp(1.0, -i); // 1/2 .. 1/64
        out.energies.push_back(
            hrectangle_energy_certified(config.dim, shrunk).value);
    }
    const std::size_t n = out.energies.size();
    out.extrapolated = 2.0 * out.energies[n - 1] - out.energies[n - 2];

    std::array<double, 3> lower{1.0, 1.0, 1.0};
    std::uint32_t j = 0;
    for (std::uint32_t c = 0; c < config.dim; ++c)
        if (c != axis) lower[j++] = config.lengths[c];
    out.target =
        0.5 * hrectangle_energy_certified(config.dim - 1, lower).value;
    out.pass =
        std::abs(out.extrapolated - out.target) <= 0.01 * std::abs(out.target);
    return out;
}

} // namespace wlc
