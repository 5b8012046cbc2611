#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "wlc/quadrature.hpp"

using namespace wlc;

TEST_CASE("exp-sinh integrates smooth decaying integrands") {
    const QuadResult q =
        integrate_exp_sinh([](double x) { return std::exp(-x); }, 1.0, 1e-10);
    CHECK(q.converged);
    CHECK(q.value == doctest::Approx(1.0).epsilon(1e-9));

    const QuadResult g = integrate_exp_sinh(
        [](double x) { return x * std::exp(-0.5 * x * x); }, 1.0, 1e-10);
    CHECK(g.converged);
    CHECK(g.value == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("exp-sinh tolerates a logarithmic endpoint singularity") {
    // integral of ln(x) e^{-x} over (0, inf) = -euler_gamma
    const QuadResult q = integrate_exp_sinh(
        [](double x) { return std::log(x) * std::exp(-x); }, 1.0, 1e-10);
    CHECK(q.converged);
    CHECK(q.value ==
          doctest::Approx(-std::numbers::egamma).epsilon(1e-9));
}

TEST_CASE("exp-sinh tolerates slow algebraic decay") {
    // integral of (1+x^2)^-2 over (0, inf) = pi/4
    const QuadResult q = integrate_exp_sinh(
        [](double x) { return 1.0 / ((1.0 + x * x) * (1.0 + x * x)); }, 1.0,
        1e-10);
    CHECK(q.converged);
    CHECK(q.value == doctest::Approx(std::numbers::pi / 4.0).epsilon(1e-9));
}

TEST_CASE("exp-sinh reports scale invariance of the contour") {
    auto f = [](double x) { return std::exp(-2.0 * x); };
    const double a = integrate_exp_sinh(f, 1.0, 1e-10).value;
    const double b = integrate_exp_sinh(f, 0.25, 1e-10).value;
    CHECK(a == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(b == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("log-trapezoid weights are exact for the log measure") {
    std::vector<double> x;
    for (int i = 0; i <= 64; ++i) x.push_back(0.01 * std::pow(10.0, i / 16.0));
    const std::vector<double> w = log_trapezoid_weights(x);
    REQUIRE(w.size() == x.size());

    double mass = 0.0;
    for (double wi : w) mass += wi; // integral of dx/x
    CHECK(mass == doctest::Approx(std::log(x.back() / x.front())).epsilon(1e-12));

    double lin = 0.0; // integral of x dx/x = x_max - x_min
    for (std::size_t i = 0; i < x.size(); ++i) lin += w[i] * x[i];
    CHECK(lin == doctest::Approx(x.back() - x.front()).epsilon(2e-3));
}
