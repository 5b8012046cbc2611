#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <numbers>
#include <vector>

#include "wlc/heat_kernel_lab.hpp"
#include "wlc/rng.hpp"

using namespace wlc;

namespace {

constexpr double kPi = std::numbers::pi;

Scene boxed(std::uint32_t dim, BoxShape domain, std::vector<Object> objs) {
    Scene s;
    s.dim = dim;
    s.domain = domain;
    s.objects = std::move(objs);
    return s;
}

Object point_at(double x) {
    return Object{Hyperplane{{1, 0, 0}, x}, Interaction{}};
}

// phi of two absorbing points a apart, images summed to convergence
double two_point_exact(double a, double beta) {
    double s = 0.0;
    for (int k = 1; k < 64; ++k) s += std::exp(-2.0 * a * a * k * k / beta);
    return std::sqrt(2.0 / kPi) * (a / std::sqrt(beta)) * s;
}

} // namespace

TEST_CASE("free interval spectrum matches the discrete and continuum laws") {
    const Scene s = boxed(1, BoxShape{{0, 0, 0}, {1, 0, 0}}, {point_at(0.5)});
    GridConfig g;
    g.points = 1999;
    const Spectrum sp = build_spectrum(s, 0, g); // empty subset: box only
    REQUIRE(sp.eigenvalues.size() == 1999);
    const double h = 1.0 / 2000.0;
    CHECK(sp.h == doctest::Approx(h).epsilon(1e-12));
    for (int k = 1; k <= 5; ++k) {
        const double discrete = (1.0 - std::cos(k * kPi * h)) / (h * h);
        const double continuum = 0.5 * k * k * kPi * kPi;
        CHECK(sp.eigenvalues[std::size_t(k - 1)] ==
              doctest::Approx(discrete).epsilon(5e-8));
        CHECK(sp.eigenvalues[std::size_t(k - 1)] ==
              doctest::Approx(continuum).epsilon(1e-5));
    }
}

TEST_CASE("spectral function sums boltzmann factors of stored levels") {
    Spectrum sp;
    sp.eigenvalues = {1.0, 2.0, 4.0};
    CHECK(spectral_function(sp, 0.5) ==
          doctest::Approx(std::exp(-0.5) + std::exp(-1.0) + std::exp(-2.0))
              .epsilon(1e-15));
    CHECK_THROWS_AS((void)spectral_function(sp, 0.0), std::invalid_argument);
}

TEST_CASE("two absorbing points reproduce the image-sum subtraction") {
    // box walls 4+ units away contribute only e^{-2*16/beta} corrections
    const Scene s = boxed(1, BoxShape{{-4, 0, 0}, {5, 0, 0}},
                          {point_at(0.0), point_at(1.0)});
    GridConfig g;
    g.points = 8999; // h = 0.001; both points land exactly on grid nodes
    for (double beta : {0.5, 1.0, 2.0}) {
        const double lab = irreducible_spectral_exact(s, g, beta);
        const double exact = two_point_exact(1.0, beta);
        CHECK(lab == doctest::Approx(exact).epsilon(2e-3));
        CHECK(lab > 0.0); // two objects: positive subtraction
    }
}

TEST_CASE("the table route equals one-shot evaluations") {
    const Scene s = boxed(1, BoxShape{{-2, 0, 0}, {3, 0, 0}},
                          {point_at(0.0), point_at(1.0)});
    GridConfig g;
    g.points = 1499;
    const std::vector<double> betas{0.4, 0.9, 1.7};
    const std::vector<double> table = irreducible_spectral_table(s, g, betas);
    REQUIRE(table.size() == betas.size());
    for (std::size_t i = 0; i < betas.size(); ++i)
        CHECK(table[i] ==
              doctest::Approx(irreducible_spectral_exact(s, g, betas[i]))
                  .epsilon(1e-12));
}

TEST_CASE("large-beta suppression recovers the shortest-path rate") {
    const Scene s = boxed(1, BoxShape{{-2, 0, 0}, {3, 0, 0}},
                          {point_at(0.0), point_at(1.0)});
    GridConfig g;
    g.points = 4999; // grid nodes meet both points exactly
    std::vector<double> betas;
    for (int i = 0; i < 8; ++i) betas.push_back(0.25 + 0.08 * i);
    const DecayResult r = decay_check(s, g, betas);
    // slope of ln phi against 1/beta approaches -l_min^2/2 = -2 a^2 = -2
    CHECK(r.slope == doctest::Approx(-2.0).epsilon(0.2));
    CHECK_FALSE(r.power_series);
    for (double p : r.phi) CHECK(p > 0.0);
}

TEST_CASE("overlapping bodies leave a power-law remainder") {
    // two overlapping intervals: the common intersection is not empty, so the
    // subtraction keeps heat-kernel powers and the exponential model loses
    Scene s = boxed(1, BoxShape{{-3, 0, 0}, {3.5, 0, 0}},
                    {Object{Sphere{{0, 0, 0}, 0.6}, Interaction{}},
                     Object{Sphere{{0.5, 0, 0}, 0.6}, Interaction{}}});
    GridConfig g;
    g.points = 3999;
    std::vector<double> betas;
    for (int i = 0; i < 8; ++i) betas.push_back(0.3 + 0.1 * i);
    const DecayResult r = decay_check(s, g, betas);
    CHECK(r.power_series);
}

TEST_CASE("heat kernel stays under the free gaussian bound") {
    const Scene s = boxed(1, BoxShape{{-2, 0, 0}, {2, 0, 0}}, {point_at(0.3)});
    GridConfig g;
    g.points = 2999;
    std::vector<KernelTriple> triples;
    for (int i = 0; i < 50; ++i) {
        KernelTriple t;
        t.x = {uniform(40, std::uint64_t(i), 0) * 3.6 - 1.8, 0, 0};
        t.y = {uniform(40, std::uint64_t(i), 1) * 3.6 - 1.8, 0, 0};
        t.beta = 0.1 * std::pow(10.0, uniform(40, std::uint64_t(i), 2));
        triples.push_back(t);
    }
    const KernelCheckResult r = kernel_bound_check(s, 0b1, g, triples);
    CHECK(r.pass);
    CHECK(r.checked == triples.size());
    CHECK(r.worst_excess <= 0.0);
}

TEST_CASE("kernel values are symmetric in their endpoints") {
    const Scene s = boxed(1, BoxShape{{-2, 0, 0}, {2, 0, 0}}, {point_at(0.3)});
    GridConfig g;
    g.points = 799;
    const EigenSystem sys = build_eigensystem(s, 0b1, g, true);
    const Vec3 x{0.5, 0, 0}, y{1.1, 0, 0};
    const double kxy = heat_kernel_value(sys, x, y, 0.4);
    const double kyx = heat_kernel_value(sys, y, x, 0.4);
    CHECK(kxy == doctest::Approx(kyx).epsilon(1e-12));
    CHECK(kxy > 0.0);
    // an absorbing point splits the line: no heat crosses it
    const Vec3 far{-0.7, 0, 0};
    CHECK(std::abs(heat_kernel_value(sys, far, y, 0.4)) < 1e-14);
}

TEST_CASE("short-time trace fit recovers the box volume") {
    const Scene s = boxed(1, BoxShape{{0, 0, 0}, {1, 0, 0}}, {point_at(0.5)});
    GridConfig g;
    g.points = 7999;
    const Spectrum sp = build_spectrum(s, 0, g);
    std::vector<double> betas;
    for (int i = 1; i <= 12; ++i) betas.push_back(0.0008 * i);
    const HeatKernelFit f = heat_kernel_fit(sp, 1, betas);
    CHECK(f.window_ok);
    CHECK(f.volume_coeff == doctest::Approx(1.0).epsilon(0.01));
    // one absorbing wall at each box end: coefficient -sqrt(2 pi)/2 per pair
    CHECK(f.boundary_coeff ==
          doctest::Approx(-0.5 * std::sqrt(2.0 * kPi)).epsilon(0.05));
}

TEST_CASE("2d spectra match the separable square") {
    const Scene s = boxed(2, BoxShape{{0, 0, 0}, {1, 1, 0}},
                          {Object{Sphere{{0.5, 0.5, 0}, 0.1}, Interaction{}}});
    GridConfig g;
    g.points = 79;
    const Spectrum sp = build_spectrum(s, 0, g);
    REQUIRE(sp.eigenvalues.size() == 79u * 79u);
    CHECK(sp.eigenvalues[0] == doctest::Approx(kPi * kPi).epsilon(1e-3));
    CHECK(sp.eigenvalues[1] == doctest::Approx(2.5 * kPi * kPi).epsilon(1e-3));
    CHECK(sp.eigenvalues[2] == doctest::Approx(2.5 * kPi * kPi).epsilon(1e-3));
}

TEST_CASE("configuration errors are rejected as input errors") {
    const Scene s = boxed(2, BoxShape{{0, 0, 0}, {1, 1, 0}},
                          {Object{Sphere{{0.5, 0.5, 0}, 0.1}, Interaction{}}});
    GridConfig big;
    big.points = 200; // 200 x 200 = 40000 > dense-solver cap
    CHECK_THROWS_WITH_AS((void)build_spectrum(s, 0, big), "grid too large",
                         std::invalid_argument);
    GridConfig g;
    g.points = 49;
    CHECK_THROWS_AS((void)build_spectrum(s, 0b10, g), std::invalid_argument);

    Scene unboxed = s;
    unboxed.domain.reset();
    CHECK_THROWS_AS((void)build_spectrum(unboxed, 0, g), std::invalid_argument);
}
