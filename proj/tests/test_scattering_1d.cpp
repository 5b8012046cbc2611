#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <vector>

#include "wlc/scattering_1d.hpp"

using namespace wlc;

// reference energies computed independently at 30-digit precision
namespace {
constexpr double kPi24 = 0.130899693899574718269276807637;
constexpr double kTwoPlate = -0.102011291048210899;   // a=(0,0.7) l=(2,5)
constexpr double kThreePlate = 0.0638413403299652253; // a=(0,0.5,1.2) l=(3,1.5,4)
constexpr double kCoincident = 0.0617396910208818;    // a=(0,0,1.2)
constexpr double kEqual = 0.0752165734157679;         // a=(0,0.6,1.2) l=4

double energy(std::vector<double> a, std::vector<double> l) {
    const ScatterResult r = irreducible_energy_1d({std::move(a), std::move(l)});
    REQUIRE(r.converged);
    return r.value;
}
} // namespace

TEST_CASE("two-plate energies match the reference values") {
    CHECK(energy({0, 0.7}, {2, 5}) ==
          doctest::Approx(kTwoPlate).epsilon(1e-10));
    // strong coupling approaches the perfectly reflecting limit -pi/(24 a)
    CHECK(energy({0, 1}, {1e6, 1e6}) ==
          doctest::Approx(-kPi24).epsilon(1e-3));
    CHECK(std::abs(energy({0, 1}, {1e6, 1e6}) + kPi24) / kPi24 < 1e-5);
    // scaling: E(s a, l / s) = E(a, l) / s
    CHECK(energy({0, 1.4}, {1, 2.5}) ==
          doctest::Approx(energy({0, 0.7}, {2, 5}) / 2.0).epsilon(1e-10));
}

TEST_CASE("three-plate energies match the reference values and stay positive") {
    CHECK(energy({0, 0.5, 1.2}, {3, 1.5, 4}) ==
          doctest::Approx(kThreePlate).epsilon(1e-9));
    CHECK(energy({0, 0, 1.2}, {3, 1.5, 4}) ==
          doctest::Approx(kCoincident).epsilon(1e-9));
    CHECK(energy({0, 0.6, 1.2}, {4, 4, 4}) ==
          doctest::Approx(kEqual).epsilon(1e-9));
    CHECK(energy({0, 0.5, 1.2}, {3, 1.5, 4}) > 0.0);
}

TEST_CASE("three-plate energy is exchange symmetric") {
    const double base = energy({0, 0.5, 1.2}, {3, 1.5, 4});
    CHECK(std::abs(energy({0.5, 0, 1.2}, {1.5, 3, 4}) - base) <=
          1e-12 * std::abs(base));
    CHECK(std::abs(energy({1.2, 0.5, 0}, {4, 1.5, 3}) - base) <=
          1e-12 * std::abs(base));
    CHECK(std::abs(energy({0.5, 1.2, 0}, {1.5, 4, 3}) - base) <=
          1e-12 * std::abs(base));
}

TEST_CASE("coincidence scan is finite and continuous at plate contact") {
    PlateStack stack{{0, 0.5, 1.2}, {3, 1.5, 4}};
    const std::vector<double> a2{0.5,   0.2,   0.1,    0.03,
                                 0.01,  0.003, 0.001,  0.0};
    const std::vector<ScatterResult> scan = coincidence_scan(stack, a2);
    REQUIRE(scan.size() == a2.size());
    for (const ScatterResult& r : scan) {
        CHECK(r.converged);
        CHECK(std::isfinite(r.value));
        CHECK(r.value > 0.0);
    }
    CHECK(scan.back().value == doctest::Approx(kCoincident).epsilon(1e-9));
    // approach is continuous: late steps move less than early steps
    CHECK(std::abs(scan[6].value - scan[7].value) < 1e-3);
    CHECK(std::abs(scan[6].value - scan[7].value) <
          std::abs(scan[0].value - scan[1].value));
}

TEST_CASE("subset log-determinants agree with the direct expansion") {
    const PlateStack st{{0, 0.5, 1.2}, {3, 1.5, 4}};
    auto direct = [&](double xi) {
        double m[3][3];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const double e = std::exp(
                    -xi * std::abs(st.positions[std::size_t(i)] -
                                   st.positions[std::size_t(j)]));
                m[i][j] = (i == j ? 1.0 : 0.0) +
                          st.couplings[std::size_t(i)] / (2.0 * xi) * e;
            }
        const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        return std::log(det);
    };
    for (double xi : {0.3, 1.0, 2.5, 7.0}) {
        CHECK(subset_logdet(st, 0b111, xi) ==
              doctest::Approx(direct(xi)).epsilon(1e-11));
    }
    // pair subsets reduce to the closed form
    for (double xi : {0.4, 1.7}) {
        const double r1 = 3.0 / (3.0 + 2.0 * xi);
        const double r3 = 4.0 / (4.0 + 2.0 * xi);
        const double expect = std::log1p(3.0 / (2.0 * xi)) +
                              std::log1p(4.0 / (2.0 * xi)) +
                              std::log1p(-r1 * r3 * std::exp(-2.4 * xi));
        CHECK(subset_logdet(st, 0b101, xi) ==
              doctest::Approx(expect).epsilon(1e-12));
    }
    // empty and singleton subsets
    CHECK(subset_logdet(st, 0, 1.0) == 0.0);
    CHECK(subset_logdet(st, 0b010, 2.0) ==
          doctest::Approx(std::log1p(1.5 / 4.0)).epsilon(1e-14));
}

TEST_CASE("the irreducible log combination survives extreme frequencies") {
    // ld123 - ld12 - ld13 - ld23 + ld1 + ld2 + ld3 stays finite and follows
    // the -ln(xi) slope far below any physical scale
    const PlateStack st{{0, 0.5, 1.2}, {3, 1.5, 4}};
    auto combo = [&](double xi) {
        return subset_logdet(st, 0b111, xi) - subset_logdet(st, 0b011, xi) -
               subset_logdet(st, 0b101, xi) - subset_logdet(st, 0b110, xi) +
               subset_logdet(st, 0b001, xi) + subset_logdet(st, 0b010, xi) +
               subset_logdet(st, 0b100, xi);
    };
    const double g50 = combo(1e-50);
    const double g60 = combo(1e-60);
    CHECK(std::isfinite(g50));
    CHECK(std::isfinite(g60));
    CHECK(g60 - g50 == doctest::Approx(10.0 * std::log(10.0)).epsilon(1e-9));
    CHECK(std::isfinite(combo(1e-300)));
    CHECK(std::isfinite(combo(1e8)));
}

TEST_CASE("x-factor denominators match the two-plate reflection product") {
    const PlateStack st{{0, 0.5, 1.2}, {3, 1.5, 4}};
    const double xi = 0.8;
    const double r0 = 3.0 / (3.0 + 2.0 * xi);
    const double r2 = 4.0 / (4.0 + 2.0 * xi);
    CHECK(x_factor_denominator(st, 0, 2, xi) ==
          doctest::Approx(1.0 - r0 * r2 * std::exp(-2.0 * 1.2 * xi))
              .epsilon(1e-14));
}

TEST_CASE("stack validation rejects malformed input") {
    CHECK_THROWS_AS(validate_stack({{0}, {1}}), std::invalid_argument);
    CHECK_THROWS_AS(validate_stack({{0, 1, 2, 3}, {1, 1, 1, 1}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(validate_stack({{0, 1}, {1}}), std::invalid_argument);
    CHECK_THROWS_AS(validate_stack({{0, 1}, {1, -2}}), std::invalid_argument);
    CHECK_THROWS_AS((void)subset_logdet({{0, 1}, {1, 1}}, 0b100, 1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)subset_logdet({{0, 1}, {1, 1}}, 0b01, -1.0),
                    std::invalid_argument);
}
