#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "wlc/loops.hpp"

using namespace wlc;

namespace {

std::vector<double> make_loop(const LoopEnsembleSpec& spec, std::uint64_t i) {
    std::vector<double> u(std::size_t(spec.points + 1) * spec.dim);
    generate_unit_loop(spec, i, u);
    return u;
}

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

} // namespace

TEST_CASE("bridges close at both ends") {
    for (LoopScheme scheme : {LoopScheme::bisection, LoopScheme::incremental}) {
        const LoopEnsembleSpec spec{20, 64, 2, 9, scheme};
        for (std::uint64_t i = 0; i < spec.count; ++i) {
            const std::vector<double> u = make_loop(spec, i);
            for (std::uint32_t c = 0; c < spec.dim; ++c) {
                CHECK(u[c] == 0.0);
                CHECK(u[std::size_t(spec.points) * spec.dim + c] == 0.0);
            }
        }
    }
}

TEST_CASE("bisection refinement restricts bitwise to the coarse ensemble") {
    const LoopEnsembleSpec coarse{50, 256, 2, 13, LoopScheme::bisection};
    const LoopEnsembleSpec fine = refined_spec(coarse);
    REQUIRE(fine.points == 512);
    for (std::uint64_t i = 0; i < coarse.count; ++i) {
        const std::vector<double> uc = make_loop(coarse, i);
        const std::vector<double> uf = make_loop(fine, i);
        for (std::uint32_t k = 0; k <= coarse.points; ++k)
            for (std::uint32_t c = 0; c < 2; ++c)
                CHECK(uf[std::size_t(2 * k) * 2 + c] ==
                      uc[std::size_t(k) * 2 + c]);
    }
}

TEST_CASE("refinement pairing is a bisection-only contract") {
    const LoopEnsembleSpec inc{10, 64, 1, 1, LoopScheme::incremental};
    CHECK_THROWS_AS((void)refined_spec(inc), std::invalid_argument);
}

TEST_CASE("bridge covariance matches t(1-t)") {
    const LoopEnsembleSpec spec{20000, 64, 1, 21, LoopScheme::bisection};
    double s2_quarter = 0.0, s2_half = 0.0;
    std::vector<double> u(std::size_t(spec.points + 1));
    for (std::uint64_t i = 0; i < spec.count; ++i) {
        generate_unit_loop(spec, i, u);
        s2_quarter += u[16] * u[16];
        s2_half += u[32] * u[32];
    }
    const double var_quarter = s2_quarter / double(spec.count);
    const double var_half = s2_half / double(spec.count);
    // var of the variance estimate is 2 var^2 / n; allow 4 sigma
    CHECK(std::abs(var_quarter - 0.1875) < 4.0 * 0.1875 * std::sqrt(2.0 / 20000.0));
    CHECK(std::abs(var_half - 0.25) < 4.0 * 0.25 * std::sqrt(2.0 / 20000.0));
}

TEST_CASE("running maximum obeys the bridge crossing law") {
    // P(max u >= m) = exp(-2 m^2) for the unit bridge; the discrete grid
    // misses short excursions, so the estimate sits slightly below the law
    const LoopEnsembleSpec spec{40000, 1024, 1, 31, LoopScheme::bisection};
    std::vector<double> u(std::size_t(spec.points + 1));
    const double m = 0.5;
    std::uint64_t hits = 0;
    for (std::uint64_t i = 0; i < spec.count; ++i) {
        generate_unit_loop(spec, i, u);
        double mx = 0.0;
        for (double v : u) mx = std::max(mx, v);
        if (mx >= m) ++hits;
    }
    const double est = double(hits) / double(spec.count);
    const double exact = std::exp(-2.0 * m * m); // 0.6065306597126334
    const double sigma = std::sqrt(exact * (1.0 - exact) / double(spec.count));
    CHECK(est < exact + 4.0 * sigma);
    CHECK(est > exact - 4.0 * sigma - 0.02);
}

TEST_CASE("ensembles stream with consistent extents") {
    const LoopEnsembleSpec spec{200, 128, 3, 5, LoopScheme::bisection};
    LoopEnsemble ens(spec);
    CHECK_FALSE(ens.materialized());
    std::vector<double> u(std::size_t(spec.points + 1) * spec.dim);
    for (std::uint64_t i = 0; i < spec.count; i += 37) {
        ens.unit_loop(i, u);
        const LoopExtents& e = ens.extents(i);
        double lo[3] = {1e30, 1e30, 1e30}, hi[3] = {-1e30, -1e30, -1e30};
        double rad = 0.0;
        for (std::uint32_t k = 0; k <= spec.points; ++k) {
            double r2 = 0.0;
            for (std::uint32_t c = 0; c < 3; ++c) {
                const double v = u[std::size_t(k) * 3 + c];
                lo[c] = std::min(lo[c], v);
                hi[c] = std::max(hi[c], v);
                r2 += v * v;
            }
            rad = std::max(rad, std::sqrt(r2));
        }
        for (std::uint32_t c = 0; c < 3; ++c) {
            CHECK(e.lo[c] == doctest::Approx(lo[c]).epsilon(1e-15));
            CHECK(e.hi[c] == doctest::Approx(hi[c]).epsilon(1e-15));
        }
        CHECK(e.radius == doctest::Approx(rad).epsilon(1e-13));
        CHECK(ens.max_radius() >= e.radius);
    }
}

TEST_CASE("physical loops plant the unit loop at the base point") {
    const LoopEnsembleSpec spec{5, 32, 2, 3, LoopScheme::incremental};
    LoopEnsemble ens(spec);
    std::vector<double> u(std::size_t(spec.points + 1) * 2);
    std::vector<double> p(u.size());
    const double x[2] = {1.5, -2.0};
    const double beta = 4.0;
    ens.unit_loop(2, u);
    ens.physical_loop(2, std::span<const double>(x, 2), beta, p);
    for (std::size_t k = 0; k < u.size(); k += 2) {
        CHECK(p[k] == doctest::Approx(x[0] + 2.0 * u[k]).epsilon(1e-15));
        CHECK(p[k + 1] == doctest::Approx(x[1] + 2.0 * u[k + 1]).epsilon(1e-15));
    }
}

TEST_CASE("loop cache round-trips bitwise") {
    const LoopEnsembleSpec spec{64, 128, 2, 77, LoopScheme::bisection};
    const std::string path = temp_path("wlc_test_loops.bin");
    write_loop_cache(path, spec);

    const LoopEnsembleSpec header = read_loop_cache_header(path);
    CHECK(header.count == spec.count);
    CHECK(header.points == spec.points);
    CHECK(header.dim == spec.dim);
    CHECK(header.seed == spec.seed);
    CHECK(header.scheme == spec.scheme);

    std::vector<double> from_file(std::size_t(spec.points + 1) * spec.dim);
    for (std::uint64_t i : {std::uint64_t(0), std::uint64_t(13), spec.count - 1}) {
        read_cached_loop(path, spec, i, from_file);
        const std::vector<double> direct = make_loop(spec, i);
        CHECK(from_file == direct);
    }
    std::remove(path.c_str());
}

TEST_CASE("ensemble spec validation rejects nonsense") {
    CHECK_THROWS_AS(LoopEnsemble({0, 64, 1, 1, LoopScheme::bisection}),
                    std::invalid_argument);
    CHECK_THROWS_AS(LoopEnsemble({10, 0, 1, 1, LoopScheme::bisection}),
                    std::invalid_argument);
    CHECK_THROWS_AS(LoopEnsemble({10, 64, 0, 1, LoopScheme::bisection}),
                    std::invalid_argument);
    CHECK_THROWS_AS(LoopEnsemble({10, 64, 4, 1, LoopScheme::bisection}),
                    std::invalid_argument);
    // bisection needs a power-of-two point count
    CHECK_THROWS_AS(LoopEnsemble({10, 96, 1, 1, LoopScheme::bisection}),
                    std::invalid_argument);
}
