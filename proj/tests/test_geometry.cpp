#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <vector>

#include "wlc/geometry.hpp"

using namespace wlc;

namespace {

// straight two-sample excursion from the origin to `tip` and back
struct TestPath {
    std::vector<double> u;
    DiscretizedLoop loop(std::uint32_t dim, double beta = 1.0,
                         const Vec3& x = {}) {
        DiscretizedLoop l;
        l.u = u;
        l.x = x;
        l.beta = beta;
        l.sqrt_beta = std::sqrt(beta);
        l.dim = dim;
        l.points = std::uint32_t(u.size() / dim - 1);
        return l;
    }
};

TestPath out_and_back(std::uint32_t dim, const Vec3& tip, std::uint32_t m = 8) {
    TestPath p;
    p.u.resize(std::size_t(m + 1) * dim, 0.0);
    for (std::uint32_t k = 1; k < m; ++k) {
        const double t = k <= m / 2 ? double(k) / (m / 2)
                                    : double(m - k) / (m - m / 2);
        for (std::uint32_t c = 0; c < dim; ++c)
            p.u[std::size_t(k) * dim + c] = t * tip[c];
    }
    return p;
}

Object dirichlet(Shape s) { return Object{std::move(s), Interaction{}}; }

Object potential(Shape s, double strength, double width = 0.0,
                 PotentialProfile prof = PotentialProfile::uniform) {
    return Object{std::move(s), Interaction{false, strength, width, prof}};
}

} // namespace

TEST_CASE("paths touch a hyperplane exactly when they cross it") {
    const Object plane = dirichlet(Hyperplane{{1, 0, 0}, 0.5});
    TestPath cross = out_and_back(1, {1.0, 0, 0});
    CHECK(touches(plane, cross.loop(1)));
    TestPath shy = out_and_back(1, {0.4, 0, 0});
    CHECK_FALSE(touches(plane, shy.loop(1)));
    // scaling with sqrt(beta): the short path reaches at beta = 4
    CHECK(touches(plane, shy.loop(1, 4.0)));
    // base point on the far side, coming back across
    CHECK(touches(plane, shy.loop(1, 1.0, {0.45, 0, 0})));
}

TEST_CASE("paths touch solids when a sample enters the body") {
    const Object ball = dirichlet(Sphere{{2, 0, 0}, 0.5});
    TestPath toward = out_and_back(2, {1.6, 0, 0});
    CHECK(touches(ball, toward.loop(2)));
    TestPath miss = out_and_back(2, {1.4, 0, 0});
    CHECK_FALSE(touches(ball, miss.loop(2)));

    const Object brick = dirichlet(BoxShape{{1, -1, 0}, {2, 1, 0}});
    CHECK(touches(brick, toward.loop(2)));
    TestPath sideways = out_and_back(2, {0, 2, 0});
    CHECK_FALSE(touches(brick, sideways.loop(2)));
}

TEST_CASE("segments intersect crossing paths in the plane") {
    const Object seg = dirichlet(Segment{{1, -1, 0}, {1, 1, 0}});
    TestPath cross = out_and_back(2, {2, 0, 0});
    CHECK(touches(seg, cross.loop(2)));
    TestPath parallel = out_and_back(2, {0, 2, 0});
    CHECK_FALSE(touches(seg, parallel.loop(2)));
}

TEST_CASE("uniform slab potentials integrate to strength times occupancy") {
    // slab |x| <= 5 swallows the whole path: integral = strength * beta
    const Object wide = potential(Hyperplane{{1, 0, 0}, 0.0}, 3.0, 10.0);
    TestPath p = out_and_back(1, {1.0, 0, 0});
    const double beta = 2.5;
    CHECK(potential_integral(wide, p.loop(1, beta)) ==
          doctest::Approx(3.0 * beta).epsilon(1e-12));
    CHECK(survival(wide, p.loop(1, beta)) ==
          doctest::Approx(std::exp(-3.0 * beta)).epsilon(1e-12));

    // dirichlet objects have all-or-nothing survival
    const Object wall = dirichlet(Hyperplane{{1, 0, 0}, 0.5});
    CHECK(survival(wall, p.loop(1)) == 0.0);
    TestPath shy = out_and_back(1, {0.3, 0, 0});
    CHECK(survival(wall, shy.loop(1)) == 1.0);
}

TEST_CASE("gaussian profiles decay with distance from the plane") {
    const Object g = potential(Hyperplane{{0, 1, 0}, 0.0}, 2.0, 0.5,
                               PotentialProfile::gaussian);
    CHECK(potential_value(g, {3.0, 0.0, 0}, 2) == doctest::Approx(2.0));
    CHECK(potential_value(g, {3.0, 0.5, 0}, 2) ==
          doctest::Approx(2.0 * std::exp(-0.5)).epsilon(1e-14));
    CHECK(potential_value(g, {0.0, 5.0, 0}, 2) ==
          doctest::Approx(2.0 * std::exp(-50.0)).epsilon(1e-10));
}

TEST_CASE("coarse strides reuse the even samples") {
    const Object wide = potential(Hyperplane{{1, 0, 0}, 0.0}, 3.0, 10.0);
    TestPath p = out_and_back(1, {1.0, 0, 0}, 16);
    DiscretizedLoop fine = p.loop(1, 2.0);
    DiscretizedLoop coarse = fine;
    coarse.stride = 2;
    // constant potential: both strides integrate exactly
    CHECK(potential_integral(wide, fine) == doctest::Approx(6.0));
    CHECK(potential_integral(wide, coarse) == doctest::Approx(6.0));
}

TEST_CASE("pairwise disjointness matches geometry") {
    const std::uint32_t d = 2;
    CHECK(shapes_disjoint(Sphere{{0, 0, 0}, 1}, Sphere{{3, 0, 0}, 1}, d));
    CHECK_FALSE(shapes_disjoint(Sphere{{0, 0, 0}, 1}, Sphere{{1.5, 0, 0}, 1}, d));
    CHECK(shapes_disjoint(Sphere{{0, 0, 0}, 1}, Hyperplane{{1, 0, 0}, 2}, d));
    CHECK_FALSE(shapes_disjoint(Sphere{{0, 0, 0}, 1}, Hyperplane{{1, 0, 0}, 0.5}, d));
    CHECK(shapes_disjoint(BoxShape{{0, 0, 0}, {1, 1, 0}},
                          BoxShape{{2, 0, 0}, {3, 1, 0}}, d));
    CHECK_FALSE(shapes_disjoint(BoxShape{{0, 0, 0}, {1, 1, 0}},
                                BoxShape{{0.5, 0.5, 0}, {3, 1, 0}}, d));
    CHECK(shapes_disjoint(Hyperplane{{1, 0, 0}, 0}, Hyperplane{{1, 0, 0}, 1}, d));
    CHECK_FALSE(shapes_disjoint(Hyperplane{{1, 0, 0}, 0},
                                Hyperplane{{0, 1, 0}, 0}, d));
}

TEST_CASE("finite bounding boxes exist exactly for bounded shapes") {
    const std::uint32_t d = 2;
    const auto s = finite_bbox(Sphere{{1, 2, 0}, 0.5}, d);
    REQUIRE(s.has_value());
    CHECK(s->lo[0] == doctest::Approx(0.5));
    CHECK(s->hi[1] == doctest::Approx(2.5));
    CHECK(finite_bbox(BoxShape{{0, 0, 0}, {1, 1, 0}}, d).has_value());
    CHECK(finite_bbox(Segment{{0, 0, 0}, {1, 1, 0}}, d).has_value());
    CHECK_FALSE(finite_bbox(Hyperplane{{1, 0, 0}, 0}, d).has_value());
}

TEST_CASE("empty common intersection is certified when provable") {
    Scene pair;
    pair.dim = 2;
    pair.objects = {dirichlet(Sphere{{0, 0, 0}, 1}), dirichlet(Sphere{{3, 0, 0}, 1})};
    CHECK(verify_empty_common_intersection(pair) == IntersectionCheck::empty);

    Scene overlap = pair;
    overlap.objects[1].shape = Sphere{{1.2, 0, 0}, 1};
    CHECK(verify_empty_common_intersection(overlap) ==
          IntersectionCheck::nonempty);

    Scene tictactoe;
    tictactoe.dim = 2;
    tictactoe.objects = {dirichlet(Hyperplane{{1, 0, 0}, 0}),
                         dirichlet(Hyperplane{{1, 0, 0}, 1}),
                         dirichlet(Hyperplane{{0, 1, 0}, 0}),
                         dirichlet(Hyperplane{{0, 1, 0}, 1})};
    CHECK(verify_empty_common_intersection(tictactoe) ==
          IntersectionCheck::empty);

    Scene star; // three concurrent lines share the origin
    star.dim = 2;
    star.objects = {dirichlet(Hyperplane{{1, 0, 0}, 0}),
                    dirichlet(Hyperplane{{0, 1, 0}, 0}),
                    dirichlet(Hyperplane{{std::sqrt(0.5), std::sqrt(0.5), 0}, 0})};
    CHECK(verify_empty_common_intersection(star) ==
          IntersectionCheck::nonempty);

    // pairwise overlapping disks with an empty triple intersection: no grid
    // point falsifies, no pair proves, so the check must stay conservative
    Scene triple;
    triple.dim = 2;
    triple.objects = {dirichlet(Sphere{{0, 0, 0}, 1}),
                      dirichlet(Sphere{{1.9, 0, 0}, 1}),
                      dirichlet(Sphere{{0.95, 1.645, 0}, 1})};
    CHECK(verify_empty_common_intersection(triple) ==
          IntersectionCheck::undecidable);
}

TEST_CASE("scene validation pins down bad inputs") {
    Scene s;
    s.dim = 2;
    s.objects = {dirichlet(Sphere{{0, 0, 0}, 1})};
    CHECK_NOTHROW(validate_scene(s));

    Scene bad_radius = s;
    std::get<Sphere>(bad_radius.objects[0].shape).radius = -1;
    CHECK_THROWS_AS(validate_scene(bad_radius), std::invalid_argument);

    Scene bad_normal = s;
    bad_normal.objects[0].shape = Hyperplane{{0.5, 0, 0}, 0};
    CHECK_THROWS_AS(validate_scene(bad_normal), std::invalid_argument);

    Scene seg3d;
    seg3d.dim = 3;
    seg3d.objects = {dirichlet(Segment{{0, 0, 0}, {1, 0, 0}})};
    CHECK_THROWS_AS(validate_scene(seg3d), std::invalid_argument);

    Scene neg_potential = s;
    neg_potential.objects[0].interaction = Interaction{false, -2.0, 0.1};
    CHECK_THROWS_AS(validate_scene(neg_potential), std::invalid_argument);

    Scene bad_box = s;
    bad_box.domain = BoxShape{{1, 1, 0}, {0, 0, 0}};
    CHECK_THROWS_AS(validate_scene(bad_box), std::invalid_argument);
}

TEST_CASE("translation moves every shape uniformly") {
    Scene s;
    s.dim = 2;
    s.objects = {dirichlet(Sphere{{1, 1, 0}, 0.5}),
                 dirichlet(Hyperplane{{1, 0, 0}, 2.0}),
                 dirichlet(Segment{{0, 0, 0}, {1, 0, 0}})};
    translate(s, {1.0, -1.0, 0.0});
    CHECK(std::get<Sphere>(s.objects[0].shape).center[0] == doctest::Approx(2));
    CHECK(std::get<Sphere>(s.objects[0].shape).center[1] == doctest::Approx(0));
    // plane offset follows n . delta
    CHECK(std::get<Hyperplane>(s.objects[1].shape).offset == doctest::Approx(3));
    CHECK(std::get<Segment>(s.objects[2].shape).b[1] == doctest::Approx(-1));
}
