#include <doctest.h>

#include <stdexcept>

#include <string>

#include "wlc/scene_io.hpp"

using namespace wlc;

namespace {

const char* kSample = R"(# sample scene
dimension = 2
box = -2 3 -1 4

[object]
shape = plane 3 4 2.5
interaction = potential 1.25 0.2 gauss

[object]
shape = sphere 0.25 1.5 0.75
interaction = potential 2.5 0.4

[object]
shape = segment 0 0 1 0
interaction = dirichlet

[object]
shape = box 1 2 2 3
interaction = dirichlet
)";

} // namespace

TEST_CASE("parsing normalizes and validates") {
    const Scene s = parse_scene(kSample);
    CHECK(s.dim == 2);
    REQUIRE(s.domain.has_value());
    CHECK(s.domain->lo[0] == -2.0);
    CHECK(s.domain->hi[1] == 4.0);
    REQUIRE(s.objects.size() == 4);

    const auto& h = std::get<Hyperplane>(s.objects[0].shape);
    CHECK(h.normal[0] == doctest::Approx(0.6));
    CHECK(h.normal[1] == doctest::Approx(0.8));
    CHECK(h.offset == doctest::Approx(0.5)); // scales with the normal
    CHECK_FALSE(s.objects[0].interaction.dirichlet);
    CHECK(s.objects[0].interaction.profile == PotentialProfile::gaussian);

    CHECK_FALSE(s.objects[1].interaction.dirichlet);
    CHECK(s.objects[1].interaction.strength == 2.5);
    CHECK(s.objects[1].interaction.width == 0.4);
    CHECK(s.objects[1].interaction.profile == PotentialProfile::uniform);
    CHECK(s.objects[2].interaction.dirichlet);
    CHECK(s.objects[3].interaction.dirichlet);
}

TEST_CASE("render-parse round trip is the identity") {
    const Scene s = parse_scene(kSample);
    const std::string text = render_scene(s);
    const Scene again = parse_scene(text);
    CHECK(again == s);
    CHECK(render_scene(again) == text); // fixed point after one canonical pass
    CHECK(scene_hash(again) == scene_hash(s));
}

TEST_CASE("scene hashes separate distinct scenes") {
    Scene a = parse_scene(kSample);
    Scene b = a;
    std::get<Sphere>(b.objects[1].shape).radius = 0.76;
    CHECK(scene_hash(a) != scene_hash(b));
}

TEST_CASE("parse errors carry the offending line") {
    auto line_of = [](const char* text) {
        try {
            parse_scene(text);
        } catch (const SceneParseError& e) {
            return e.line();
        }
        return -1;
    };
    CHECK(line_of("dimension = 2\n[object]\nshape = sphere 0 0\n") == 3);
    CHECK(line_of("dimension = 5\n") == 1);
    CHECK(line_of("dimension = 1\n\n[object]\nshape = plane 1 0\n"
                  "interaction = dirichlet\ninteraction = dirichlet\n") == 6);
    CHECK(line_of("dimension = 1\n[object]\ninteraction = dirichlet\n") == 2);
    CHECK(line_of("dimension = 1\n[object]\nshape = plane 1 zebra\n") == 3);
    // missing shape keyword entirely
    CHECK(line_of("dimension = 1\n") > 0);
}

TEST_CASE("interaction grammar is strict") {
    CHECK_THROWS_AS(parse_scene("dimension = 1\n[object]\nshape = plane 1 0\n"
                                "interaction = dirichlet 3\n"),
                    SceneParseError);
    CHECK_THROWS_AS(parse_scene("dimension = 1\n[object]\nshape = plane 1 0\n"
                                "interaction = potential\n"),
                    SceneParseError);
    CHECK_THROWS_AS(parse_scene("dimension = 1\n[object]\nshape = plane 1 0\n"
                                "interaction = banana 1\n"),
                    SceneParseError);
}

TEST_CASE("unit normals stay bit-identical through the round trip") {
    // a normal that is unit only after normalization must not drift when the
    // canonical form is parsed again
    const char* text = "dimension = 2\n[object]\n"
                       "shape = plane 0.70710678118654752 0.70710678118654752 1\n"
                       "interaction = dirichlet\n";
    const Scene s = parse_scene(text);
    const std::string canon = render_scene(s);
    CHECK(parse_scene(canon) == s);
    CHECK(render_scene(parse_scene(canon)) == canon);
}

TEST_CASE("missing scene files raise input errors") {
    CHECK_THROWS_AS((void)load_scene_file("/nonexistent/scene.txt"),
                    std::invalid_argument);
}
