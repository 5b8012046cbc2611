#pragma once
// Scene geometry: obstacles a diffusing path can hit, each with either a
// Dirichlet (absorbing) interaction or a nonnegative potential read along
// the path.  Dimensions 1..3; vectors use fixed 3-slot storage with the
// trailing coordinates zero.
//
// A hyperplane is a point in 1D, a line in 2D and a plane in 3D, stored as
// unit normal + offset (points p with n.p = b).  Spheres and boxes are
// solid; a path touches them when it enters the body.  Segments exist in
// 2D only.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace wlc {

using Vec3 = std::array<double, 3>;

struct Hyperplane {
    Vec3 normal{};  // unit length
    double offset = 0.0;
    bool operator==(const Hyperplane&) const = default;
};

struct Segment {
    Vec3 a{};
    Vec3 b{};
    bool operator==(const Segment&) const = default;
};

struct Sphere {
    Vec3 center{};
    double radius = 0.0;
    bool operator==(const Sphere&) const = default;
};

struct BoxShape {
    Vec3 lo{};
    Vec3 hi{};
    bool operator==(const BoxShape&) const = default;
};

using Shape = std::variant<Hyperplane, Segment, Sphere, BoxShape>;

enum class PotentialProfile { uniform, gaussian };

struct Interaction {
    bool dirichlet = true;
    double strength = 0.0;               // potential amplitude, >= 0
    double width = 0.0;                  // slab thickness or gaussian width
    PotentialProfile profile = PotentialProfile::uniform;
    bool operator==(const Interaction&) const = default;
};

struct Object {
    Shape shape;
    Interaction interaction;
    bool operator==(const Object&) const = default;
};

struct Scene {
    std::uint32_t dim = 1;
    std::vector<Object> objects;
    std::optional<BoxShape> domain; // finite embedding box; paths leaving it die
    bool operator==(const Scene&) const = default;
};

// throws std::invalid_argument describing the first violated constraint
void validate_scene(const Scene& scene);

// view of one closed discretized path: unit samples u (coordinate-minor,
// (points+1) rows), physical sample k is x + sqrt_beta * u_k.  stride > 1
// walks the coarse half of a refinement pair.
struct DiscretizedLoop {
    std::span<const double> u;
    Vec3 x{};
    double sqrt_beta = 1.0;
    double beta = 1.0;
    std::uint32_t dim = 1;
    std::uint32_t points = 0; // index of the closing sample
    std::uint32_t stride = 1; // must divide points
};

// Dirichlet predicate: does the discretized path meet the object?
bool touches(const Object& obj, const DiscretizedLoop& loop);

// pointwise potential V(p) of a non-dirichlet object
double potential_value(const Object& obj, const Vec3& p, std::uint32_t dim);

// trapezoidal approximation of int_0^beta V(path(t)) dt
double potential_integral(const Object& obj, const DiscretizedLoop& loop);

// per-object survival factor in [0,1]: Dirichlet 0/1, potential e^{-int V}
double survival(const Object& obj, const DiscretizedLoop& loop);

enum class IntersectionCheck { empty, nonempty, undecidable };

// conservative check that the common intersection of all objects is empty;
// exact for pairs and for pure hyperplane scenes, grid falsification for
// solid bodies, undecidable otherwise (never claims empty without proof)
IntersectionCheck verify_empty_common_intersection(const Scene& scene,
                                                   int grid_resolution = 64);

// exact pairwise disjointness for every shape combination
bool shapes_disjoint(const Shape& a, const Shape& b, std::uint32_t dim);

// smallest axis-aligned box containing the shape, if it is bounded
std::optional<BoxShape> finite_bbox(const Shape& shape, std::uint32_t dim);

void translate(Object& obj, const Vec3& delta);
void translate(Scene& scene, const Vec3& delta);

inline double dot(const Vec3& a, const Vec3& b, std::uint32_t dim) {
    double s = 0.0;
    for (std::uint32_t c = 0; c < dim; ++c) s += a[c] * b[c];
    return s;
}

} // namespace wlc
