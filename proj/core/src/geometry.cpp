#include "wlc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace wlc {

namespace {

constexpr double kEps = 1e-12;

double norm(const Vec3& v, std::uint32_t dim) {
    return std::sqrt(dot(v, v, dim));
}

Vec3 sub(const Vec3& a, const Vec3& b) {
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

double cross2(const Vec3& a, const Vec3& b) { return a[0] * b[1] - a[1] * b[0]; }

Vec3 loop_pos(const DiscretizedLoop& l, std::uint32_t k) {
    Vec3 p = l.x;
    for (std::uint32_t c = 0; c < l.dim; ++c)
        p[c] += l.sqrt_beta * l.u[std::size_t(k) * l.dim + c];
    return p;
}

double point_segment_dist(const Vec3& p, const Vec3& a, const Vec3& b,
                          std::uint32_t dim) {
    const Vec3 ab = sub(b, a);
    const double len2 = dot(ab, ab, dim);
    double t = 0.0;
    if (len2 > 0.0) t = std::clamp(dot(sub(p, a), ab, dim) / len2, 0.0, 1.0);
    Vec3 q = a;
    for (std::uint32_t c = 0; c < dim; ++c) q[c] += t * ab[c];
    return norm(sub(p, q), dim);
}

// 2d segment intersection, endpoint touches count
bool segments_intersect(const Vec3& p1, const Vec3& p2, const Vec3& q1,
                        const Vec3& q2) {
    const Vec3 r = sub(p2, p1);
    const Vec3 s = sub(q2, q1);
    const double scale =
        std::max({std::abs(r[0]), std::abs(r[1]), std::abs(s[0]),
                  std::abs(s[1]), 1e-300});
    const double tol = kEps * scale * scale;
    const double d1 = cross2(r, sub(q1, p1));
    const double d2 = cross2(r, sub(q2, p1));
    const double d3 = cross2(s, sub(p1, q1));
    const double d4 = cross2(s, sub(p2, q1));
    if ((d1 > tol && d2 < -tol) || (d1 < -tol && d2 > tol))
        if ((d3 > tol && d4 < -tol) || (d3 < -tol && d4 > tol)) return true;
    auto on_segment = [&](const Vec3& a, const Vec3& b, const Vec3& p,
                          double cr) {
        if (std::abs(cr) > tol) return false;
        for (int c = 0; c < 2; ++c)
            if (p[c] < std::min(a[c], b[c]) - kEps * scale ||
                p[c] > std::max(a[c], b[c]) + kEps * scale)
                return false;
        return true;
    };
    return on_segment(p1, p2, q1, d1) || on_segment(p1, p2, q2, d2) ||
           on_segment(q1, q2, p1, d3) || on_segment(q1, q2, p2, d4);
}

// parametric clip of segment a + t*(b-a), t in [0,1], against a box
bool segment_box_intersect(const Vec3& a, const Vec3& b, const BoxShape& box,
                           std::uint32_t dim) {
    double t0 = 0.0, t1 = 1.0;
    for (std::uint32_t c = 0; c < dim; ++c) {
        const double d = b[c] - a[c];
        if (std::abs(d) < kEps * (std::abs(a[c]) + std::abs(b[c]) + 1.0)) {
            if (a[c] < box.lo[c] || a[c] > box.hi[c]) return false;
            continue;
        }
        double ta = (box.lo[c] - a[c]) / d;
        double tb = (box.hi[c] - a[c]) / d;
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1) return false;
    }
    return true;
}

bool point_in_box(const Vec3& p, const BoxShape& box, std::uint32_t dim) {
    for (std::uint32_t c = 0; c < dim; ++c)
        if (p[c] < box.lo[c] || p[c] > box.hi[c]) return false;
    return true;
}

bool point_in_shape(const Shape& shape, const Vec3& p, std::uint32_t dim) {
    if (const auto* s = std::get_if<Sphere>(&shape))
        return norm(sub(p, s->center), dim) <= s->radius;
    if (const auto* b = std::get_if<BoxShape>(&shape))
        return point_in_box(p, *b, dim);
    return false; // thin shapes have no interior
}

double plane_value(const Hyperplane& h, const Vec3& p, std::uint32_t dim) {
    return dot(h.normal, p, dim) - h.offset;
}

struct LoopIter {
    const DiscretizedLoop& l;
    std::uint32_t k = 0;
    bool done() const { return k > l.points; }
    void next() { k += l.stride; }
};

} // namespace

void validate_scene(const Scene& scene) {
    if (scene.dim < 1 || scene.dim > 3)
        throw std::invalid_argument("scene dim must be 1, 2 or 3");
    if (scene.objects.empty())
        throw std::invalid_argument("scene has no objects");
    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
        const Object& o = scene.objects[i];
        const std::string tag = "object " + std::to_string(i + 1) + ": ";
        if (const auto* h = std::get_if<Hyperplane>(&o.shape)) {
            const double n = norm(h->normal, scene.dim);
            if (std::abs(n - 1.0) > 1e-9)
                throw std::invalid_argument(tag + "hyperplane normal must be unit length");
            for (std::uint32_t c = scene.dim; c < 3; ++c)
                if (h->normal[c] != 0.0)
                    throw std::invalid_argument(tag + "normal component beyond scene dim");
        } else if (const auto* s = std::get_if<Segment>(&o.shape)) {
            if (scene.dim != 2)
                throw std::invalid_argument(tag + "segments are 2d only");
            if (norm(sub(s->b, s->a), 2) <= 0.0)
                throw std::invalid_argument(tag + "segment has zero length");
        } else if (const auto* sp = std::get_if<Sphere>(&o.shape)) {
            if (!(sp->radius > 0.0))
                throw std::invalid_argument(tag + "sphere radius must be positive");
        } else if (const auto* b = std::get_if<BoxShape>(&o.shape)) {
            for (std::uint32_t c = 0; c < scene.dim; ++c)
                if (!(b->lo[c] < b->hi[c]))
                    throw std::invalid_argument(tag + "box lo must be below hi on every axis");
        }
        if (!o.interaction.dirichlet) {
            if (!(o.interaction.strength >= 0.0) ||
                !std::isfinite(o.interaction.strength))
                throw std::invalid_argument(tag + "potential strength must be finite and nonnegative");
            if (std::holds_alternative<Segment>(o.shape))
                throw std::invalid_argument(tag + "segments support only dirichlet interactions");
            const bool needs_width =
                std::holds_alternative<Hyperplane>(o.shape) ||
                o.interaction.profile == PotentialProfile::gaussian;
            if (needs_width && !(o.interaction.width > 0.0))
                throw std::invalid_argument(tag + "potential width must be positive");
            if (o.interaction.profile == PotentialProfile::gaussian &&
                !std::holds_alternative<Hyperplane>(o.shape))
                throw std::invalid_argument(tag + "gaussian profile applies to hyperplanes only");
        }
    }
    if (scene.domain) {
        for (std::uint32_t c = 0; c < scene.dim; ++c)
            if (!(scene.domain->lo[c] < scene.domain->hi[c]))
                throw std::invalid_argument("domain box lo must be below hi on every axis");
    }
}

bool touches(const Object& obj, const DiscretizedLoop& loop) {
    if (const auto* h = std::get_if<Hyperplane>(&obj.shape)) {
        double lo = 0.0, hi = 0.0;
        bool first = true;
        for (LoopIter it{loop}; !it.done(); it.next()) {
            const double f = plane_value(*h, loop_pos(loop, it.k), loop.dim);
            if (first) {
                lo = hi = f;
                first = false;
            } else {
                lo = std::min(lo, f);
                hi = std::max(hi, f);
            }
        }
        return lo <= 0.0 && hi >= 0.0;
    }
    if (const auto* s = std::get_if<Segment>(&obj.shape)) {
        Vec3 prev = loop_pos(loop, 0);
        for (std::uint32_t k = loop.stride; k <= loop.points; k += loop.stride) {
            const Vec3 cur = loop_pos(loop, k);
            if (segments_intersect(prev, cur, s->a, s->b)) return true;
            prev = cur;
        }
        return false;
    }
    if (const auto* sp = std::get_if<Sphere>(&obj.shape)) {
        Vec3 prev = loop_pos(loop, 0);
        if (norm(sub(prev, sp->center), loop.dim) <= sp->radius) return true;
        for (std::uint32_t k = loop.stride; k <= loop.points; k += loop.stride) {
            const Vec3 cur = loop_pos(loop, k);
            if (point_segment_dist(sp->center, prev, cur, loop.dim) <= sp->radius)
                return true;
            prev = cur;
        }
        return false;
    }
    const auto& box = std::get<BoxShape>(obj.shape);
    Vec3 prev = loop_pos(loop, 0);
    if (point_in_box(prev, box, loop.dim)) return true;
    for (std::uint32_t k = loop.stride; k <= loop.points; k += loop.stride) {
        const Vec3 cur = loop_pos(loop, k);
        if (segment_box_intersect(prev, cur, box, loop.dim)) return true;
        prev = cur;
    }
    return false;
}

double potential_value(const Object& obj, const Vec3& p, std::uint32_t dim) {
    if (obj.interaction.dirichlet)
        throw std::invalid_argument("potential_value on a dirichlet object");
    const Interaction& in = obj.interaction;
    if (const auto* h = std::get_if<Hyperplane>(&obj.shape)) {
        const double f = plane_value(*h, p, dim);
        if (in.profile == PotentialProfile::gaussian)
            return in.strength * std::exp(-f * f / (2.0 * in.width * in.width));
        return std::abs(f) <= 0.5 * in.width ? in.strength : 0.0;
    }
    return point_in_shape(obj.shape, p, dim) ? in.strength : 0.0;
}

double potential_integral(const Object& obj, const DiscretizedLoop& loop) {
    if (obj.interaction.dirichlet)
        throw std::invalid_argument("potential_integral on a dirichlet object");
    // closed path: trapezoid rule collapses to a plain sum over one period
    const double dt = loop.beta * double(loop.stride) / double(loop.points);
    double sum = 0.0;
    for (std::uint32_t k = 0; k < loop.points; k += loop.stride)
        sum += potential_value(obj, loop_pos(loop, k), loop.dim);
    return dt * sum;
}

double survival(const Object& obj, const DiscretizedLoop& loop) {
    if (obj.interaction.dirichlet) return touches(obj, loop) ? 0.0 : 1.0;
    return std::exp(-potential_integral(obj, loop));
}

namespace {

bool plane_plane_disjoint(const Hyperplane& a, const Hyperplane& b,
                          std::uint32_t dim) {
    const double c = dot(a.normal, b.normal, dim);
    if (dim >= 2 && 1.0 - std::abs(c) > kEps) return false; // they cross
    return std::abs(b.offset * c - a.offset) > kEps * (1.0 + std::abs(a.offset));
}

bool plane_box_disjoint(const Hyperplane& h, const BoxShape& b,
                        std::uint32_t dim) {
    double mid = -h.offset, rad = 0.0;
    for (std::uint32_t c = 0; c < dim; ++c) {
        mid += h.normal[c] * 0.5 * (b.lo[c] + b.hi[c]);
        rad += std::abs(h.normal[c]) * 0.5 * (b.hi[c] - b.lo[c]);
    }
    return std::abs(mid) > rad;
}

bool box_box_disjoint(const BoxShape& a, const BoxShape& b, std::uint32_t dim) {
    for (std::uint32_t c = 0; c < dim; ++c)
        if (a.hi[c] < b.lo[c] || b.hi[c] < a.lo[c]) return true;
    return false;
}

double point_box_dist(const Vec3& p, const BoxShape& b, std::uint32_t dim) {
    double d2 = 0.0;
    for (std::uint32_t c = 0; c < dim; ++c) {
        const double q = std::clamp(p[c], b.lo[c], b.hi[c]);
        d2 += (p[c] - q) * (p[c] - q);
    }
    return std::sqrt(d2);
}

} // namespace

bool shapes_disjoint(const Shape& a, const Shape& b, std::uint32_t dim) {
    if (a.index() > b.index()) return shapes_disjoint(b, a, dim);
    if (const auto* ha = std::get_if<Hyperplane>(&a)) {
        if (const auto* hb = std::get_if<Hyperplane>(&b))
            return plane_plane_disjoint(*ha, *hb, dim);
        if (const auto* sb = std::get_if<Segment>(&b)) {
            const double fa = plane_value(*ha, sb->a, dim);
            const double fb = plane_value(*ha, sb->b, dim);
            return fa * fb > 0.0 && std::min(std::abs(fa), std::abs(fb)) > kEps;
        }
        if (const auto* sp = std::get_if<Sphere>(&b))
            return std::abs(plane_value(*ha, sp->center, dim)) > sp->radius;
        return plane_box_disjoint(*ha, std::get<BoxShape>(b), dim);
    }
    if (const auto* sa = std::get_if<Segment>(&a)) {
        if (const auto* sb = std::get_if<Segment>(&b))
            return !segments_intersect(sa->a, sa->b, sb->a, sb->b);
        if (const auto* sp = std::get_if<Sphere>(&b))
            return point_segment_dist(sp->center, sa->a, sa->b, dim) > sp->radius;
        return !segment_box_intersect(sa->a, sa->b, std::get<BoxShape>(b), dim);
    }
    if (const auto* spa = std::get_if<Sphere>(&a)) {
        if (const auto* spb = std::get_if<Sphere>(&b))
            return norm(sub(spa->center, spb->center), dim) >
                   spa->radius + spb->radius;
        return point_box_dist(spa->center, std::get<BoxShape>(b), dim) >
               spa->radius;
    }
    return box_box_disjoint(std::get<BoxShape>(a), std::get<BoxShape>(b), dim);
}

std::optional<BoxShape> finite_bbox(const Shape& shape, std::uint32_t dim) {
    if (const auto* h = std::get_if<Hyperplane>(&shape)) {
        if (dim != 1) return std::nullopt;
        const double p = h->offset * h->normal[0];
        return BoxShape{{p, 0, 0}, {p, 0, 0}};
    }
    if (const auto* s = std::get_if<Segment>(&shape)) {
        BoxShape b;
        for (std::uint32_t c = 0; c < dim; ++c) {
            b.lo[c] = std::min(s->a[c], s->b[c]);
            b.hi[c] = std::max(s->a[c], s->b[c]);
        }
        return b;
    }
    if (const auto* sp = std::get_if<Sphere>(&shape)) {
        BoxShape b;
        for (std::uint32_t c = 0; c < dim; ++c) {
            b.lo[c] = sp->center[c] - sp->radius;
            b.hi[c] = sp->center[c] + sp->radius;
        }
        return b;
    }
    return std::get<BoxShape>(shape);
}

namespace {

// consistency of the stacked linear system n_i . x = b_i decides whether a
// pure hyperplane family shares a point
IntersectionCheck hyperplane_family_check(const Scene& scene) {
    const std::uint32_t d = scene.dim;
    std::vector<std::array<double, 4>> rows;
    double scale = 1.0;
    for (const Object& o : scene.objects) {
        const auto& h = std::get<Hyperplane>(o.shape);
        rows.push_back({h.normal[0], h.normal[1], h.normal[2], h.offset});
        scale = std::max(scale, std::abs(h.offset));
    }
    std::uint32_t rank = 0;
    for (std::uint32_t col = 0; col < d && rank < rows.size(); ++col) {
        std::size_t piv = rank;
        for (std::size_t r = rank + 1; r < rows.size(); ++r)
            if (std::abs(rows[r][col]) > std::abs(rows[piv][col])) piv = r;
        if (std::abs(rows[piv][col]) < kEps) continue;
        std::swap(rows[piv], rows[rank]);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (r == rank) continue;
            const double f = rows[r][col] / rows[rank][col];
            for (std::uint32_t c = 0; c < 4; ++c) rows[r][c] -= f * rows[rank][c];
        }
        ++rank;
    }
    for (std::size_t r = rank; r < rows.size(); ++r)
        if (std::abs(rows[r][3]) > 1e-9 * scale) return IntersectionCheck::empty;
    return IntersectionCheck::nonempty;
}

IntersectionCheck solid_family_check(const Scene& scene, int res) {
    BoxShape window;
    bool first = true;
    for (const Object& o : scene.objects) {
        const auto bb = finite_bbox(o.shape, scene.dim);
        if (!bb) return IntersectionCheck::undecidable;
        if (first) {
            window = *bb;
            first = false;
        } else {
            for (std::uint32_t c = 0; c < scene.dim; ++c) {
                window.lo[c] = std::max(window.lo[c], bb->lo[c]);
                window.hi[c] = std::min(window.hi[c], bb->hi[c]);
            }
        }
    }
    for (std::uint32_t c = 0; c < scene.dim; ++c)
        if (window.lo[c] > window.hi[c]) return IntersectionCheck::empty;

    bool all_boxes = true;
    for (const Object& o : scene.objects)
        if (!std::holds_alternative<BoxShape>(o.shape)) all_boxes = false;
    if (all_boxes) return IntersectionCheck::nonempty; // window is the intersection

    // grid scan for a witness point inside every body
    const std::uint32_t d = scene.dim;
    std::int64_t total = 1;
    for (std::uint32_t c = 0; c < d; ++c) total *= res;
    for (std::int64_t idx = 0; idx < total; ++idx) {
        Vec3 p{};
        std::int64_t rem = idx;
        for (std::uint32_t c = 0; c < d; ++c) {
            const std::int64_t i = rem % res;
            rem /= res;
            const double w = window.hi[c] - window.lo[c];
            p[c] = w > 0.0 ? window.lo[c] + (double(i) + 0.5) * w / double(res)
                           : window.lo[c];
        }
        bool in_all = true;
        for (const Object& o : scene.objects)
            if (!point_in_shape(o.shape, p, d)) {
                in_all = false;
                break;
            }
        if (in_all) return IntersectionCheck::nonempty;
    }
    return IntersectionCheck::undecidable;
}

} // namespace

IntersectionCheck verify_empty_common_intersection(const Scene& scene,
                                                   int grid_resolution) {
    const std::size_t n = scene.objects.size();
    if (n == 0) return IntersectionCheck::nonempty;
    if (n == 1) return IntersectionCheck::nonempty;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (shapes_disjoint(scene.objects[i].shape, scene.objects[j].shape,
                                scene.dim))
                return IntersectionCheck::empty;
    if (n == 2) return IntersectionCheck::nonempty;

    bool all_planes = true, all_solid = true;
    for (const Object& o : scene.objects) {
        if (!std::holds_alternative<Hyperplane>(o.shape)) all_planes = false;
        if (std::holds_alternative<Hyperplane>(o.shape) ||
            std::holds_alternative<Segment>(o.shape))
            all_solid = false;
    }
    if (all_planes) return hyperplane_family_check(scene);
    if (all_solid) return solid_family_check(scene, grid_resolution);
    return IntersectionCheck::undecidable;
}

void translate(Object& obj, const Vec3& delta) {
    if (auto* h = std::get_if<Hyperplane>(&obj.shape)) {
        h->offset += dot(h->normal, delta, 3);
    } else if (auto* s = std::get_if<Segment>(&obj.shape)) {
        for (int c = 0; c < 3; ++c) {
            s->a[c] += delta[c];
            s->b[c] += delta[c];
        }
    } else if (auto* sp = std::get_if<Sphere>(&obj.shape)) {
        for (int c = 0; c < 3; ++c) sp->center[c] += delta[c];
    } else if (auto* b = std::get_if<BoxShape>(&obj.shape)) {
        for (int c = 0; c < 3; ++c) {
            b->lo[c] += delta[c];
            b->hi[c] += delta[c];
        }
    }
}

void translate(Scene& scene, const Vec3& delta) {
    for (Object& o : scene.objects) translate(o, delta);
    if (scene.domain) {
        for (int c = 0; c < 3; ++c) {
            scene.domain->lo[c] += delta[c];
            scene.domain->hi[c] += delta[c];
        }
    }
}

} // namespace wlc
