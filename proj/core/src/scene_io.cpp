#include "wlc/scene_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace wlc {

namespace {

std::vector<std::string> tokenize(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string t;
    while (is >> t) out.push_back(t);
    return out;
}

double parse_real(const std::string& tok, int line) {
    double v = 0.0;
    const char* b = tok.data();
    const char* e = b + tok.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc{} || p != e)
        throw SceneParseError(line, "malformed number '" + tok + "'");
    if (!std::isfinite(v))
        throw SceneParseError(line, "number out of range '" + tok + "'");
    return v;
}

std::vector<double> parse_reals(const std::vector<std::string>& toks,
                                std::size_t from, int line) {
    std::vector<double> v;
    for (std::size_t i = from; i < toks.size(); ++i)
        v.push_back(parse_real(toks[i], line));
    return v;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Shape parse_shape(const std::vector<std::string>& toks, std::uint32_t dim,
                  int line) {
    const std::string& kind = toks[0];
    const std::vector<double> p = parse_reals(toks, 1, line);
    auto want = [&](std::size_t n, const char* what) {
        if (p.size() != n)
            throw SceneParseError(line, std::string(what) + " in " +
                                            std::to_string(dim) +
                                            "d takes " + std::to_string(n) +
                                            " parameters, got " +
                                            std::to_string(p.size()));
    };
    if (kind == "plane") {
        want(dim + 1, "plane");
        Hyperplane h;
        double n2 = 0.0;
        for (std::uint32_t c = 0; c < dim; ++c) {
            h.normal[c] = p[c];
            n2 += p[c] * p[c];
        }
        if (n2 <= 0.0)
            throw SceneParseError(line, "plane normal must be nonzero");
        h.offset = p[dim];
        if (std::abs(n2 - 1.0) > 1e-12) { // keep unit normals bit-exact
            const double n = std::sqrt(n2);
            for (std::uint32_t c = 0; c < dim; ++c) h.normal[c] /= n;
            h.offset /= n; // offsets scale with the normal
        }
        return h;
    }
    if (kind == "segment") {
        if (dim != 2)
            throw SceneParseError(line, "segments are 2d only");
        want(4, "segment");
        return Segment{{p[0], p[1], 0}, {p[2], p[3], 0}};
    }
    if (kind == "sphere") {
        want(dim + 1, "sphere");
        Sphere s;
        for (std::uint32_t c = 0; c < dim; ++c) s.center[c] = p[c];
        s.radius = p[dim];
        return s;
    }
    if (kind == "box") {
        want(2 * dim, "box");
        BoxShape b;
        for (std::uint32_t c = 0; c < dim; ++c) {
            b.lo[c] = p[2 * c];
            b.hi[c] = p[2 * c + 1];
        }
        return b;
    }
    throw SceneParseError(line, "unknown shape '" + kind + "'");
}

Interaction parse_interaction(const std::vector<std::string>& toks, int line) {
    Interaction in;
    if (toks[0] == "dirichlet") {
        if (toks.size() != 1)
            throw SceneParseError(line, "dirichlet takes no parameters");
        return in;
    }
    if (toks[0] != "potential")
        throw SceneParseError(line, "unknown interaction '" + toks[0] + "'");
    in.dirichlet = false;
    std::size_t n = toks.size();
    if (n > 1 && toks[n - 1] == "gauss") {
        in.profile = PotentialProfile::gaussian;
        --n;
    }
    if (n < 2 || n > 3)
        throw SceneParseError(line, "potential takes <strength> [width] [gauss]");
    in.strength = parse_real(toks[1], line);
    if (n == 3) in.width = parse_real(toks[2], line);
    return in;
}

} // namespace

Scene parse_scene(const std::string& text) {
    Scene scene;
    bool have_dim = false;
    bool in_object = false;
    bool have_shape = false, have_inter = false;
    std::istringstream is(text);
    std::string raw;
    int line = 0;
    int object_line = 0;

    auto flush_object = [&]() {
        if (in_object && !have_shape)
            throw SceneParseError(object_line, "[object] block has no shape");
    };

    while (std::getline(is, raw)) {
        ++line;
        if (const auto h = raw.find('#'); h != std::string::npos)
            raw.erase(h);
        const std::vector<std::string> toks = tokenize(raw);
        if (toks.empty()) continue;

        if (toks[0] == "[object]") {
            if (toks.size() != 1)
                throw SceneParseError(line, "trailing tokens after [object]");
            if (!have_dim)
                throw SceneParseError(line, "dimension must be set before objects");
            flush_object();
            scene.objects.emplace_back();
            in_object = true;
            have_shape = have_inter = false;
            object_line = line;
            continue;
        }
        if (toks.size() < 2 || toks[1] != "=")
            throw SceneParseError(line, "expected 'key = value'");
        const std::string& key = toks[0];
        std::vector<std::string> val(toks.begin() + 2, toks.end());
        if (val.empty())
            throw SceneParseError(line, "missing value for '" + key + "'");

        if (key == "dimension") {
            if (in_object)
                throw SceneParseError(line, "dimension inside [object] block");
            if (have_dim) throw SceneParseError(line, "duplicate dimension");
            const double d = parse_real(val[0], line);
            if (val.size() != 1 || d != std::floor(d) || d < 1 || d > 3)
                throw SceneParseError(line, "dimension must be 1, 2 or 3");
            scene.dim = std::uint32_t(d);
            have_dim = true;
        } else if (key == "box") {
            if (in_object)
                throw SceneParseError(line, "box inside [object] block");
            if (!have_dim)
                throw SceneParseError(line, "dimension must be set before box");
            if (scene.domain) throw SceneParseError(line, "duplicate box");
            const std::vector<double> p = parse_reals(val, 0, line);
            if (p.size() != 2 * scene.dim)
                throw SceneParseError(line, "box takes " +
                                                std::to_string(2 * scene.dim) +
                                                " parameters");
            BoxShape b;
            for (std::uint32_t c = 0; c < scene.dim; ++c) {
                b.lo[c] = p[2 * c];
                b.hi[c] = p[2 * c + 1];
            }
            scene.domain = b;
        } else if (key == "shape") {
            if (!in_object)
                throw SceneParseError(line, "shape outside [object] block");
            if (have_shape) throw SceneParseError(line, "duplicate shape");
            scene.objects.back().shape = parse_shape(val, scene.dim, line);
            have_shape = true;
        } else if (key == "interaction") {
            if (!in_object)
                throw SceneParseError(line, "interaction outside [object] block");
            if (have_inter) throw SceneParseError(line, "duplicate interaction");
            scene.objects.back().interaction = parse_interaction(val, line);
            have_inter = true;
        } else {
            throw SceneParseError(line, "unknown key '" + key + "'");
        }
    }
    flush_object();
    if (!have_dim) throw SceneParseError(line, "missing dimension");
    if (scene.objects.empty()) throw SceneParseError(line, "scene has no objects");
    validate_scene(scene);
    return scene;
}

std::string render_scene(const Scene& scene) {
    std::ostringstream os;
    os << "dimension = " << scene.dim << "\n";
    if (scene.domain) {
        os << "box =";
        for (std::uint32_t c = 0; c < scene.dim; ++c)
            os << " " << fmt(scene.domain->lo[c]) << " "
               << fmt(scene.domain->hi[c]);
        os << "\n";
    }
    for (const Object& o : scene.objects) {
        os << "\n[object]\nshape = ";
        if (const auto* h = std::get_if<Hyperplane>(&o.shape)) {
            os << "plane";
            for (std::uint32_t c = 0; c < scene.dim; ++c)
                os << " " << fmt(h->normal[c]);
            os << " " << fmt(h->offset);
        } else if (const auto* s = std::get_if<Segment>(&o.shape)) {
            os << "segment " << fmt(s->a[0]) << " " << fmt(s->a[1]) << " "
               << fmt(s->b[0]) << " " << fmt(s->b[1]);
        } else if (const auto* sp = std::get_if<Sphere>(&o.shape)) {
            os << "sphere";
            for (std::uint32_t c = 0; c < scene.dim; ++c)
                os << " " << fmt(sp->center[c]);
            os << " " << fmt(sp->radius);
        } else {
            const auto& b = std::get<BoxShape>(o.shape);
            os << "box";
            for (std::uint32_t c = 0; c < scene.dim; ++c)
                os << " " << fmt(b.lo[c]) << " " << fmt(b.hi[c]);
        }
        os << "\ninteraction = ";
        if (o.interaction.dirichlet) {
            os << "dirichlet";
        } else {
            os << "potential " << fmt(o.interaction.strength);
            if (o.interaction.width > 0.0 ||
                o.interaction.profile == PotentialProfile::gaussian)
                os << " " << fmt(o.interaction.width);
            if (o.interaction.profile == PotentialProfile::gaussian)
                os << " gauss";
        }
        os << "\n";
    }
    return os.str();
}

Scene load_scene_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open scene file: " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    try {
        return parse_scene(buf.str());
    } catch (const SceneParseError& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

std::uint64_t scene_hash(const Scene& scene) {
    const std::string text = render_scene(scene);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace wlc
