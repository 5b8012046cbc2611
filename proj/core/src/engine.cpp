#include "wlc/engine.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "wlc/quadrature.hpp"
#include "wlc/rng.hpp"
#include "wlc/scene_io.hpp"

namespace wlc {
namespace {

constexpr std::uint64_t kTagBasePoint = 0x33; // x draws (loops use 0x11/0x22)
constexpr std::uint64_t kTagTourStart = 0x44; // lmin multi-start draws
constexpr std::uint64_t kLminSeed = 0x746f7572u;

constexpr double kPi = std::numbers::pi;

int worker_count(std::uint32_t requested) {
    if (requested) return static_cast<int>(requested);
    const unsigned hc = std::thread::hardware_concurrency();
    return hc ? static_cast<int>(hc) : 1;
}

// the refinement pair walks even-index samples, so M must be even, and
// jackknife needs at least two loops
void check_pair_spec(std::uint64_t n_loops, std::uint32_t points) {
    if (n_loops < 2) throw std::invalid_argument("need at least two loops");
    if (points < 2 || points % 2 != 0)
        throw std::invalid_argument("points must be even for the refinement pair");
}

// ---------------------------------------------------------------- analysis

enum class EvalKind {
    plane_dirichlet, // O(1) per evaluation from cached projections
    plane_slab,      // O(log M) via sorted projections
    plane_gauss,     // O(M) walk with interval pre-reject
    body_dirichlet,  // O(M) walk with bounding-box pre-reject
    body_potential,
};

struct ObjectEval {
    EvalKind kind{};
    int index = 0; // object index in the scene
    Vec3 normal{};
    double offset = 0.0;
    double strength = 0.0;
    double width = 0.0;
    BoxShape bbox{};
    bool has_bbox = false;
};

struct SceneEval {
    const Scene* scene = nullptr;
    std::uint32_t dim = 1;
    int n = 0;
    std::vector<ObjectEval> objs;   // evaluation order: cheap kinds first
    std::vector<int> plane_slot;    // object index -> plane cache slot or -1
    int n_planes = 0;
    bool any_dirichlet = false;
    bool any_unbounded = false;
    double sign = 1.0;              // (-1)^N
    double extrap_denom = 1.0;      // 2^p - 1 for the Richardson step
};

SceneEval analyze(const Scene& scene) {
    validate_scene(scene);
    SceneEval se;
    se.scene = &scene;
    se.dim = scene.dim;
    se.n = static_cast<int>(scene.objects.size());
    se.sign = (se.n % 2 == 0) ? 1.0 : -1.0;
    se.plane_slot.assign(scene.objects.size(), -1);

    for (int i = 0; i < se.n; ++i) {
        const Object& o = scene.objects[static_cast<std::size_t>(i)];
        ObjectEval oe;
        oe.index = i;
        if (o.interaction.dirichlet) se.any_dirichlet = true;
        if (const auto* pl = std::get_if<Hyperplane>(&o.shape)) {
            oe.normal = pl->normal;
            oe.offset = pl->offset;
            oe.strength = o.interaction.strength;
            oe.width = o.interaction.width;
            if (o.interaction.dirichlet)
                oe.kind = EvalKind::plane_dirichlet;
            else if (o.interaction.profile == PotentialProfile::gaussian)
                oe.kind = EvalKind::plane_gauss;
            else
                oe.kind = EvalKind::plane_slab;
            se.plane_slot[static_cast<std::size_t>(i)] = se.n_planes++;
            se.any_unbounded = true;
        } else {
            oe.kind = o.interaction.dirichlet ? EvalKind::body_dirichlet
                                              : EvalKind::body_potential;
            oe.strength = o.interaction.strength;
            if (auto bb = finite_bbox(o.shape, scene.dim)) {
                oe.bbox = *bb;
                oe.has_bbox = true;
            } else {
                se.any_unbounded = true;
            }
        }
        se.objs.push_back(oe);
    }
    // cheap kinds first; stable to keep scene order within a kind
    std::stable_sort(se.objs.begin(), se.objs.end(),
                     [](const ObjectEval& a, const ObjectEval& b) {
                         return static_cast<int>(a.kind) < static_cast<int>(b.kind);
                     });
    // Richardson exponent: Dirichlet crossing bias decays like M^(-1/2);
    // pure-potential scenes see the first-order occupation-time bias
    const double p = se.any_dirichlet ? 0.5 : 1.0;
    se.extrap_denom = std::exp2(p) - 1.0;
    return se;
}

// ------------------------------------------------------------- loop access

class LoopReader {
  public:
    LoopReader(const LoopEnsembleSpec& spec, const std::string& cache_path)
        : spec_(spec), path_(cache_path) {
        if (!path_.empty()) {
            const LoopEnsembleSpec h = read_loop_cache_header(path_);
            if (h.count != spec.count || h.points != spec.points ||
                h.dim != spec.dim || h.seed != spec.seed ||
                h.scheme != spec.scheme)
                throw std::invalid_argument("loop cache does not match the run: " +
                                            path_);
        }
    }

    bool from_file() const { return !path_.empty(); }

    // thread-safe when each worker holds its own Stream
    struct Stream {
        std::ifstream file;
    };

    void open(Stream& st) const {
        if (path_.empty()) return;
        st.file.open(path_, std::ios::binary);
        if (!st.file) throw std::runtime_error("cannot open loop cache: " + path_);
    }

    void load(Stream& st, std::uint64_t i, std::span<double> out) const {
        if (path_.empty()) {
            generate_unit_loop(spec_, i, out);
            return;
        }
        const std::uint64_t per =
            std::uint64_t(spec_.points + 1) * spec_.dim * sizeof(double);
        st.file.seekg(static_cast<std::streamoff>(48 + i * per));
        st.file.read(reinterpret_cast<char*>(out.data()),
                     static_cast<std::streamsize>(per));
        if (!st.file) throw std::runtime_error("short read from loop cache: " + path_);
    }

  private:
    LoopEnsembleSpec spec_;
    std::string path_;
};

// largest Euclidean sample norm over the whole ensemble, one streaming pass
double ensemble_max_radius(const LoopReader& reader, const LoopEnsembleSpec& spec,
                           int workers) {
    const std::size_t per = std::size_t(spec.points + 1) * spec.dim;
    std::vector<double> worker_max(static_cast<std::size_t>(workers), 0.0);
    std::atomic<std::uint64_t> cursor{0};
    std::vector<std::thread> pool;
    std::mutex err_mutex;
    std::exception_ptr err;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                LoopReader::Stream st;
                reader.open(st);
                std::vector<double> u(per);
                double r2max = 0.0;
                for (;;) {
                    const std::uint64_t i = cursor.fetch_add(1);
                    if (i >= spec.count) break;
                    reader.load(st, i, u);
                    for (std::uint32_t k = 0; k <= spec.points; ++k) {
                        double r2 = 0.0;
                        for (std::uint32_t c = 0; c < spec.dim; ++c) {
                            const double v = u[std::size_t(k) * spec.dim + c];
                            r2 += v * v;
                        }
                        r2max = std::max(r2max, r2);
                    }
                }
                worker_max[static_cast<std::size_t>(w)] = std::sqrt(r2max);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
    double r = 0.0;
    for (double v : worker_max) r = std::max(r, v);
    return r;
}

// ------------------------------------------------------------ per-loop data

struct PlaneCache {
    double qmin[2] = {0, 0}; // level 0: all samples, level 1: even samples
    double qmax[2] = {0, 0};
    std::vector<double> q;         // k-ordered projections, size M (plane_gauss)
    std::vector<double> sorted[2]; // sorted projections (plane_slab)
};

struct LoopScratch {
    std::vector<double> u; // (M+1) x dim, coordinate-minor
    double lo[2][3] = {};
    double hi[2][3] = {};
    std::vector<PlaneCache> planes;
};

void prepare_loop(const SceneEval& se, std::uint32_t M, LoopScratch& s) {
    const std::uint32_t d = se.dim;
    for (int level = 0; level < 2; ++level) {
        const std::uint32_t stride = level ? 2 : 1;
        for (std::uint32_t c = 0; c < d; ++c) {
            double lo = 0.0, hi = 0.0; // samples include u_0 = 0
            for (std::uint32_t k = 0; k < M; k += stride) {
                const double v = s.u[std::size_t(k) * d + c];
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            s.lo[level][c] = lo;
            s.hi[level][c] = hi;
        }
    }
    if (se.n_planes == 0) return;
    if (s.planes.size() != static_cast<std::size_t>(se.n_planes))
        s.planes.resize(static_cast<std::size_t>(se.n_planes));
    for (const ObjectEval& oe : se.objs) {
        const int slot = se.plane_slot[static_cast<std::size_t>(oe.index)];
        if (slot < 0) continue;
        PlaneCache& pc = s.planes[static_cast<std::size_t>(slot)];
        const bool want_values = oe.kind == EvalKind::plane_gauss;
        const bool want_sorted = oe.kind == EvalKind::plane_slab;
        if (want_values || want_sorted) pc.q.resize(M);
        double mn[2] = {std::numeric_limits<double>::infinity(),
                        std::numeric_limits<double>::infinity()};
        double mx[2] = {-std::numeric_limits<double>::infinity(),
                        -std::numeric_limits<double>::infinity()};
        for (std::uint32_t k = 0; k < M; ++k) {
            double qk = 0.0;
            for (std::uint32_t c = 0; c < d; ++c)
                qk += oe.normal[c] * s.u[std::size_t(k) * d + c];
            if (want_values || want_sorted) pc.q[k] = qk;
            mn[0] = std::min(mn[0], qk);
            mx[0] = std::max(mx[0], qk);
            if ((k & 1u) == 0) {
                mn[1] = std::min(mn[1], qk);
                mx[1] = std::max(mx[1], qk);
            }
        }
        for (int level = 0; level < 2; ++level) {
            pc.qmin[level] = mn[level];
            pc.qmax[level] = mx[level];
        }
        if (want_sorted) {
            pc.sorted[0].assign(pc.q.begin(), pc.q.end());
            std::sort(pc.sorted[0].begin(), pc.sorted[0].end());
            pc.sorted[1].clear();
            for (std::uint32_t k = 0; k < M; k += 2)
                pc.sorted[1].push_back(pc.q[k]);
            std::sort(pc.sorted[1].begin(), pc.sorted[1].end());
        }
    }
}

// probability that this loop, planted at x with diffusion time beta, is
// killed by every object and stays inside the domain box; exact zero as soon
// as any object is out of reach
double eval_kill(const SceneEval& se, const LoopScratch& s, std::uint32_t M,
                 int level, const Vec3& x, double beta, double sqrt_beta) {
    const std::uint32_t stride = level ? 2u : 1u;
    const std::uint32_t d = se.dim;
    if (se.scene->domain) {
        const BoxShape& box = *se.scene->domain;
        for (std::uint32_t c = 0; c < d; ++c) {
            if (x[c] + sqrt_beta * s.lo[level][c] < box.lo[c] ||
                x[c] + sqrt_beta * s.hi[level][c] > box.hi[c])
                return 0.0;
        }
    }
    const double samples = double(M / stride);
    double kill = 1.0;
    for (const ObjectEval& oe : se.objs) {
        switch (oe.kind) {
        case EvalKind::plane_dirichlet: {
            const PlaneCache& pc =
                s.planes[static_cast<std::size_t>(se.plane_slot[oe.index])];
            const double f0 = dot(oe.normal, x, d) - oe.offset;
            if (f0 + sqrt_beta * pc.qmin[level] > 0.0 ||
                f0 + sqrt_beta * pc.qmax[level] < 0.0)
                return 0.0; // never crosses the plane
            break;          // survival 0: factor 1
        }
        case EvalKind::plane_slab: {
            const PlaneCache& pc =
                s.planes[static_cast<std::size_t>(se.plane_slot[oe.index])];
            const double f0 = dot(oe.normal, x, d) - oe.offset;
            const double half = 0.5 * oe.width;
            const auto& sq = pc.sorted[level];
            const auto first = std::lower_bound(sq.begin(), sq.end(),
                                                (-half - f0) / sqrt_beta);
            const auto last = std::upper_bound(first, sq.end(),
                                               (half - f0) / sqrt_beta);
            const double count = static_cast<double>(last - first);
            if (count == 0.0) return 0.0;
            const double intv = oe.strength * beta * count / samples;
            kill *= -std::expm1(-intv);
            break;
        }
        case EvalKind::plane_gauss: {
            const PlaneCache& pc =
                s.planes[static_cast<std::size_t>(se.plane_slot[oe.index])];
            const double f0 = dot(oe.normal, x, d) - oe.offset;
            const double flo = f0 + sqrt_beta * pc.qmin[level];
            const double fhi = f0 + sqrt_beta * pc.qmax[level];
            const double fmin = flo > 0.0 ? flo : (fhi < 0.0 ? -fhi : 0.0);
            if (fmin >= 8.0 * oe.width) return 0.0; // exp(-32) occupation
            const double inv2w2 = 0.5 / (oe.width * oe.width);
            double sum = 0.0;
            for (std::uint32_t k = 0; k < M; k += stride) {
                const double f = f0 + sqrt_beta * pc.q[k];
                sum += std::exp(-f * f * inv2w2);
            }
            const double intv = oe.strength * beta * sum / samples;
            if (intv <= 0.0) return 0.0;
            kill *= -std::expm1(-intv);
            break;
        }
        case EvalKind::body_dirichlet:
        case EvalKind::body_potential: {
            if (oe.has_bbox) {
                bool out = false;
                for (std::uint32_t c = 0; c < d; ++c) {
                    if (x[c] + sqrt_beta * s.lo[level][c] > oe.bbox.hi[c] ||
                        x[c] + sqrt_beta * s.hi[level][c] < oe.bbox.lo[c]) {
                        out = true;
                        break;
                    }
                }
                if (out) return 0.0;
            }
            const Object& obj =
                se.scene->objects[static_cast<std::size_t>(oe.index)];
            DiscretizedLoop view{std::span<const double>(s.u), x, sqrt_beta,
                                 beta, d, M, stride};
            if (oe.kind == EvalKind::body_dirichlet) {
                if (!touches(obj, view)) return 0.0;
            } else {
                const double intv = potential_integral(obj, view);
                if (intv <= 0.0) return 0.0;
                kill *= -std::expm1(-intv);
            }
            break;
        }
        }
        if (kill <= 0.0) return 0.0;
    }
    return kill;
}

// ------------------------------------------------------------ the main pass

struct BetaNode {
    double beta = 0.0;
    BoxShape box{};
    double volume = 0.0;
    bool empty = true; // no loop can reach every object: estimate is exactly 0
};

struct ShellMass {
    double shell = 0.0;
    double total = 0.0;
};

// streams every loop once and records, per loop and per node, the mean kill
// probability over x replicas at both refinement levels.  out_fine/out_coarse
// are L x ncols row-major matrices filled at columns [col0, col0+nodes).
void spectral_pass(const SceneEval& se, const LoopEnsembleSpec& spec,
                   const LoopReader& reader, std::uint32_t x_samples,
                   int workers, std::span<const BetaNode> nodes,
                   std::size_t col0, std::size_t ncols, double* out_fine,
                   double* out_coarse, std::vector<ShellMass>* shell_out) {
    const std::uint32_t M = spec.points;
    const std::size_t per = std::size_t(M + 1) * spec.dim;
    const std::size_t K = nodes.size();
    std::vector<double> sqrt_beta(K), span[3];
    for (int c = 0; c < 3; ++c) span[c].assign(K, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
        sqrt_beta[k] = std::sqrt(nodes[k].beta);
        for (std::uint32_t c = 0; c < se.dim; ++c)
            span[c][k] = nodes[k].box.hi[c] - nodes[k].box.lo[c];
    }

    std::vector<std::vector<ShellMass>> shells(
        static_cast<std::size_t>(workers));
    std::atomic<std::uint64_t> cursor{0};
    std::mutex err_mutex;
    std::exception_ptr err;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                LoopReader::Stream st;
                reader.open(st);
                LoopScratch scratch;
                scratch.u.resize(per);
                std::vector<ShellMass>& shell = shells[static_cast<std::size_t>(w)];
                shell.assign(K, ShellMass{});
                const double inv_x = 1.0 / double(x_samples);
                for (;;) {
                    const std::uint64_t i = cursor.fetch_add(1);
                    if (i >= spec.count) break;
                    reader.load(st, i, scratch.u);
                    prepare_loop(se, M, scratch);
                    for (std::size_t k = 0; k < K; ++k) {
                        double* fine = out_fine + i * ncols + col0 + k;
                        double* coarse = out_coarse + i * ncols + col0 + k;
                        if (nodes[k].empty) {
                            *fine = 0.0;
                            *coarse = 0.0;
                            continue;
                        }
                        const double beta = nodes[k].beta;
                        const double sb = sqrt_beta[k];
                        const std::uint64_t beta_bits =
                            std::bit_cast<std::uint64_t>(beta);
                        double sum_f = 0.0, sum_c = 0.0;
                        for (std::uint32_t r = 0; r < x_samples; ++r) {
                            Vec3 x{};
                            bool in_shell = false;
                            for (std::uint32_t c = 0; c < se.dim; ++c) {
                                const double t = uniform(
                                    spec.seed, kTagBasePoint, i, beta_bits,
                                    (std::uint64_t(r) << 3) | c);
                                x[c] = nodes[k].box.lo[c] + t * span[c][k];
                                if (t < 0.1 || t > 0.9) in_shell = true;
                            }
                            const double kf =
                                eval_kill(se, scratch, M, 0, x, beta, sb);
                            sum_f += kf;
                            sum_c += eval_kill(se, scratch, M, 1, x, beta, sb);
                            shell[k].total += kf;
                            if (in_shell) shell[k].shell += kf;
                        }
                        *fine = sum_f * inv_x;
                        *coarse = sum_c * inv_x;
                    }
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
    if (shell_out) {
        shell_out->assign(K, ShellMass{});
        // worker-index order: deterministic for a fixed worker count
        for (int w = 0; w < workers; ++w)
            for (std::size_t k = 0; k < K; ++k) {
                (*shell_out)[k].shell += shells[static_cast<std::size_t>(w)][k].shell;
                (*shell_out)[k].total += shells[static_cast<std::size_t>(w)][k].total;
            }
    }
}

// ------------------------------------------------------------- sampling box

// reach distance: a loop planted at x can touch the object only if x lies
// within pad of it (plus the potential's own support halfwidth)
double reach_pad(const Object& o, double pad) {
    if (o.interaction.dirichlet) return pad;
    if (const auto* pl = std::get_if<Hyperplane>(&o.shape)) {
        (void)pl;
        if (o.interaction.profile == PotentialProfile::gaussian)
            return pad + 8.0 * o.interaction.width; // exp(-32) occupation cut
        return pad + 0.5 * o.interaction.width;
    }
    return pad;
}

struct SlabConstraint { // |n . x - b| <= r
    Vec3 normal{};
    double offset = 0.0;
    double radius = 0.0;
};

// bounding box of the intersection of slabs by vertex enumeration (d <= 3);
// returns nullopt when the intersection is empty
std::optional<BoxShape> slab_intersection_bbox(
    const std::vector<SlabConstraint>& slabs, std::uint32_t dim) {
    struct Face {
        Vec3 n{};
        double b = 0.0;
    };
    std::vector<Face> faces;
    double scale = 1.0;
    for (const auto& s : slabs) {
        faces.push_back({s.normal, s.offset + s.radius});
        faces.push_back({s.normal, s.offset - s.radius});
        scale = std::max({scale, std::abs(s.offset) + s.radius});
    }
    const double tol = 1e-9 * scale;
    const auto feasible = [&](const Vec3& x) {
        for (const auto& s : slabs) {
            const double f = dot(s.normal, x, dim) - s.offset;
            if (std::abs(f) > s.radius + tol) return false;
        }
        return true;
    };
    BoxShape out;
    for (std::uint32_t c = 0; c < 3; ++c) {
        out.lo[c] = std::numeric_limits<double>::infinity();
        out.hi[c] = -std::numeric_limits<double>::infinity();
    }
    bool any = false;
    const std::size_t F = faces.size();
    std::array<std::size_t, 3> pick{};
    const std::function<void(std::uint32_t, std::size_t)> recurse =
        [&](std::uint32_t depth, std::size_t from) {
            if (depth == dim) {
                // solve the dim x dim system n_i . x = b_i
                double a[3][4] = {};
                for (std::uint32_t r = 0; r < dim; ++r) {
                    for (std::uint32_t c = 0; c < dim; ++c)
                        a[r][c] = faces[pick[r]].n[c];
                    a[r][dim] = faces[pick[r]].b;
                }
                for (std::uint32_t col = 0; col < dim; ++col) {
                    std::uint32_t piv = col;
                    for (std::uint32_t r = col + 1; r < dim; ++r)
                        if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
                    if (std::abs(a[piv][col]) < 1e-12) return;
                    for (std::uint32_t c = 0; c <= dim; ++c)
                        std::swap(a[col][c], a[piv][c]);
                    for (std::uint32_t r = 0; r < dim; ++r) {
                        if (r == col) continue;
                        const double f = a[r][col] / a[col][col];
                        for (std::uint32_t c = col; c <= dim; ++c)
                            a[r][c] -= f * a[col][c];
                    }
                }
                Vec3 x{};
                for (std::uint32_t r = 0; r < dim; ++r)
                    x[r] = a[r][dim] / a[r][r];
                if (!feasible(x)) return;
                any = true;
                for (std::uint32_t c = 0; c < dim; ++c) {
                    out.lo[c] = std::min(out.lo[c], x[c]);
                    out.hi[c] = std::max(out.hi[c], x[c]);
                }
                return;
            }
            for (std::size_t f = from; f < F; ++f) {
                pick[depth] = f;
                recurse(depth + 1, f + 1);
            }
        };
    recurse(0, 0);
    if (!any) return std::nullopt;
    for (std::uint32_t c = dim; c < 3; ++c) out.lo[c] = out.hi[c] = 0.0;
    return out;
}

std::optional<BoxShape> clip_box(const BoxShape& a, const BoxShape& b,
                                 std::uint32_t dim) {
    BoxShape out = a;
    for (std::uint32_t c = 0; c < dim; ++c) {
        out.lo[c] = std::max(a.lo[c], b.lo[c]);
        out.hi[c] = std::min(a.hi[c], b.hi[c]);
        if (out.lo[c] > out.hi[c]) return std::nullopt;
    }
    return out;
}

double box_volume(const BoxShape& b, std::uint32_t dim) {
    double v = 1.0;
    for (std::uint32_t c = 0; c < dim; ++c) v *= b.hi[c] - b.lo[c];
    return v;
}

} // namespace

std::optional<BoxShape> sampling_box(const Scene& scene, double beta,
                                     double max_radius) {
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
    const std::uint32_t dim = scene.dim;
    const double pad = 5.0 * std::sqrt(beta) * max_radius;

    bool all_bounded = true;
    for (const Object& o : scene.objects)
        if (!finite_bbox(o.shape, dim)) all_bounded = false;

    std::optional<BoxShape> box;
    if (all_bounded) {
        // union bounding box of the objects, padded per axis
        BoxShape u;
        for (std::uint32_t c = 0; c < 3; ++c) {
            u.lo[c] = std::numeric_limits<double>::infinity();
            u.hi[c] = -std::numeric_limits<double>::infinity();
        }
        for (const Object& o : scene.objects) {
            const BoxShape bb = *finite_bbox(o.shape, dim);
            for (std::uint32_t c = 0; c < dim; ++c) {
                u.lo[c] = std::min(u.lo[c], bb.lo[c]);
                u.hi[c] = std::max(u.hi[c], bb.hi[c]);
            }
        }
        for (std::uint32_t c = 0; c < dim; ++c) {
            u.lo[c] -= pad;
            u.hi[c] += pad;
        }
        for (std::uint32_t c = dim; c < 3; ++c) u.lo[c] = u.hi[c] = 0.0;
        box = u;
    } else {
        // a loop is killed by every object only if its base point is within
        // reach of each one; intersect the per-object reach regions.
        std::vector<SlabConstraint> slabs;
        for (const Object& o : scene.objects) {
            const double r = reach_pad(o, pad);
            if (const auto* pl = std::get_if<Hyperplane>(&o.shape)) {
                slabs.push_back({pl->normal, pl->offset, r});
            } else {
                const BoxShape bb = *finite_bbox(o.shape, dim);
                for (std::uint32_t c = 0; c < dim; ++c) {
                    Vec3 n{};
                    n[c] = 1.0;
                    slabs.push_back({n, 0.5 * (bb.lo[c] + bb.hi[c]),
                                     0.5 * (bb.hi[c] - bb.lo[c]) + r});
                }
            }
        }
        if (scene.domain) {
            for (std::uint32_t c = 0; c < dim; ++c) {
                Vec3 n{};
                n[c] = 1.0;
                slabs.push_back({n, 0.5 * (scene.domain->lo[c] + scene.domain->hi[c]),
                                 0.5 * (scene.domain->hi[c] - scene.domain->lo[c])});
            }
        }
        // bounded iff the slab normals span R^dim: Gram-style rank check
        {
            double rows[3][3] = {};
            std::uint32_t rank = 0;
            for (const auto& s : slabs) {
                double v[3] = {s.normal[0], s.normal[1], s.normal[2]};
                for (std::uint32_t r = 0; r < rank; ++r) {
                    double proj = 0.0;
                    for (std::uint32_t c = 0; c < dim; ++c) proj += v[c] * rows[r][c];
                    for (std::uint32_t c = 0; c < dim; ++c) v[c] -= proj * rows[r][c];
                }
                double norm = 0.0;
                for (std::uint32_t c = 0; c < dim; ++c) norm += v[c] * v[c];
                norm = std::sqrt(norm);
                if (norm > 1e-9) {
                    for (std::uint32_t c = 0; c < dim; ++c) rows[rank][c] = v[c] / norm;
                    if (++rank == dim) break;
                }
            }
            if (rank < dim) throw std::runtime_error("sampling box unbounded");
        }
        box = slab_intersection_bbox(slabs, dim);
        if (!box) return std::nullopt; // reach regions do not overlap
    }
    if (scene.domain) {
        box = clip_box(*box, *scene.domain, dim);
        if (!box) return std::nullopt;
    }
    for (std::uint32_t c = 0; c < dim; ++c)
        if (!(box->hi[c] > box->lo[c])) return std::nullopt;
    return box;
}

namespace {

// shared driver: evaluates a batch of nodes and produces one SpectralEstimate
// per node plus, on request, the per-loop matrices for energy assembly
struct BatchResult {
    std::vector<SpectralEstimate> estimates;
};

SpectralEstimate finish_node(const SceneEval& se, const BetaNode& node,
                             const EngineConfig& config, std::uint64_t L,
                             const double* fine, const double* coarse,
                             std::size_t ncols, std::size_t col,
                             std::vector<double>& scratch) {
    SpectralEstimate est;
    est.beta = node.beta;
    est.n_loops = L;
    est.n_basepoints = L * config.x_samples;
    est.sampling_box = node.box;
    est.box_volume = node.empty ? 0.0 : node.volume;
    if (node.empty) return est;

    const double c0 = se.sign *
                      std::pow(2.0 * kPi * node.beta, -0.5 * double(se.dim)) *
                      node.volume;
    double mean_f = 0.0, mean_c = 0.0;
    scratch.resize(L);
    for (std::uint64_t j = 0; j < L; ++j) {
        const double vf = fine[j * ncols + col];
        const double vc = coarse[j * ncols + col];
        mean_f += vf;
        mean_c += vc;
        scratch[j] = c0 * (config.extrapolate
                               ? vf + (vf - vc) / se.extrap_denom
                               : vf);
    }
    mean_f /= double(L);
    mean_c /= double(L);
    est.value_fine = c0 * mean_f;
    est.value_coarse = c0 * mean_c;
    const MeanErr me = jackknife_mean(scratch);
    est.value = me.mean;
    est.stderr_ = me.stderr_;
    return est;
}

void check_shell(const SceneEval& se, std::span<const BetaNode> nodes,
                 const std::vector<ShellMass>& shell) {
    if (!se.any_unbounded || se.scene->domain) return;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        if (nodes[k].empty || shell[k].total <= 0.0) continue;
        if (shell[k].shell > 0.05 * shell[k].total)
            throw std::runtime_error("sampling box unbounded");
    }
}

BetaNode make_node(const Scene& scene, double beta, double max_radius) {
    BetaNode node;
    node.beta = beta;
    if (auto box = sampling_box(scene, beta, max_radius)) {
        node.box = *box;
        node.volume = box_volume(*box, scene.dim);
        node.empty = node.volume <= 0.0;
    }
    return node;
}

// upper incomplete gamma for the half-integer orders used by the low-beta
// truncation bound: a = (d+1)/2 for d = 1, 2, 3
double upper_gamma_half(std::uint32_t d, double z) {
    switch (d) {
    case 1: return std::exp(-z);
    case 2: return 0.5 * std::sqrt(kPi) * std::erfc(std::sqrt(z)) +
                   std::sqrt(z) * std::exp(-z);
    default: return (1.0 + z) * std::exp(-z);
    }
}

} // namespace

MeanErr estimate_kill_probability(const Scene& scene,
                                  const LoopEnsembleSpec& ensemble,
                                  const Vec3& x, double beta, bool extrapolate,
                                  std::uint32_t workers) {
    const SceneEval se = analyze(scene);
    if (ensemble.dim != scene.dim)
        throw std::invalid_argument("ensemble dimension does not match scene");
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
    check_pair_spec(ensemble.count, ensemble.points);
    const int nw = worker_count(workers);
    const LoopReader reader(ensemble, std::string());
    const std::uint64_t L = ensemble.count;
    const std::uint32_t M = ensemble.points;
    const std::size_t per = std::size_t(M + 1) * ensemble.dim;
    std::vector<double> fine(L), coarse(L);
    const double sb = std::sqrt(beta);

    std::atomic<std::uint64_t> cursor{0};
    std::mutex err_mutex;
    std::exception_ptr err;
    std::vector<std::thread> pool;
    for (int w = 0; w < nw; ++w) {
        pool.emplace_back([&] {
            try {
                LoopReader::Stream st;
                LoopScratch scratch;
                scratch.u.resize(per);
                for (;;) {
                    const std::uint64_t i = cursor.fetch_add(1);
                    if (i >= L) break;
                    reader.load(st, i, scratch.u);
                    prepare_loop(se, M, scratch);
                    fine[i] = eval_kill(se, scratch, M, 0, x, beta, sb);
                    coarse[i] = eval_kill(se, scratch, M, 1, x, beta, sb);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);

    std::vector<double> values(L);
    for (std::uint64_t j = 0; j < L; ++j)
        values[j] = extrapolate
                        ? fine[j] + (fine[j] - coarse[j]) / se.extrap_denom
                        : fine[j];
    return jackknife_mean(values);
}

SpectralEstimate estimate_spectral(const Scene& scene, double beta,
                                   const EngineConfig& config) {
    const SceneEval se = analyze(scene);
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
    check_pair_spec(config.n_loops, config.points);
    if (config.x_samples == 0)
        throw std::invalid_argument("x_samples must be positive");
    LoopEnsembleSpec spec{config.n_loops, config.points, scene.dim,
                          config.seed, config.scheme};
    const LoopReader reader(spec, config.loop_cache);
    const int nw = worker_count(config.workers);
    const double radius = ensemble_max_radius(reader, spec, nw);

    std::vector<BetaNode> nodes{make_node(scene, beta, radius)};
    const std::uint64_t L = spec.count;
    std::vector<double> fine(L), coarse(L);
    std::vector<ShellMass> shell;
    spectral_pass(se, spec, reader, config.x_samples, nw, nodes, 0, 1,
                  fine.data(), coarse.data(), &shell);
    check_shell(se, nodes, shell);
    std::vector<double> scratch;
    return finish_node(se, nodes[0], config, L, fine.data(), coarse.data(), 1,
                       0, scratch);
}

namespace {

struct GridPlan {
    std::vector<double> nodes; // ascending
    bool adaptive = true;
};

GridPlan plan_grid(const EngineConfig& config, double lmin, std::uint32_t dim) {
    GridPlan plan;
    const std::uint32_t npd = std::max<std::uint32_t>(config.nodes_per_decade, 2);
    if (config.beta_min > 0.0 && config.beta_max > config.beta_min) {
        const double decades = std::log10(config.beta_max / config.beta_min);
        const std::uint32_t n =
            config.beta_nodes >= 3
                ? config.beta_nodes
                : std::max<std::uint32_t>(
                      3, static_cast<std::uint32_t>(std::ceil(decades * npd)) + 1);
        for (std::uint32_t i = 0; i < n; ++i)
            plan.nodes.push_back(config.beta_min *
                                 std::pow(config.beta_max / config.beta_min,
                                          double(i) / double(n - 1)));
        plan.adaptive = false;
        return plan;
    }
    if (!(lmin > 0.0))
        throw std::invalid_argument(
            "automatic beta grid needs a positive shortest-path length");
    // envelope exp(-l^2/(2 beta)) beta^(-(d+1)/2): peak at l^2/(d+1), lower
    // edge where the envelope has fallen by 1e-8
    const double p = 0.5 * double(dim + 1);
    const double beta_peak = lmin * lmin / (2.0 * p);
    const auto log_env = [&](double b) {
        return -lmin * lmin / (2.0 * b) - p * std::log(b);
    };
    const double target = log_env(beta_peak) - std::log(1e8);
    double lo = beta_peak * 1e-12, hi = beta_peak;
    for (int it = 0; it < 200; ++it) {
        const double mid = std::sqrt(lo * hi);
        if (log_env(mid) < target)
            lo = mid;
        else
            hi = mid;
    }
    const double beta_min = lo;
    const double beta_max = std::max({100.0 * beta_min, 4.0 * beta_peak,
                                      2.0 * lmin * lmin});
    const double decades = std::log10(beta_max / beta_min);
    const std::uint32_t n = std::max<std::uint32_t>(
        3, static_cast<std::uint32_t>(std::ceil(decades * npd)) + 1);
    for (std::uint32_t i = 0; i < n; ++i)
        plan.nodes.push_back(beta_min * std::pow(beta_max / beta_min,
                                                 double(i) / double(n - 1)));
    return plan;
}

// quadrature state rebuilt each time the grid grows
struct Assembly {
    std::vector<double> weights;    // d(beta) trapezoid weights
    std::vector<double> node_coeff; // full per-node factor for the energy sum
    double energy(std::span<const double> phi) const {
        double e = 0.0;
        for (std::size_t k = 0; k < phi.size(); ++k) e += node_coeff[k] * phi[k];
        return e;
    }
};

Assembly assemble(const std::vector<double>& betas) {
    Assembly a;
    const std::vector<double> logw = log_trapezoid_weights(betas);
    a.weights.resize(betas.size());
    a.node_coeff.resize(betas.size());
    const double front = -1.0 / std::sqrt(8.0 * kPi);
    for (std::size_t k = 0; k < betas.size(); ++k) {
        a.weights[k] = logw[k] * betas[k];
        a.node_coeff[k] = front * a.weights[k] * std::pow(betas[k], -1.5);
    }
    return a;
}

} // namespace

EnergyResult integrate_energy(const Scene& scene, const EngineConfig& config) {
    const SceneEval se = analyze(scene);
    switch (verify_empty_common_intersection(scene)) {
    case IntersectionCheck::empty:
        break;
    case IntersectionCheck::nonempty:
        throw std::invalid_argument(
            "objects share a common point: the subtracted energy diverges");
    case IntersectionCheck::undecidable:
        if (!config.acknowledge_undecidable)
            throw std::invalid_argument(
                "cannot certify an empty common intersection; pass "
                "acknowledge_undecidable to proceed");
        break;
    }

    check_pair_spec(config.n_loops, config.points);
    if (config.x_samples == 0)
        throw std::invalid_argument("x_samples must be positive");
    const LminResult lmin = estimate_lmin(scene);
    LoopEnsembleSpec spec{config.n_loops, config.points, scene.dim,
                          config.seed, config.scheme};
    const LoopReader reader(spec, config.loop_cache);
    const int nw = worker_count(config.workers);
    const double radius = ensemble_max_radius(reader, spec, nw);
    const std::uint64_t L = spec.count;
    const std::uint32_t npd = std::max<std::uint32_t>(config.nodes_per_decade, 2);

    GridPlan plan = plan_grid(config, lmin.value, scene.dim);
    std::vector<BetaNode> nodes;
    for (double b : plan.nodes) nodes.push_back(make_node(scene, b, radius));

    // per-loop kill means, rows = loops, columns = beta nodes; grown on the
    // right when the adaptive tail adds decades
    std::vector<double> fine, coarse;
    std::size_t ncols = 0;
    const auto run_batch = [&](std::size_t col0) {
        const std::size_t fresh = nodes.size() - col0;
        if (fresh == 0) return;
        const std::size_t new_cols = nodes.size();
        std::vector<double> nf(L * new_cols, 0.0), nc(L * new_cols, 0.0);
        for (std::uint64_t j = 0; j < L && ncols; ++j) {
            std::memcpy(&nf[j * new_cols], &fine[j * ncols], ncols * sizeof(double));
            std::memcpy(&nc[j * new_cols], &coarse[j * ncols], ncols * sizeof(double));
        }
        fine.swap(nf);
        coarse.swap(nc);
        ncols = new_cols;
        std::vector<ShellMass> shell;
        spectral_pass(se, spec, reader, config.x_samples, nw,
                      std::span<const BetaNode>(nodes).subspan(col0), col0,
                      ncols, fine.data(), coarse.data(), &shell);
        std::vector<BetaNode> fresh_nodes(nodes.begin() + long(col0), nodes.end());
        check_shell(se, fresh_nodes, shell);
    };
    run_batch(0);

    // adaptive tail: extend by whole decades until the last decade and the
    // power-law tail estimate both drop below 0.5% of the running total
    const double max_beta = plan.nodes.front() * 1e14;
    double tail_high = 0.0;
    std::vector<double> scratch;
    for (;;) {
        // per-node extrapolated means
        std::vector<double> phi(nodes.size()), sigma(nodes.size());
        std::vector<SpectralEstimate> table(nodes.size());
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            table[k] = finish_node(se, nodes[k], config, L, fine.data(),
                                   coarse.data(), ncols, k, scratch);
            phi[k] = table[k].value;
            sigma[k] = table[k].stderr_;
        }
        std::vector<double> betas(nodes.size());
        for (std::size_t k = 0; k < nodes.size(); ++k) betas[k] = nodes[k].beta;
        const Assembly a = assemble(betas);
        const double total = a.energy(phi);

        // contribution of the last decade
        const double beta_hi = betas.back();
        double last_decade = 0.0;
        for (std::size_t k = 0; k < betas.size(); ++k)
            if (betas[k] > beta_hi / 10.0)
                last_decade += a.node_coeff[k] * phi[k];

        // power-law fit over the last decade: ln|phi| = ln C + s ln beta
        std::vector<double> lx, ly;
        for (std::size_t k = 0; k < betas.size(); ++k) {
            if (betas[k] <= beta_hi / 10.0) continue;
            if (std::abs(phi[k]) > 3.0 * sigma[k] && std::abs(phi[k]) > 1e-300) {
                lx.push_back(std::log(betas[k]));
                ly.push_back(std::log(std::abs(phi[k])));
            }
        }
        bool tail_ok = false;
        if (lx.size() < 2) {
            // the tail is below statistical resolution: bound it by the noise
            double sig = 0.0;
            for (std::size_t k = 0; k < betas.size(); ++k)
                if (betas[k] > beta_hi / 10.0) sig = std::max(sig, sigma[k]);
            tail_high = (1.0 / std::sqrt(8.0 * kPi)) * 3.0 * sig * 2.0 /
                        std::sqrt(beta_hi);
            tail_ok = true;
        } else {
            const LinearFit f = fit_line(lx, ly);
            const double s = f.slope;
            if (s < 0.45) {
                const double c_at_hi = std::exp(f.intercept + s * std::log(beta_hi));
                tail_high = (1.0 / std::sqrt(8.0 * kPi)) * c_at_hi *
                            std::pow(beta_hi, -0.5) / (0.5 - s);
                tail_ok = true;
            }
        }

        const double floor_ref = std::max(std::abs(total), 1e-300);
        const bool decade_ok = std::abs(last_decade) < 0.005 * floor_ref;
        const bool tail_small = tail_ok && tail_high < 0.005 * floor_ref;
        if (!plan.adaptive || (decade_ok && tail_small)) {
            if (!tail_ok) // confident fit that fails to decay
                throw std::runtime_error("tail not converged");

            // ---- final assembly ----
            EnergyResult out;
            out.spectral = std::move(table);
            out.weights = a.weights;
            out.lmin = lmin.value;
            out.lmin_approximate = lmin.approximate;
            out.scene_hash = scene_hash(scene);
            out.seed = config.seed;
            out.n_loops = L;
            out.points = config.points;
            out.workers = static_cast<std::uint32_t>(nw);
            out.value = total;

            // statistical error: jackknife of the full quadrature sum
            {
                std::vector<double> ej(L, 0.0);
                for (std::size_t k = 0; k < nodes.size(); ++k) {
                    if (nodes[k].empty) continue;
                    const double c0 =
                        se.sign *
                        std::pow(2.0 * kPi * nodes[k].beta, -0.5 * double(se.dim)) *
                        nodes[k].volume;
                    const double g = a.node_coeff[k] * c0;
                    for (std::uint64_t j = 0; j < L; ++j) {
                        const double vf = fine[j * ncols + k];
                        const double vc = coarse[j * ncols + k];
                        const double v =
                            config.extrapolate
                                ? vf + (vf - vc) / se.extrap_denom
                                : vf;
                        ej[j] += g * v;
                    }
                }
                const MeanErr me = jackknife_mean(ej);
                out.stat_error = me.stderr_;
            }

            // discretization: gap between the two refinement levels
            {
                std::vector<double> phi_f(nodes.size()), phi_c(nodes.size());
                for (std::size_t k = 0; k < nodes.size(); ++k) {
                    phi_f[k] = out.spectral[k].value_fine;
                    phi_c[k] = out.spectral[k].value_coarse;
                }
                out.discretization_error =
                    std::abs(a.energy(phi_f) - a.energy(phi_c));
            }

            // quadrature error: low-end truncation bound, power-law tail,
            // and the change under node-halving
            {
                const double beta_min = betas.front();
                const double z = lmin.value > 0.0
                                     ? lmin.value * lmin.value / (2.0 * beta_min)
                                     : 0.0;
                double t_low = 0.0;
                if (z > 0.0) {
                    const double vol0 =
                        nodes.front().empty ? 0.0 : nodes.front().volume;
                    t_low = (1.0 / std::sqrt(8.0 * kPi)) * vol0 *
                            std::pow(2.0 * kPi, -0.5 * double(scene.dim)) *
                            std::pow(2.0 / (lmin.value * lmin.value),
                                     0.5 * double(scene.dim + 1)) *
                            upper_gamma_half(scene.dim, z);
                }
                out.tail_low = t_low;
                out.tail_high = tail_high;

                double halving = 0.0;
                if (betas.size() >= 5) {
                    std::vector<double> hb, hphi;
                    for (std::size_t k = 0; k < betas.size(); k += 2) {
                        hb.push_back(betas[k]);
                        hphi.push_back(phi[k]);
                    }
                    if (hb.back() != betas.back()) {
                        hb.push_back(betas.back());
                        hphi.push_back(phi.back());
                    }
                    const Assembly ah = assemble(hb);
                    halving = std::abs(total - ah.energy(hphi)) / 3.0;
                }
                out.quadrature_error = t_low + tail_high + halving;
            }
            return out;
        }

        // extend by one decade
        if (beta_hi * 10.0 > max_beta)
            throw std::runtime_error("tail not converged");
        const std::size_t col0 = nodes.size();
        for (std::uint32_t i = 1; i <= npd; ++i)
            nodes.push_back(make_node(
                scene, beta_hi * std::pow(10.0, double(i) / double(npd)),
                radius));
        run_batch(col0);
    }
}

// ------------------------------------------------------------------- l_min

namespace {

Vec3 sub(const Vec3& a, const Vec3& b) {
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

double norm(const Vec3& v, std::uint32_t dim) {
    return std::sqrt(dot(v, v, dim));
}

// projection of y onto the object (nearest point of the shape's body)
Vec3 project_onto(const Shape& shape, const Vec3& y, std::uint32_t dim) {
    if (const auto* pl = std::get_if<Hyperplane>(&shape)) {
        const double f = dot(pl->normal, y, dim) - pl->offset;
        Vec3 p = y;
        for (std::uint32_t c = 0; c < dim; ++c) p[c] -= f * pl->normal[c];
        return p;
    }
    if (const auto* sp = std::get_if<Sphere>(&shape)) {
        Vec3 d = sub(y, sp->center);
        const double r = norm(d, dim);
        if (r <= sp->radius) return y;
        Vec3 p = sp->center;
        for (std::uint32_t c = 0; c < dim; ++c)
            p[c] += sp->radius * d[c] / r;
        return p;
    }
    if (const auto* bx = std::get_if<BoxShape>(&shape)) {
        Vec3 p = y;
        for (std::uint32_t c = 0; c < dim; ++c)
            p[c] = std::clamp(p[c], bx->lo[c], bx->hi[c]);
        return p;
    }
    const auto& sg = std::get<Segment>(shape);
    const Vec3 ab = sub(sg.b, sg.a);
    const double len2 = dot(ab, ab, dim);
    double t = len2 > 0.0 ? dot(sub(y, sg.a), ab, dim) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    Vec3 p = sg.a;
    for (std::uint32_t c = 0; c < dim; ++c) p[c] += t * ab[c];
    return p;
}

// minimize |p - a| + |p - b| over the shape.  Hyperplanes get the exact
// reflection solution; convex bodies run projected subgradient descent.
Vec3 best_touch(const Shape& shape, const Vec3& a, const Vec3& b,
                const Vec3& start, std::uint32_t dim, double scale) {
    if (const auto* pl = std::get_if<Hyperplane>(&shape)) {
        const double fa = dot(pl->normal, a, dim) - pl->offset;
        const double fb = dot(pl->normal, b, dim) - pl->offset;
        Vec3 target = b;
        double t;
        if (fa * fb <= 0.0) {
            // the straight segment crosses the plane
            t = (std::abs(fa) + std::abs(fb)) > 0.0
                    ? std::abs(fa) / (std::abs(fa) + std::abs(fb))
                    : 0.0;
        } else {
            for (std::uint32_t c = 0; c < dim; ++c)
                target[c] -= 2.0 * fb * pl->normal[c]; // mirror image of b
            t = std::abs(fa) + std::abs(fb) > 0.0
                    ? std::abs(fa) / (std::abs(fa) + std::abs(fb))
                    : 0.0;
        }
        Vec3 p{};
        for (std::uint32_t c = 0; c < dim; ++c)
            p[c] = a[c] + t * (target[c] - a[c]);
        return project_onto(shape, p, dim); // kill rounding drift off-plane
    }
    const auto cost = [&](const Vec3& p) {
        return norm(sub(p, a), dim) + norm(sub(p, b), dim);
    };
    Vec3 p = project_onto(shape, start, dim);
    double best = cost(p);
    Vec3 best_p = p;
    double step = 0.5 * scale;
    for (int it = 0; it < 120; ++it) {
        Vec3 g{};
        const Vec3 da = sub(p, a);
        const Vec3 db = sub(p, b);
        const double na = norm(da, dim), nb = norm(db, dim);
        for (std::uint32_t c = 0; c < dim; ++c) {
            if (na > 1e-15) g[c] += da[c] / na;
            if (nb > 1e-15) g[c] += db[c] / nb;
        }
        Vec3 y = p;
        for (std::uint32_t c = 0; c < dim; ++c) y[c] -= step * g[c];
        y = project_onto(shape, y, dim);
        const double cy = cost(y);
        if (cy < best) {
            best = cy;
            best_p = y;
            p = y;
        } else {
            step *= 0.6;
            p = best_p;
        }
        if (step < 1e-14 * scale) break;
    }
    return best_p;
}

double tour_length(const std::vector<Vec3>& p, std::uint32_t dim) {
    double len = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        len += norm(sub(p[(i + 1) % p.size()], p[i]), dim);
    return len;
}

} // namespace

LminResult estimate_lmin(const Scene& scene) {
    validate_scene(scene);
    const std::uint32_t dim = scene.dim;
    const int n = static_cast<int>(scene.objects.size());
    if (n == 1) {
        // the degenerate tour starts on the object and has zero length
        return {0.0, false};
    }

    // analytic family: hyperplanes grouped by parallel normals; when the
    // groups are mutually orthogonal the shortest closed tour is the
    // diagonal bounce orbit of length 2 sqrt(sum of squared spans)
    bool all_planes = true;
    for (const Object& o : scene.objects)
        if (!std::holds_alternative<Hyperplane>(o.shape)) all_planes = false;
    if (all_planes) {
        struct Group {
            Vec3 normal{};
            double lo = 0.0, hi = 0.0;
        };
        std::vector<Group> groups;
        for (const Object& o : scene.objects) {
            const auto& pl = std::get<Hyperplane>(o.shape);
            bool placed = false;
            for (Group& g : groups) {
                const double c = dot(g.normal, pl.normal, dim);
                if (std::abs(std::abs(c) - 1.0) < 1e-9) {
                    const double off = c > 0.0 ? pl.offset : -pl.offset;
                    g.lo = std::min(g.lo, off);
                    g.hi = std::max(g.hi, off);
                    placed = true;
                    break;
                }
            }
            if (!placed) groups.push_back({pl.normal, pl.offset, pl.offset});
        }
        bool orthogonal = true;
        for (std::size_t i = 0; i < groups.size() && orthogonal; ++i)
            for (std::size_t j = i + 1; j < groups.size(); ++j)
                if (std::abs(dot(groups[i].normal, groups[j].normal, dim)) >
                    1e-9) {
                    orthogonal = false;
                    break;
                }
        if (orthogonal) {
            double sum2 = 0.0;
            for (const Group& g : groups) {
                const double span = g.hi - g.lo;
                sum2 += span * span;
            }
            return {2.0 * std::sqrt(sum2), false};
        }
    }

    // numerical upper bound: minimize the closed tour over one touch point
    // per object, over visiting orders, with multi-start coordinate descent
    Vec3 anchor_lo{}, anchor_hi{};
    for (std::uint32_t c = 0; c < 3; ++c) {
        anchor_lo[c] = std::numeric_limits<double>::infinity();
        anchor_hi[c] = -std::numeric_limits<double>::infinity();
    }
    for (const Object& o : scene.objects) {
        Vec3 p{};
        if (const auto* pl = std::get_if<Hyperplane>(&o.shape)) {
            for (std::uint32_t c = 0; c < dim; ++c)
                p[c] = pl->offset * pl->normal[c];
        } else {
            const BoxShape bb = *finite_bbox(o.shape, dim);
            for (std::uint32_t c = 0; c < dim; ++c)
                p[c] = 0.5 * (bb.lo[c] + bb.hi[c]);
        }
        for (std::uint32_t c = 0; c < dim; ++c) {
            anchor_lo[c] = std::min(anchor_lo[c], p[c]);
            anchor_hi[c] = std::max(anchor_hi[c], p[c]);
        }
    }
    double scale = 1.0;
    for (std::uint32_t c = 0; c < dim; ++c)
        scale = std::max(scale, anchor_hi[c] - anchor_lo[c]);

    std::vector<std::vector<int>> orders;
    if (n <= 7) {
        std::vector<int> perm(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
        do {
            // fix the first element and drop reversals
            if (n > 2 && perm[1] > perm[static_cast<std::size_t>(n - 1)])
                continue;
            orders.push_back(perm);
        } while (std::next_permutation(perm.begin() + 1, perm.end()));
    } else {
        std::vector<int> ident(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) ident[static_cast<std::size_t>(i)] = i;
        orders.push_back(ident);
    }

    double best = std::numeric_limits<double>::infinity();
    for (const auto& order : orders) {
        std::vector<const Shape*> shapes(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            shapes[std::size_t(i)] =
                &scene.objects[std::size_t(order[std::size_t(i)])].shape;
        for (int start = 0; start < 20; ++start) {
            std::vector<Vec3> p(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) {
                Vec3 y{};
                for (std::uint32_t c = 0; c < dim; ++c) {
                    const double t = uniform(kLminSeed, kTagTourStart,
                                             std::uint64_t(start),
                                             std::uint64_t(i), c);
                    y[c] = anchor_lo[c] - scale +
                           t * ((anchor_hi[c] + scale) - (anchor_lo[c] - scale));
                }
                p[std::size_t(i)] = project_onto(*shapes[std::size_t(i)], y, dim);
            }
            double len = tour_length(p, dim);
            for (int sweep = 0; sweep < 400; ++sweep) {
                for (int i = 0; i < n; ++i) {
                    const Vec3& prev = p[std::size_t((i + n - 1) % n)];
                    const Vec3& next = p[std::size_t((i + 1) % n)];
                    p[std::size_t(i)] = best_touch(*shapes[std::size_t(i)], prev,
                                                   next, p[std::size_t(i)], dim,
                                                   scale);
                }
                const double now = tour_length(p, dim);
                const bool settled = len - now < 1e-13 * scale;
                len = now;
                if (settled) break;
            }
            best = std::min(best, len);
        }
    }
    return {best, true};
}

} // namespace wlc
