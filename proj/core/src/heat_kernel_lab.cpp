#include "wlc/heat_kernel_lab.hpp"

#include <lapacke.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "wlc/stats.hpp"

namespace wlc {

namespace {

constexpr double kPi = std::numbers::pi;

double point_segment_dist2(const Vec3& p, const Vec3& a, const Vec3& b) {
    const double abx = b[0] - a[0], aby = b[1] - a[1];
    const double len2 = abx * abx + aby * aby;
    double t = 0.0;
    if (len2 > 0.0)
        t = std::clamp(((p[0] - a[0]) * abx + (p[1] - a[1]) * aby) / len2, 0.0,
                       1.0);
    const double dx = p[0] - (a[0] + t * abx), dy = p[1] - (a[1] + t * aby);
    return dx * dx + dy * dy;
}

// thin shapes are realized one node thick so walls stay sealed on the
// 4-neighbor graph: any grid edge crossing them loses an endpoint
bool node_removed(const Object& obj, const Vec3& p, std::uint32_t dim,
                  double hmax) {
    if (const auto* h = std::get_if<Hyperplane>(&obj.shape))
        return std::abs(dot(h->normal, p, dim) - h->offset) <= 0.5 * hmax;
    if (const auto* s = std::get_if<Segment>(&obj.shape))
        return point_segment_dist2(p, s->a, s->b) <= 0.25 * hmax * hmax;
    if (const auto* sp = std::get_if<Sphere>(&obj.shape)) {
        double d2 = 0.0;
        for (std::uint32_t c = 0; c < dim; ++c)
            d2 += (p[c] - sp->center[c]) * (p[c] - sp->center[c]);
        return d2 <= sp->radius * sp->radius;
    }
    const auto& b = std::get<BoxShape>(obj.shape);
    for (std::uint32_t c = 0; c < dim; ++c)
        if (p[c] < b.lo[c] || p[c] > b.hi[c]) return false;
    return true;
}

Vec3 node_point(const LabGrid& g, std::uint32_t i, std::uint32_t j) {
    Vec3 p{};
    p[0] = g.lo[0] + (double(i) + 1.0) * g.h[0];
    if (g.dim == 2) p[1] = g.lo[1] + (double(j) + 1.0) * g.h[1];
    return p;
}

LabGrid make_grid(const Scene& scene, SubsetMask subset,
                  const GridConfig& cfg) {
    validate_scene(scene);
    if (scene.dim > 2)
        throw std::invalid_argument("lab supports 1d and 2d scenes only");
    if (!scene.domain)
        throw std::invalid_argument("lab requires a finite bounding box");
    if (subset >= (SubsetMask(1) << scene.objects.size()))
        throw std::invalid_argument("subset mask out of range");
    if (cfg.points < 3)
        throw std::invalid_argument("grid needs at least 3 interior nodes");

    LabGrid g;
    g.dim = scene.dim;
    std::uint64_t total = 1;
    for (std::uint32_t c = 0; c < scene.dim; ++c) {
        g.n[c] = cfg.points;
        g.lo[c] = scene.domain->lo[c];
        g.h[c] = (scene.domain->hi[c] - scene.domain->lo[c]) /
                 (double(cfg.points) + 1.0);
        total *= g.n[c];
    }
    if (total > kMaxLabPoints) throw std::invalid_argument("grid too large");

    const double hmax = std::max(g.h[0], scene.dim == 2 ? g.h[1] : 0.0);
    g.compact.assign(total, -1);
    std::int32_t next = 0;
    const std::uint32_t nj = g.dim == 2 ? g.n[1] : 1;
    for (std::uint32_t j = 0; j < nj; ++j)
        for (std::uint32_t i = 0; i < g.n[0]; ++i) {
            const Vec3 p = node_point(g, i, j);
            bool removed = false;
            for (std::size_t o = 0; o < scene.objects.size() && !removed; ++o) {
                if (!(subset & (SubsetMask(1) << o))) continue;
                const Object& obj = scene.objects[o];
                if (obj.interaction.dirichlet)
                    removed = node_removed(obj, p, g.dim, hmax);
            }
            if (!removed) g.compact[std::size_t(j) * g.n[0] + i] = next++;
        }
    g.kept = std::uint32_t(next);
    return g;
}

} // namespace

EigenSystem build_eigensystem(const Scene& scene, SubsetMask subset,
                              const GridConfig& cfg, bool with_vectors) {
    EigenSystem sys;
    sys.grid = make_grid(scene, subset, cfg);
    sys.subset = subset;
    const LabGrid& g = sys.grid;
    const std::uint32_t n = g.kept;
    if (n == 0) return sys; // objects swallowed the box; empty spectrum

    auto diagonal_at = [&](std::uint32_t i, std::uint32_t j) {
        double d = 1.0 / (g.h[0] * g.h[0]);
        if (g.dim == 2) d += 1.0 / (g.h[1] * g.h[1]);
        const Vec3 p = node_point(g, i, j);
        for (std::size_t o = 0; o < scene.objects.size(); ++o) {
            if (!(subset & (SubsetMask(1) << o))) continue;
            const Object& obj = scene.objects[o];
            if (!obj.interaction.dirichlet)
                d += potential_value(obj, p, g.dim);
        }
        return d;
    };

    lapack_int info = 0;
    if (g.dim == 1) {
        std::vector<double> d(n), e(n > 1 ? n - 1 : 1, 0.0);
        for (std::uint32_t i = 0; i < g.n[0]; ++i) {
            const std::int32_t c = g.compact[i];
            if (c < 0) continue;
            d[std::size_t(c)] = diagonal_at(i, 0);
            if (i + 1 < g.n[0] && g.compact[i + 1] == c + 1)
                e[std::size_t(c)] = -0.5 / (g.h[0] * g.h[0]);
        }
        if (with_vectors) sys.vectors.assign(std::size_t(n) * n, 0.0);
        info = LAPACKE_dstev(LAPACK_COL_MAJOR, with_vectors ? 'V' : 'N',
                             lapack_int(n), d.data(), e.data(),
                             with_vectors ? sys.vectors.data() : nullptr,
                             lapack_int(n));
        sys.values = std::move(d);
    } else {
        std::vector<double> a(std::size_t(n) * n, 0.0);
        const double cx = -0.5 / (g.h[0] * g.h[0]);
        const double cy = -0.5 / (g.h[1] * g.h[1]);
        for (std::uint32_t j = 0; j < g.n[1]; ++j)
            for (std::uint32_t i = 0; i < g.n[0]; ++i) {
                const std::int32_t c = g.compact[std::size_t(j) * g.n[0] + i];
                if (c < 0) continue;
                a[std::size_t(c) * n + c] = diagonal_at(i, j);
                if (i + 1 < g.n[0]) {
                    const std::int32_t r = g.compact[std::size_t(j) * g.n[0] + i + 1];
                    if (r >= 0) {
                        a[std::size_t(c) * n + r] = cx;
                        a[std::size_t(r) * n + c] = cx;
                    }
                }
                if (j + 1 < g.n[1]) {
                    const std::int32_t r =
                        g.compact[std::size_t(j + 1) * g.n[0] + i];
                    if (r >= 0) {
                        a[std::size_t(c) * n + r] = cy;
                        a[std::size_t(r) * n + c] = cy;
                    }
                }
            }
        sys.values.assign(n, 0.0);
        info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, with_vectors ? 'V' : 'N', 'L',
                              lapack_int(n), a.data(), lapack_int(n),
                              sys.values.data());
        if (with_vectors) sys.vectors = std::move(a);
    }
    if (info != 0) throw std::runtime_error("eigensolver failed");
    if (!sys.values.empty() && sys.values.front() <= 0.0)
        throw std::logic_error("non-positive eigenvalue");
    return sys;
}

Spectrum build_spectrum(const Scene& scene, SubsetMask subset,
                        const GridConfig& cfg) {
    EigenSystem sys = build_eigensystem(scene, subset, cfg, false);
    Spectrum sp;
    sp.eigenvalues = std::move(sys.values);
    sp.h = std::max(sys.grid.h[0], sys.grid.dim == 2 ? sys.grid.h[1] : 0.0);
    sp.subset = subset;
    return sp;
}

double spectral_function(const Spectrum& spectrum, double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
    double sum = 0.0;
    // ascending eigenvalues: add smallest terms last
    for (auto it = spectrum.eigenvalues.rbegin();
         it != spectrum.eigenvalues.rend(); ++it)
        sum += std::exp(-beta * *it);
    return sum;
}

std::vector<double> irreducible_spectral_table(const Scene& scene,
                                               const GridConfig& grid,
                                               std::span<const double> betas) {
    validate_scene(scene);
    const std::size_t n_obj = scene.objects.size();
    if (n_obj > 12)
        throw std::invalid_argument("spectral subtraction limited to 12 objects");
    const std::size_t n_sub = std::size_t(1) << n_obj;

    std::vector<std::vector<double>> per_subset(n_sub);
    std::atomic<std::size_t> cursor{0};
    const unsigned workers = std::max(
        1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                               unsigned(n_sub)));
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&]() {
        try {
            for (;;) {
                const std::size_t s = cursor.fetch_add(1);
                if (s >= n_sub) return;
                const Spectrum sp =
                    build_spectrum(scene, SubsetMask(s), grid);
                auto& row = per_subset[s];
                row.reserve(betas.size());
                for (double b : betas) row.push_back(spectral_function(sp, b));
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);

    std::vector<double> out(betas.size(), 0.0);
    for (std::size_t s = 0; s < n_sub; ++s) {
        const double w = signed_weight(std::uint32_t(n_obj), SubsetMask(s));
        for (std::size_t b = 0; b < betas.size(); ++b)
            out[b] += w * per_subset[s][b];
    }
    return out;
}

double irreducible_spectral_exact(const Scene& scene, const GridConfig& grid,
                                  double beta) {
    const double b[1] = {beta};
    return irreducible_spectral_table(scene, grid, b)[0];
}

DecayResult decay_check(const Scene& scene, const GridConfig& grid,
                        std::span<const double> betas) {
    validate_scene(scene);
    if (scene.objects.size() == 1)
        throw std::invalid_argument(
            "no common-intersection suppression for N=1 point object");
    if (betas.size() < 4)
        throw std::invalid_argument("decay fit needs at least 4 beta values");

    DecayResult out;
    out.phi = irreducible_spectral_table(scene, grid, betas);

    std::vector<double> inv_b, ln_b, ln_phi;
    for (std::size_t i = 0; i < betas.size(); ++i) {
        const double m = std::abs(out.phi[i]);
        if (m < 1e-280) continue; // underflowed tail point carries no signal
        inv_b.push_back(1.0 / betas[i]);
        ln_b.push_back(std::log(betas[i]));
        ln_phi.push_back(std::log(m));
    }
    if (ln_phi.size() < 4)
        throw std::invalid_argument("decay fit needs at least 4 resolvable points");

    const LinearFit fe = fit_line(inv_b, ln_phi);
    const LinearFit fp = fit_line(ln_b, ln_phi);
    out.slope = fe.slope;
    out.power = fp.slope;
    out.ssr_exp = fe.ssr;
    out.ssr_pow = fp.ssr;
    out.power_series = fp.ssr < fe.ssr;
    return out;
}

double heat_kernel_value(const EigenSystem& sys, const Vec3& x, const Vec3& y,
                         double beta) {
    if (sys.vectors.empty())
        throw std::invalid_argument("kernel evaluation needs eigenvectors");
    const LabGrid& g = sys.grid;
    auto snap = [&](const Vec3& p) -> std::int64_t {
        std::uint32_t idx[2] = {0, 0};
        for (std::uint32_t c = 0; c < g.dim; ++c) {
            const double t = (p[c] - g.lo[c]) / g.h[c] - 1.0;
            const double r = std::round(t);
            if (r < 0.0 || r >= double(g.n[c])) return -1; // outer wall
            idx[c] = std::uint32_t(r);
        }
        return g.compact[std::size_t(idx[1]) * g.n[0] + idx[0]];
    };
    const std::int64_t i = snap(x), j = snap(y);
    if (i < 0 || j < 0) return 0.0;
    double hvol = g.h[0];
    if (g.dim == 2) hvol *= g.h[1];
    const std::uint32_t n = g.kept;
    double sum = 0.0;
    for (std::uint32_t m = n; m-- > 0;) {
        const double w = std::exp(-beta * sys.values[m]);
        sum += w * sys.vectors[std::size_t(m) * n + std::size_t(i)] *
               sys.vectors[std::size_t(m) * n + std::size_t(j)];
    }
    return sum / hvol;
}

KernelCheckResult kernel_bound_check(const Scene& scene, SubsetMask subset,
                                     const GridConfig& grid,
                                     std::span<const KernelTriple> triples) {
    for (std::size_t o = 0; o < scene.objects.size(); ++o) {
        if (!(subset & (SubsetMask(1) << o))) continue;
        const Interaction& in = scene.objects[o].interaction;
        if (!in.dirichlet && in.strength < 0.0)
            throw std::invalid_argument("kernel bound needs positive potentials");
    }
    const EigenSystem sys = build_eigensystem(scene, subset, grid, true);
    const LabGrid& g = sys.grid;
    const double h2 = std::max(g.h[0] * g.h[0],
                               g.dim == 2 ? g.h[1] * g.h[1] : 0.0);

    KernelCheckResult out;
    out.worst_excess = -std::numeric_limits<double>::infinity();
    out.min_value = std::numeric_limits<double>::infinity();
    auto snap_coord = [&](double v, std::uint32_t c) {
        const double r = std::round((v - g.lo[c]) / g.h[c] - 1.0);
        return g.lo[c] + (r + 1.0) * g.h[c];
    };
    for (const KernelTriple& t : triples) {
        if (!(t.beta > 0.0)) throw std::invalid_argument("beta must be positive");
        const double k = heat_kernel_value(sys, t.x, t.y, t.beta);
        Vec3 xs = t.x, ys = t.y;
        for (std::uint32_t c = 0; c < g.dim; ++c) {
            xs[c] = snap_coord(t.x[c], c);
            ys[c] = snap_coord(t.y[c], c);
        }
        double r2 = 0.0;
        for (std::uint32_t c = 0; c < g.dim; ++c)
            r2 += (xs[c] - ys[c]) * (xs[c] - ys[c]);
        const double free_norm = std::pow(2.0 * kPi * t.beta, -0.5 * g.dim);
        const double bound = free_norm * std::exp(-r2 / (2.0 * t.beta));
        // lattice kernels overshoot the continuum one at relative order
        // h^2/beta, so the slack must carry that term
        const double slack =
            1e-10 + free_norm * double(g.dim) * h2 / (4.0 * t.beta);
        out.worst_excess = std::max(out.worst_excess, k - bound - slack);
        out.min_value = std::min(out.min_value, k);
        ++out.checked;
    }
    out.pass = out.checked > 0 && out.worst_excess <= 0.0 &&
               out.min_value >= -1e-12;
    return out;
}

HeatKernelFit heat_kernel_fit(const Spectrum& spectrum, std::uint32_t dim,
                              std::span<const double> betas) {
    if (betas.size() < 3)
        throw std::invalid_argument("heat kernel fit needs at least 3 betas");
    // y = a0 + a1 sqrt(beta) + a2 beta, normal equations on the 3x3 system
    double m[3][3] = {{0}}, rhs[3] = {0};
    double beta_max = 0.0;
    for (double b : betas) {
        beta_max = std::max(beta_max, b);
        const double y =
            spectral_function(spectrum, b) * std::pow(2.0 * kPi * b, 0.5 * dim);
        const double base[3] = {1.0, std::sqrt(b), b};
        for (int r = 0; r < 3; ++r) {
            rhs[r] += base[r] * y;
            for (int c = 0; c < 3; ++c) m[r][c] += base[r] * base[c];
        }
    }
    // gaussian elimination with partial pivoting
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
        std::swap(m[col], m[piv]);
        std::swap(rhs[col], rhs[piv]);
        for (int r = col + 1; r < 3; ++r) {
            const double f = m[r][col] / m[col][col];
            for (int c = col; c < 3; ++c) m[r][c] -= f * m[col][c];
            rhs[r] -= f * rhs[col];
        }
    }
    double a[3];
    for (int r = 2; r >= 0; --r) {
        double v = rhs[r];
        for (int c = r + 1; c < 3; ++c) v -= m[r][c] * a[c];
        a[r] = v / m[r][r];
    }
    HeatKernelFit fit;
    fit.volume_coeff = a[0];
    fit.boundary_coeff = a[1];
    fit.curvature_coeff = a[2];
    for (double b : betas) {
        const double y =
            spectral_function(spectrum, b) * std::pow(2.0 * kPi * b, 0.5 * dim);
        const double pred = a[0] + a[1] * std::sqrt(b) + a[2] * b;
        fit.ssr += (y - pred) * (y - pred);
    }
    fit.window_ok =
        std::abs(fit.curvature_coeff) * beta_max <= 0.1 * std::abs(fit.volume_coeff);
    return fit;
}

} // namespace wlc
