#include "wlc/loops.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "wlc/rng.hpp"

namespace wlc {

namespace {

constexpr char kMagic[8] = {'W', 'L', 'L', 'O', 'O', 'P', 'S', '1'};

void validate(const LoopEnsembleSpec& s) {
    if (s.count == 0) throw std::invalid_argument("loop count must be >= 1");
    if (s.points < 2) throw std::invalid_argument("points per loop must be >= 2");
    if (s.dim < 1 || s.dim > 3) throw std::invalid_argument("dimension must be 1, 2 or 3");
    if (s.scheme == LoopScheme::bisection && !std::has_single_bit(std::uint64_t(s.points)))
        throw std::invalid_argument("bisection scheme requires points to be a power of two");
    // guard absurd allocations early: one loop must fit comfortably in memory
    const double bytes = double(s.points + 1) * s.dim * sizeof(double);
    if (bytes > 1e9) throw std::invalid_argument("loop size out of range");
}

// counter tags keeping the incremental and bisection streams disjoint
constexpr std::uint64_t kTagIncrement = 0x11;
constexpr std::uint64_t kTagBisect = 0x22;

void gen_incremental(const LoopEnsembleSpec& s, std::uint64_t idx,
                     std::span<double> out) {
    const std::uint32_t M = s.points, d = s.dim;
    const double sd = 1.0 / std::sqrt(double(M)); // increment sd over dt = 1/M
    // random walk, then subtract the linear drift to close the bridge
    for (std::uint32_t c = 0; c < d; ++c) {
        double w = 0.0;
        out[c] = 0.0;
        for (std::uint32_t k = 1; k <= M; ++k) {
            w += sd * gauss(s.seed, kTagIncrement, idx, (std::uint64_t(k) << 2) | c);
            out[std::size_t(k) * d + c] = w;
        }
        const double wM = out[std::size_t(M) * d + c];
        for (std::uint32_t k = 1; k < M; ++k)
            out[std::size_t(k) * d + c] -= (double(k) / double(M)) * wM;
        out[std::size_t(M) * d + c] = 0.0;
    }
}

// midpoint refinement; draws are keyed by absolute dyadic position so the
// coarse half of a refined ensemble reproduces the coarse ensemble bitwise
void gen_bisection(const LoopEnsembleSpec& s, std::uint64_t idx,
                   std::span<double> out) {
    const std::uint32_t M = s.points, d = s.dim;
    const int levels = std::countr_zero(M); // M = 2^levels
    for (std::uint32_t c = 0; c < d; ++c) {
        out[c] = 0.0;
        out[std::size_t(M) * d + c] = 0.0;
    }
    for (int lvl = 1; lvl <= levels; ++lvl) {
        const std::uint32_t span = M >> (lvl - 1); // span being split, in samples
        const double sd = std::sqrt(double(span) / double(M)) * 0.5; // bridge midpoint sd
        for (std::uint32_t j = 0; j * span < M; ++j) {
            const std::uint32_t a = j * span, b = a + span, m = a + span / 2;
            for (std::uint32_t c = 0; c < d; ++c) {
                const double mean = 0.5 * (out[std::size_t(a) * d + c] +
                                           out[std::size_t(b) * d + c]);
                // key: level and position within level identify the dyadic node
                const double g = gauss(s.seed, kTagBisect, idx,
                                       (std::uint64_t(lvl) << 32) | j, c);
                out[std::size_t(m) * d + c] = mean + sd * g;
            }
        }
    }
}

void header_bytes(const LoopEnsembleSpec& s, unsigned char h[48]) {
    std::memset(h, 0, 48);
    std::memcpy(h, kMagic, 8);
    const std::uint32_t version = 1, pts = s.points, dim = s.dim,
                        scheme = static_cast<std::uint32_t>(s.scheme);
    std::memcpy(h + 8, &version, 4);
    std::memcpy(h + 12, &pts, 4);
    std::memcpy(h + 16, &s.count, 8);
    std::memcpy(h + 24, &dim, 4);
    std::memcpy(h + 28, &scheme, 4);
    std::memcpy(h + 32, &s.seed, 8);
}

} // namespace

void generate_unit_loop(const LoopEnsembleSpec& spec, std::uint64_t index,
                        std::span<double> out) {
    validate(spec);
    if (index >= spec.count) throw std::out_of_range("loop index out of range");
    const std::size_t need = std::size_t(spec.points + 1) * spec.dim;
    if (out.size() < need) throw std::invalid_argument("output span too small");
    if (spec.scheme == LoopScheme::incremental)
        gen_incremental(spec, index, out);
    else
        gen_bisection(spec, index, out);
}

LoopEnsemble::LoopEnsemble(const LoopEnsembleSpec& spec, bool keep_samples)
    : spec_(spec) {
    validate(spec);
    const std::size_t per = std::size_t(spec.points + 1) * spec.dim;
    if (keep_samples) {
        const double bytes = double(per) * double(spec.count) * sizeof(double);
        if (bytes > 12e9)
            throw std::runtime_error("ensemble too large to materialize; "
                                     "stream loops instead");
        samples_.resize(per * spec.count);
    }
    extents_.resize(spec.count);

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const std::uint64_t n = spec.count;
    const unsigned workers = static_cast<unsigned>(std::min<std::uint64_t>(hw, n));
    std::vector<double> pad; // silence unused warning path
    (void)pad;
    std::vector<std::thread> pool;
    std::vector<double> maxr(workers, 0.0);
    auto run = [&](unsigned w) {
        std::vector<double> buf(per);
        const std::uint64_t lo = n * w / workers, hi = n * (w + 1) / workers;
        for (std::uint64_t i = lo; i < hi; ++i) {
            double* dst = keep_samples ? samples_.data() + per * i : buf.data();
            std::span<double> view(dst, per);
            generate_unit_loop(spec_, i, view);
            LoopExtents& e = extents_[i];
            for (std::uint32_t c = 0; c < spec_.dim; ++c) {
                e.lo[c] = 0.0;
                e.hi[c] = 0.0;
            }
            double r2max = 0.0;
            for (std::uint32_t k = 0; k <= spec_.points; ++k) {
                double r2 = 0.0;
                for (std::uint32_t c = 0; c < spec_.dim; ++c) {
                    const double v = dst[std::size_t(k) * spec_.dim + c];
                    e.lo[c] = std::min(e.lo[c], v);
                    e.hi[c] = std::max(e.hi[c], v);
                    r2 += v * v;
                }
                r2max = std::max(r2max, r2);
            }
            e.radius = std::sqrt(r2max);
            maxr[w] = std::max(maxr[w], e.radius);
        }
    };
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(run, w);
    run(0);
    for (auto& t : pool) t.join();
    for (double r : maxr) max_radius_ = std::max(max_radius_, r);
}

void LoopEnsemble::unit_loop(std::uint64_t i, std::span<double> out) const {
    const std::size_t per = std::size_t(spec_.points + 1) * spec_.dim;
    if (i >= spec_.count) throw std::out_of_range("loop index out of range");
    if (out.size() < per) throw std::invalid_argument("output span too small");
    if (!samples_.empty()) {
        std::memcpy(out.data(), samples_.data() + per * i, per * sizeof(double));
        return;
    }
    generate_unit_loop(spec_, i, out);
}

std::span<const double> LoopEnsemble::samples(std::uint64_t i) const {
    if (samples_.empty())
        throw std::logic_error("ensemble was not materialized");
    const std::size_t per = std::size_t(spec_.points + 1) * spec_.dim;
    return {samples_.data() + per * i, per};
}

void LoopEnsemble::physical_loop(std::uint64_t i, std::span<const double> x,
                                 double beta, std::span<double> out) const {
    if (x.size() < spec_.dim) throw std::invalid_argument("base point has wrong dimension");
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
    unit_loop(i, out);
    const double s = std::sqrt(beta);
    const std::size_t per = std::size_t(spec_.points + 1) * spec_.dim;
    for (std::size_t k = 0; k < per; k += spec_.dim)
        for (std::uint32_t c = 0; c < spec_.dim; ++c)
            out[k + c] = x[c] + s * out[k + c];
}

LoopEnsembleSpec refined_spec(const LoopEnsembleSpec& spec) {
    if (spec.scheme != LoopScheme::bisection)
        throw std::invalid_argument("refinement pairs require the bisection scheme");
    LoopEnsembleSpec fine = spec;
    if (spec.points > (1u << 30)) throw std::invalid_argument("points out of range");
    fine.points = spec.points * 2;
    return fine;
}

void write_loop_cache(const std::string& path, const LoopEnsembleSpec& spec) {
    validate(spec);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open loop cache for writing: " + path);
    unsigned char h[48];
    header_bytes(spec, h);
    f.write(reinterpret_cast<const char*>(h), sizeof h);
    const std::size_t per = std::size_t(spec.points + 1) * spec.dim;
    std::vector<double> buf(per);
    for (std::uint64_t i = 0; i < spec.count; ++i) {
        generate_unit_loop(spec, i, buf);
        f.write(reinterpret_cast<const char*>(buf.data()),
                static_cast<std::streamsize>(per * sizeof(double)));
    }
    if (!f) throw std::runtime_error("short write to loop cache: " + path);
}

LoopEnsembleSpec read_loop_cache_header(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open loop cache: " + path);
    unsigned char h[48];
    f.read(reinterpret_cast<char*>(h), sizeof h);
    if (!f || std::memcmp(h, kMagic, 8) != 0)
        throw std::runtime_error("not a loop cache file: " + path);
    std::uint32_t version = 0;
    std::memcpy(&version, h + 8, 4);
    if (version != 1) throw std::runtime_error("unsupported loop cache version");
    LoopEnsembleSpec s;
    std::uint32_t scheme = 0;
    std::memcpy(&s.points, h + 12, 4);
    std::memcpy(&s.count, h + 16, 8);
    std::memcpy(&s.dim, h + 24, 4);
    std::memcpy(&scheme, h + 28, 4);
    std::memcpy(&s.seed, h + 32, 8);
    s.scheme = static_cast<LoopScheme>(scheme);
    validate(s);
    return s;
}

void read_cached_loop(const std::string& path, const LoopEnsembleSpec& spec,
                      std::uint64_t i, std::span<double> out) {
    if (i >= spec.count) throw std::out_of_range("loop index out of range");
    const std::size_t per = std::size_t(spec.points + 1) * spec.dim;
    if (out.size() < per) throw std::invalid_argument("output span too small");
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open loop cache: " + path);
    f.seekg(static_cast<std::streamoff>(48 + per * sizeof(double) * i));
    f.read(reinterpret_cast<char*>(out.data()),
           static_cast<std::streamsize>(per * sizeof(double)));
    if (!f) throw std::runtime_error("short read from loop cache: " + path);
}

} // namespace wlc
