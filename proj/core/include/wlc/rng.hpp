#pragma once
// Counter-based random streams.  Every draw is a pure function of
// (seed, counter words), so parallel producers generate identical values
// regardless of scheduling and any loop can be regenerated in isolation.

#include <cstdint>
#include <cmath>
#include <numbers>

namespace wlc {

// splitmix64 finalizer; passes BigCrush as a mixer when applied to a counter.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
    return mix64(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

// key for one scalar draw addressed by up to four counter words
inline std::uint64_t draw_key(std::uint64_t seed, std::uint64_t c0,
                              std::uint64_t c1 = 0, std::uint64_t c2 = 0,
                              std::uint64_t c3 = 0) {
    std::uint64_t k = mix64(seed);
    k = hash_combine(k, c0);
    k = hash_combine(k, c1);
    k = hash_combine(k, c2);
    k = hash_combine(k, c3);
    return k;
}

// uniform in (0,1); never returns 0 or 1.  52 random bits: every
// intermediate is exactly representable, so the end points stay excluded
// (with 53 bits the largest mantissa would round up to exactly 1.0).
inline double u01(std::uint64_t key) {
    return static_cast<double>((key >> 12) + 0.5) * 0x1.0p-52;
}

// standard normal via Box-Muller from two decorrelated sub-keys
inline double gauss(std::uint64_t key) {
    const double u1 = u01(mix64(key ^ 0xd1b54a32d192ed03ULL));
    const double u2 = u01(mix64(key ^ 0x8cb92ba72f3d8dd7ULL));
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
}

inline double gauss(std::uint64_t seed, std::uint64_t c0, std::uint64_t c1 = 0,
                    std::uint64_t c2 = 0, std::uint64_t c3 = 0) {
    return gauss(draw_key(seed, c0, c1, c2, c3));
}

inline double uniform(std::uint64_t seed, std::uint64_t c0,
                      std::uint64_t c1 = 0, std::uint64_t c2 = 0,
                      std::uint64_t c3 = 0) {
    return u01(draw_key(seed, c0, c1, c2, c3));
}

} // namespace wlc
