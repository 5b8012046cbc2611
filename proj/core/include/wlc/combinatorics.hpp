#pragma once
// Subset algebra of the N-body subtraction scheme.  Subsets of objects are
// bitmasks (bit i = object i present), N <= 30.  The irreducible part of any
// subset-additive quantity F is sum over s of (-1)^(N-|s|) F(s); these
// helpers provide the signs, the cancellation sums that make the scheme
// finite, and the per-path kill probability in both its equivalent forms.

#include <cstdint>
#include <span>

namespace wlc {

using SubsetMask = std::uint32_t;

inline constexpr int kMaxObjects = 30;

inline int subset_size(SubsetMask s) { return __builtin_popcount(s); }

// (-1)^(N - |s|)
double signed_weight(int n_objects, SubsetMask s);

// sum over |s| = tau_size .. N of (-1)^(N-|s|) C(N - tau_size, N - |s|);
// vanishes for tau_size < N and equals 1 at tau_size = N, which is why
// only the full intersection survives the subtraction.
double astot_sum(int n_objects, int tau_size);

// sum over all subsets s of (-1)^(N-|s|) p[s & tau] for a proper subset tau,
// evaluated by direct enumeration in floating point; exact cancellation means
// the result must vanish to rounding for arbitrary p.  p is indexed by the
// packed bits of (s & tau) relative to tau and must have size 2^|tau|.
double loopcont_sum(int n_objects, SubsetMask tau, std::span<const double> p);

enum class KillMode { product, powerset };

// probability that a path conditioned on per-object survivals s_i is killed
// by every object: product form prod_i (1 - s_i), powerset form
// sum_g (-1)^|g| prod_{i in g} s_i.  The two agree identically; the powerset
// form costs 2^N and is kept as a cross-check.
double kill_probability(std::span<const double> survivals, KillMode mode);

} // namespace wlc
