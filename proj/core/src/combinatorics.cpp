#include "wlc/combinatorics.hpp"

#include <stdexcept>
#include <string>
#include <vector>

#include "wlc/stats.hpp"

namespace wlc {

namespace {

void check_n(int n_objects) {
    if (n_objects < 1 || n_objects > kMaxObjects)
        throw std::invalid_argument("object count must be in [1, " +
                                    std::to_string(kMaxObjects) + "]");
}

// packs the bits of sub (a subset of tau) into consecutive low bits
SubsetMask pack_into(SubsetMask sub, SubsetMask tau) {
    SubsetMask out = 0;
    int pos = 0;
    while (tau) {
        const SubsetMask low = tau & (~tau + 1u);
        if (sub & low) out |= (1u << pos);
        ++pos;
        tau &= tau - 1u;
    }
    return out;
}

} // namespace

double signed_weight(int n_objects, SubsetMask s) {
    check_n(n_objects);
    if (s >> n_objects)
        throw std::invalid_argument("subset mask has bits beyond object count");
    return ((n_objects - subset_size(s)) % 2 == 0) ? 1.0 : -1.0;
}

double astot_sum(int n_objects, int tau_size) {
    check_n(n_objects);
    if (tau_size < 0 || tau_size > n_objects)
        throw std::invalid_argument("tau_size out of range");
    double sum = 0.0;
    for (int k = tau_size; k <= n_objects; ++k) {
        const double sign = ((n_objects - k) % 2 == 0) ? 1.0 : -1.0;
        sum += sign * binomial(n_objects - tau_size, n_objects - k);
    }
    return sum;
}

double loopcont_sum(int n_objects, SubsetMask tau, std::span<const double> p) {
    check_n(n_objects);
    const SubsetMask full = (n_objects == 32) ? ~0u : ((1u << n_objects) - 1u);
    if (tau >> n_objects)
        throw std::invalid_argument("tau has bits beyond object count");
    if (tau == full)
        throw std::invalid_argument("tau must be a proper subset");
    const int tsize = subset_size(tau);
    if (p.size() != (std::size_t(1) << tsize))
        throw std::invalid_argument("survival table must have size 2^|tau|");

    double sum = 0.0;
    for (SubsetMask s = 0; s <= full; ++s) {
        const double sign = ((n_objects - subset_size(s)) % 2 == 0) ? 1.0 : -1.0;
        sum += sign * p[pack_into(s & tau, tau)];
        if (s == full) break;
    }
    return sum;
}

double kill_probability(std::span<const double> survivals, KillMode mode) {
    const int n = static_cast<int>(survivals.size());
    check_n(n);
    for (double s : survivals)
        if (!(s >= 0.0 && s <= 1.0))
            throw std::invalid_argument("survival probabilities must lie in [0,1]");

    if (mode == KillMode::product) {
        double kill = 1.0;
        for (double s : survivals) kill *= (1.0 - s);
        return kill;
    }

    // powerset form, products built by peeling the lowest set bit
    const SubsetMask full = (1u << n) - 1u;
    std::vector<double> prod(std::size_t(full) + 1, 1.0);
    double kill = 0.0;
    for (SubsetMask g = 0; g <= full; ++g) {
        if (g) {
            const int low = __builtin_ctz(g);
            prod[g] = prod[g & (g - 1u)] * survivals[low];
        }
        kill += (subset_size(g) % 2 == 0 ? 1.0 : -1.0) * prod[g];
        if (g == full) break;
    }
    return kill;
}

} // namespace wlc
