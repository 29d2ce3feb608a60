#pragma once

// Latin hypercube sampling over a box of design intervals: every dimension is
// split into n strata and each stratum is hit exactly once, with an
// independent random permutation per dimension and a uniform jitter inside
// each stratum.

#include <cstdint>
#include <vector>

#include "castopt/common.hpp"
#include "castopt/rng.hpp"
#include "castopt/solver.hpp"

namespace castopt {

inline std::vector<std::vector<double>> latin_hypercube(std::size_t n,
                                                        const std::vector<Interval>& bounds,
                                                        std::uint64_t seed) {
    if (n == 0) throw ValidationError("latin_hypercube: need at least one sample");
    for (const auto& b : bounds)
        if (!(b.hi > b.lo)) throw ValidationError("latin_hypercube: empty interval");

    Rng rng(seed);
    std::vector<std::vector<double>> samples(n, std::vector<double>(bounds.size()));
    std::vector<std::size_t> perm(n);
    for (std::size_t d = 0; d < bounds.size(); ++d) {
        for (std::size_t i = 0; i < n; ++i) perm[i] = i;
        rng.shuffle(perm);
        const double w = bounds[d].width() / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i)
            samples[i][d] = bounds[d].lo + (static_cast<double>(perm[i]) + rng.uniform01()) * w;
    }
    return samples;
}

/// The 11-dimensional casting design box: melt temperature then one wall
/// temperature per domain.
inline std::vector<Interval> design_box(const DesignBounds& b, int n_domains) {
    std::vector<Interval> box;
    box.push_back(b.t_init);
    for (int d = 0; d < n_domains; ++d) box.push_back(b.t_wall);
    return box;
}

}  // namespace castopt
