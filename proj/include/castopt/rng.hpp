#pragma once

// Deterministic random utilities.
//
// Every draw is built from raw mt19937_64 output so that generated streams are
// identical across standard library implementations (std::uniform_*_distribution
// is not pinned by the standard and differs between libstdc++/libc++/MSVC).

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "castopt/common.hpp"

namespace castopt {

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

    /// Uniform index in [0, n). Uses the multiply-shift reduction; the bias is
    /// below 2^-64 for any n that fits in memory.
    std::size_t uniform_index(std::size_t n) {
        return static_cast<std::size_t>(
            (static_cast<unsigned __int128>(eng_()) * static_cast<unsigned __int128>(n)) >> 64);
    }

    /// In-place Fisher-Yates shuffle.
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = uniform_index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    /// k distinct indices drawn from [0, n), in draw order (partial Fisher-Yates).
    std::vector<std::size_t> sample_distinct(std::size_t n, std::size_t k) {
        if (k > n) throw ValidationError("sample_distinct: k exceeds n");
        std::vector<std::size_t> pool(n);
        for (std::size_t i = 0; i < n; ++i) pool[i] = i;
        std::vector<std::size_t> out;
        out.reserve(k);
        for (std::size_t i = 0; i < k; ++i) {
            std::size_t j = i + uniform_index(n - i);
            std::swap(pool[i], pool[j]);
            out.push_back(pool[i]);
        }
        return out;
    }

  private:
    std::mt19937_64 eng_;
};

/// splitmix64 finalizer; used to decorrelate derived seeds.
inline std::uint64_t mix_u64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Stable sub-seed for a named stream ("dataset", "ga", ...) plus an index.
/// Keeps per-sample randomness independent of evaluation order.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                                 std::uint64_t index = 0) {
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a offset basis
    for (char c : stream) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return mix_u64(master ^ mix_u64(h ^ (index * 0x9e3779b97f4a7c15ULL)));
}

}  // namespace castopt
