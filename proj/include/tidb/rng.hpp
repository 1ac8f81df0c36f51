#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace tidb {

// SplitMix64. Used both as the stream generator and to derive substream
// seeds, so results do not depend on the standard library's distribution
// implementations.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n) { return next_u64() % n; }

    /// Standard normal via Box-Muller.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    /// Derive an independent substream keyed by a tag and an index.
    Rng fork(std::string_view tag, std::uint64_t index = 0) const {
        std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
        for (char c : tag) h = (h ^ std::uint8_t(c)) * 0x100000001b3ULL;
        h ^= index + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        Rng r(state_ ^ h);
        r.next_u64();
        return r;
    }

  private:
    std::uint64_t state_;
};

}  // namespace tidb
