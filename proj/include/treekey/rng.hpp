#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace treekey {

// splitmix64; used to turn (seed, stream-index) pairs into decorrelated seeds.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

using Rng = std::mt19937_64;

// One independent stream per trial: scheduling and thread count never change
// which numbers a trial sees.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
    return Rng(mix64(seed ^ mix64(stream)));
}

// Canonical double in [0, 1); bit-identical on any platform.
inline double uniform01(Rng& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double uniform_range(Rng& g, double lo, double hi) {
    return lo + (hi - lo) * uniform01(g);
}

// Unbiased integer in [0, n) via rejection.
inline std::uint64_t uniform_below(Rng& g, std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
        v = g();
    } while (v >= limit);
    return v % n;
}

// Box-Muller kept by hand so streams do not depend on the standard library's
// normal_distribution state machine.
class GaussianSampler {
  public:
    double operator()(Rng& g) {
        if (have_) {
            have_ = false;
            return cached_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform01(g);
        } while (u1 <= 0.0);
        const double u2 = uniform01(g);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        have_ = true;
        return r * std::cos(a);
    }

  private:
    bool have_ = false;
    double cached_ = 0.0;
};

}  // namespace treekey
