#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace pqx {

/// SplitMix64 finalizer. Used to derive independent stream seeds from a
/// master seed plus arbitrary tags (record index, ensemble member, epoch).
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline uint64_t mix64(uint64_t seed, uint64_t tag) { return mix64(seed ^ mix64(tag)); }

inline uint64_t mix64(uint64_t seed, uint64_t tag1, uint64_t tag2) {
    return mix64(mix64(seed, tag1), tag2);
}

/// Deterministic random stream. The engine is std::mt19937_64; the
/// uniform/normal conversions are pinned here instead of using
/// std::*_distribution, whose output is implementation-defined.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(mix64(seed)) {}

    uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1): 53 random mantissa bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n).
    uint64_t below(uint64_t n) {
        // modulo with rejection to avoid bias
        const uint64_t limit = n * ((~uint64_t{0}) / n);
        uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    /// Standard normal via Box-Muller (pinned, portable).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform01(); // (0, 1]
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace pqx
