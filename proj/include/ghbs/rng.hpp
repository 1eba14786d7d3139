#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ghbs {

/// mt19937_64 wrapped with fixed uniform/normal transforms so that streams
/// are bit-reproducible for a given seed, independent of the standard
/// library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via polar Box-Muller.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, w, s;
        do {
            u = 2.0 * uniform() - 1.0;
            w = 2.0 * uniform() - 1.0;
            s = u * u + w * w;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = w * f;
        has_spare_ = true;
        return u * f;
    }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Rejection sampling to avoid modulo bias.
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return x % n;
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// FNV-1a, used to derive independent per-task seeds from a master seed.
inline std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t h = 14695981039346656037ull;
    for (std::uint64_t x : {seed, tag}) {
        for (int i = 0; i < 8; ++i) {
            h ^= (x >> (8 * i)) & 0xff;
            h *= 1099511628211ull;
        }
    }
    return h;
}

}  // namespace ghbs
