#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "error.hpp"

namespace dira {

// Deterministic RNG. std::mt19937_64 is fully specified by the standard, but the
// standard distributions are not, so bounded ints and normals are drawn here by hand.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Unbiased draw from [0, n) via rejection.
    uint64_t next_below(uint64_t n) {
        if (n == 0) throw ConfigError("Rng::next_below: n must be positive");
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % n;
    }

    // Uniform in [0, 1) with 53 random bits.
    double next_unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    // Standard normal via Box-Muller. One value per call, no caching, so the
    // stream position is easy to reason about.
    double next_normal() {
        double u1 = next_unit();
        while (u1 <= 0.0) u1 = next_unit();
        const double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    // Poisson via Knuth's product method; fine for the rates used here (<= ~100).
    uint64_t next_poisson(double rate) {
        if (rate <= 0.0) return 0;
        const double limit = std::exp(-rate);
        uint64_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= next_unit();
        } while (p > limit);
        return k - 1;
    }

    // In-place Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

// FNV-1a, used both for content digests and for deriving sub-stream seeds.
inline uint64_t fnv1a(const void* data, size_t len, uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline uint64_t hash_mix(uint64_t h, uint64_t v) { return fnv1a(&v, sizeof(v), h); }

inline uint64_t hash_mix(uint64_t h, std::string_view s) { return fnv1a(s.data(), s.size(), h); }

// Derives a named sub-stream seed from a base seed; order of mixes is the contract.
template <typename... Parts>
uint64_t derive_seed(uint64_t base, Parts... parts) {
    uint64_t h = fnv1a(&base, sizeof(base));
    ((h = hash_mix(h, parts)), ...);
    return h;
}

}  // namespace dira
