#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string_view>

namespace sce {

// 64-bit FNV-1a. Used both for stable content hashes and for deriving
// per-example RNG streams, so it must never change across releases.
constexpr std::uint64_t fnv1a(std::string_view data,
                              std::uint64_t h = 14695981039346656037ull) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

constexpr std::uint64_t fnv1a_mix(std::uint64_t h, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xffu;
        h *= 1099511628211ull;
    }
    return h;
}

// splitmix64. std::mt19937 would be stable too, but the std distributions
// on top of it are not specified bit-for-bit, so we draw values ourselves.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [lo, hi], inclusive. Rejection sampling keeps the draw
    // exactly uniform and platform-independent.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        if (lo > hi) throw std::invalid_argument("uniform_int: lo > hi");
        std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        if (span == 0) return static_cast<std::int64_t>(next_u64());  // full range
        std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return lo + static_cast<std::int64_t>(v % span);
    }

    std::size_t uniform_index(std::size_t n) {
        if (n == 0) throw std::invalid_argument("uniform_index: empty range");
        return static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(n) - 1));
    }

    bool coin_flip() { return (next_u64() & 1u) != 0; }

    // Uniform in [0, 1) with 53 bits of precision.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Box-Muller; one value per call, the twin draw is discarded.
    double normal() {
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793238462643 * u2);
    }

private:
    std::uint64_t state_;
};

// Per-example / per-trial RNG streams are derived from the run seed by
// hashing, so any (example, trial) pair can be replayed in isolation.
inline Rng derive_rng(std::uint64_t seed, std::string_view key) {
    return Rng(fnv1a(key, fnv1a_mix(14695981039346656037ull, seed)));
}

inline Rng derive_rng(std::uint64_t seed, std::string_view key, std::uint64_t index) {
    return Rng(fnv1a_mix(fnv1a(key, fnv1a_mix(14695981039346656037ull, seed)), index));
}

}  // namespace sce
