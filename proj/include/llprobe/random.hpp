#pragma once

#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

namespace llprobe {

// Seeded generator used everywhere randomness is needed. The engine is
// std::mt19937_64, whose output sequence is fixed by the standard; the
// conversions below are written out by hand because the standard
// distributions are implementation-defined. Together this makes every
// experiment replay bit-identically across toolchains.
//
// Stream version: 1. Changing any conversion below must bump it.
class Rng {
public:
    static constexpr int stream_version = 1;

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform integer in [lo, hi], unbiased (rejection sampling).
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const auto range = static_cast<std::uint64_t>(hi - lo) + 1;
        if (range == 0) return static_cast<std::int64_t>(next());
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
        std::uint64_t x;
        do {
            x = next();
        } while (x >= limit);
        return lo + static_cast<std::int64_t>(x % range);
    }

    std::size_t uniform_index(std::size_t n) {
        return static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(n) - 1));
    }

    // Categorical draw; weights need not be normalized.
    std::size_t categorical(std::span<const double> weights) {
        const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
        const double u = uniform01() * total;
        double acc = 0.0;
        for (std::size_t j = 0; j < weights.size(); ++j) {
            acc += weights[j];
            if (u < acc) return j;
        }
        return weights.size() - 1;
    }

    // Fisher-Yates permutation of 0..n-1.
    std::vector<std::size_t> permutation(std::size_t n) {
        std::vector<std::size_t> out(n);
        std::iota(out.begin(), out.end(), std::size_t{0});
        for (std::size_t i = n; i > 1; --i) {
            const std::size_t j = uniform_index(i);
            std::swap(out[i - 1], out[j]);
        }
        return out;
    }

    // First k entries of a uniformly random permutation: k distinct draws
    // from 0..n-1 without replacement, in draw order.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
        std::vector<std::size_t> pool(n);
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + uniform_index(n - i);
            std::swap(pool[i], pool[j]);
        }
        pool.resize(k);
        return pool;
    }

private:
    std::mt19937_64 engine_;
};

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Independent child seed for stream `index` of a base seed. Nearby base
// seeds give unrelated child streams (plain xor would not).
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
    return mix64(mix64(base) ^ (index * 0xD1B54A32D192ED03ULL + 1));
}

} // namespace llprobe
