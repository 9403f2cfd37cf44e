#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace ecgra {

// Deterministic pseudo-random generator built on splitmix64.
//
// Every randomized operation in the toolkit draws from an Rng so that runs
// are reproducible bit-for-bit across platforms and standard libraries
// (std::shuffle / std::normal_distribution make no such guarantee).
// Substreams derived with derive() are statistically independent, which
// lets parallel and serial execution agree: give each work item its own
// pre-derived stream.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {
        // one warm-up step decorrelates small seeds
        next_u64();
    }

    // Independent substream keyed by an integer tag.
    Rng derive(std::uint64_t tag) const {
        Rng child(mix(state_ ^ mix(tag + 0x9E3779B97F4A7C15ull)));
        return child;
    }

    // Independent substream keyed by a string tag (FNV-1a hash).
    Rng derive(std::string_view tag) const {
        std::uint64_t h = 0xCBF29CE484222325ull;
        for (unsigned char c : tag) {
            h ^= c;
            h *= 0x100000001B3ull;
        }
        return derive(h);
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        return mix(state_);
    }

    // Unbiased integer in [0, n), n >= 1. Classic rejection sampling.
    std::uint64_t uniform_below(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    // Standard normal via Box-Muller (pairs cached).
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);
        u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Fisher-Yates with explicit draws; stable across stdlib versions.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBull;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace ecgra
