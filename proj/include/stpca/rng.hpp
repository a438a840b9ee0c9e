#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace stpca {

/// splitmix64 (Steele/Lea/Flood); used only to key xoshiro streams.
struct Splitmix64 {
    std::uint64_t state;

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
};

/// xoshiro256++ 1.0 (Blackman & Vigna, public domain reference code).
class Xoshiro256pp {
public:
    explicit Xoshiro256pp(std::uint64_t seed) {
        Splitmix64 sm{seed};
        for (auto& w : s_) w = sm.next();
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> s_{};
};

/// Deterministic stream for (seed, salt); trials hash their index in as the
/// salt, so trial streams are order-independent and safe to draw in parallel.
inline Xoshiro256pp derive_stream(std::uint64_t seed, std::uint64_t salt) {
    Splitmix64 sm{seed};
    const std::uint64_t a = sm.next();
    Splitmix64 sm2{a + salt};
    return Xoshiro256pp(sm2.next());
}

/// Sub-seed for a named substream (distinct Monte-Carlo purposes).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
    Splitmix64 sm{seed};
    const std::uint64_t a = sm.next();
    Splitmix64 sm2{a ^ (salt * 0x9E3779B97F4A7C15ULL + 1)};
    return sm2.next();
}

/// Uniform double in (0, 1] from the top 53 bits.
inline double uniform_open01(Xoshiro256pp& rng) {
    return static_cast<double>((rng.next() >> 11) + 1) * 0x1.0p-53;
}

/// Unbiased uniform integer in [0, bound) by rejection.
inline std::uint64_t uniform_below(Xoshiro256pp& rng, std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        const std::uint64_t r = rng.next();
        if (r >= threshold) return r % bound;
    }
}

/// Standard normal draws via Box-Muller, pair-caching.
class GaussianStream {
public:
    explicit GaussianStream(Xoshiro256pp rng) : rng_(rng) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_open01(rng_);
        const double u2 = uniform_open01(rng_);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    void fill(std::span<double> out) {
        for (auto& v : out) v = next();
    }

private:
    Xoshiro256pp rng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace stpca
