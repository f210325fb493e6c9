#pragma once

#include <cstdint>

// Random number generation for the simulator.
//
// Stream layout is fixed by contract: every run of an ensemble draws from its
// own xoshiro256** stream, seeded as
//
//     run_seed = mix64(master_seed ^ mix64(run_index + 0x9E3779B97F4A7C15))
//
// where mix64 is the SplitMix64 finalizer.  The rule is stateless, so run k
// of an ensemble produces the same trajectory no matter how runs are
// scheduled across threads.

namespace patree {

// SplitMix64 finalizer (Steele, Lea, Flood).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t derive_run_seed(std::uint64_t master_seed,
                                        std::uint64_t run_index) noexcept {
    return mix64(master_seed ^ mix64(run_index + 0x9E3779B97F4A7C15ULL));
}

// xoshiro256** 1.0 (Blackman, Vigna), seeded through SplitMix64.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) noexcept {
        std::uint64_t z = seed;
        for (auto& word : s_) {
            z += 0x9E3779B97F4A7C15ULL;
            std::uint64_t w = z;
            w = (w ^ (w >> 30)) * 0xBF58476D1CE4E5B9ULL;
            w = (w ^ (w >> 27)) * 0x94D049BB133111EBULL;
            word = w ^ (w >> 31);
        }
    }

    std::uint64_t next() noexcept {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Unbiased draw from {0, ..., n-1} (Lemire's multiply-shift with
    // rejection).  n must be nonzero.
    std::uint32_t below(std::uint32_t n) noexcept {
        std::uint64_t x = next() & 0xFFFFFFFFULL;
        std::uint64_t m = x * n;
        auto low = static_cast<std::uint32_t>(m);
        if (low < n) {
            const std::uint32_t threshold = -n % n;
            while (low < threshold) {
                x = next() & 0xFFFFFFFFULL;
                m = x * n;
                low = static_cast<std::uint32_t>(m);
            }
        }
        return static_cast<std::uint32_t>(m >> 32);
    }

    // Uniform double in [0, 1), 53 random bits.
    double unit() noexcept {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

  private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4];
};

}  // namespace patree
