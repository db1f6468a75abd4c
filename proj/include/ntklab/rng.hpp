#pragma once

// Counter-based random numbers.
//
// Every draw is a pure function of (seed, stream, counter): the 64-bit word
// number i of stream s under seed k is splitmix64_mix(key(k, s) + i * golden).
// No hidden state beyond the counter, no reliance on <random> distributions
// (whose output is implementation-defined), so a run replays bit-exactly on
// any platform with IEEE doubles.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ntklab {

inline constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class CounterRng {
public:
    static constexpr std::uint64_t golden = 0x9e3779b97f4a7c15ULL;

    explicit constexpr CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
        : key_(splitmix64_mix(splitmix64_mix(seed) ^ (stream * 0xd1b54a32d192ed03ULL + golden))) {}

    constexpr std::uint64_t next_u64() noexcept {
        ++counter_;
        return splitmix64_mix(key_ + counter_ * golden);
    }

    // Uniform on [0, 1) with 53 random bits.
    constexpr double uniform() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    constexpr double uniform(double lo, double hi) noexcept {
        return lo + (hi - lo) * uniform();
    }

    // Rademacher sign.
    constexpr double sign() noexcept { return (next_u64() >> 63) ? 1.0 : -1.0; }

    // Standard normal by Box-Muller; one draw consumes two words.
    double normal() noexcept {
        double u1 = uniform();
        const double u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    constexpr std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

// Named substreams so that e.g. init and sample draws never overlap.
namespace streams {
inline constexpr std::uint64_t init_biases = 1;
inline constexpr std::uint64_t init_signs = 2;
inline constexpr std::uint64_t adam_samples = 3;
inline constexpr std::uint64_t ntk_trials = 4;
inline constexpr std::uint64_t perturbation = 5;
inline constexpr std::uint64_t bernstein = 6;
inline constexpr std::uint64_t theory = 7;
}  // namespace streams

// Seed for the i-th independent trial derived from a base seed.
inline constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
    return splitmix64_mix(base * CounterRng::golden + index + 0x632be59bd9b4e019ULL);
}

}  // namespace ntklab
