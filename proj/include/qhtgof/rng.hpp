#pragma once

#include <cmath>
#include <cstdint>

namespace qht {

// 64-bit finalizer (SplitMix64 style). Bijective with strong avalanche; used
// for stream derivation and output whitening.
inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Independent stream key from a base seed and up to two labels. Per-record
// and per-replicate substreams are derived this way, so any sharding of a
// Monte Carlo loop reproduces the serial output exactly.
inline constexpr std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t a,
                                             std::uint64_t b = 0) noexcept {
    std::uint64_t h = mix64(seed + 0x9e3779b97f4a7c15ULL);
    h = mix64(h ^ (a + 0xd1b54a32d192ed03ULL));
    h = mix64(h ^ (b + 0x8cb92ba72f3d8dd7ULL));
    return h;
}

// Counter-based uniform generator: the state advances by the golden-ratio
// increment and outputs are mix64 of the counter. Two generators built from
// the same (seed, stream) produce identical sequences.
class StreamRng {
public:
    explicit StreamRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
        : counter_(derive_stream(seed, stream)) {}

    std::uint64_t next_u64() noexcept {
        counter_ += 0x9e3779b97f4a7c15ULL;
        return mix64(counter_);
    }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform01() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform on (0, 1]; safe as a log() argument.
    double uniform_pos() noexcept {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // Standard normal, Box-Muller. One value per call, fixed draw count.
    double normal() noexcept {
        const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
        return r * std::cos(2.0 * M_PI * uniform01());
    }

private:
    std::uint64_t counter_;
};

}  // namespace qht
