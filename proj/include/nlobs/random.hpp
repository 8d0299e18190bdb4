#pragma once

#include <cstdint>
#include <random>

namespace nlobs {

/// Seeded stream of doubles. Built on std::mt19937_64, whose output sequence is
/// fixed by the standard, and a manual 53-bit conversion so the doubles are the
/// same on every platform (std::uniform_real_distribution is not).
class SampleStream {
public:
    explicit SampleStream(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1).
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; a stateless hash used for counter-based random fields.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derive an independent seed for a numbered sub-stream.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return mix64(seed ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

}  // namespace nlobs
