#pragma once

#include <cstdint>
#include <random>

namespace rscn {

/// 53-bit mantissa uniform in [0, 1); byte-identical across stdlib
/// implementations, which the seeded-reproducibility contracts rely on.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform on [-half_width, half_width].
inline double uniform_sym(std::mt19937_64& rng, double half_width) {
    return (2.0 * uniform01(rng) - 1.0) * half_width;
}

/// SplitMix64 finalizer; used to derive independent sub-seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace rscn
