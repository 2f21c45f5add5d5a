#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace hsa {

/// Uniform [0, 1) from the top 53 bits of the engine output.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Box-Muller; consumes exactly two engine draws per call.
inline double standard_normal(std::mt19937_64& rng) {
    const double u1 = 1.0 - unit_uniform(rng);  // (0, 1]
    const double u2 = unit_uniform(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// splitmix64 finalizer, used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace hsa
