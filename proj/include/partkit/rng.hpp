#ifndef PARTKIT_RNG_HPP
#define PARTKIT_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace partkit {

/// Uniform double in [0,1) from the top 53 bits; avoids the
/// implementation-defined std::uniform_real_distribution so results are
/// stable across standard libraries.
inline double uniform_double(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// FNV-1a 64-bit; used for config hashes and per-shape seed fan-out.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 1469598103934665603ull) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::string_view tag) {
    std::uint64_t h = fnv1a64(tag);
    h ^= seed + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return h;
}

}  // namespace partkit

#endif
