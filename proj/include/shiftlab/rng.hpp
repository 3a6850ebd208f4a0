#pragma once

#include <cmath>
#include <cstdint>

namespace shiftlab::rng {

// Counter-based generator: every variate is a pure function of
// (seed, stream, counter), so batches regenerate bit-identically no matter
// how the work is split across threads or in what order paths are visited.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Key identifying one stream (one path of one batch).
inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ (stream + 0x632be59bd9b4e019ULL));
}

// Uniform on (0,1]: 53 mantissa bits, never zero (safe under log()).
inline double uniform01(std::uint64_t key, std::uint64_t counter) {
    const std::uint64_t bits = splitmix64(key ^ splitmix64(counter + 0x9e3779b97f4a7c15ULL));
    return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

// Standard normal via Box-Muller (cosine branch only; one variate per counter).
inline double gaussian(std::uint64_t key, std::uint64_t counter) {
    const double u1 = uniform01(key, 2 * counter);
    const double u2 = uniform01(key, 2 * counter + 1);
    const double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(6.283185307179586476925286766559 * u2);
}

} // namespace shiftlab::rng
