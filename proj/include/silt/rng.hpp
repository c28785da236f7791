#pragma once

#include <cstdint>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>

namespace silt {

using Engine = boost::random::mt19937_64;
using NormalDist = boost::random::normal_distribution<double>;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Order-sensitive combination of two 64-bit values.
inline constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) noexcept {
    return splitmix64(splitmix64(a) ^ (b + 0x632BE59BD9B4E019ULL + (a << 6) + (a >> 2)));
}

// Seed of replicate r under a base seed.
inline constexpr std::uint64_t replicate_seed(std::uint64_t base_seed, std::uint64_t r) noexcept {
    return hash_combine(base_seed, r);
}

// Independent substream for one fBm component of a path seed.
inline constexpr std::uint64_t component_seed(std::uint64_t path_seed, std::uint64_t component) noexcept {
    return hash_combine(path_seed ^ 0xA24BAED4963EE407ULL, component);
}

} // namespace silt
