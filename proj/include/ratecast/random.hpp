#pragma once

#include <cstdint>

#include <boost/random/mersenne_twister.hpp>

namespace ratecast {

// All stochastic routines draw from MT19937-64 through Boost.Random
// distributions, whose output is identical across platforms and standard
// libraries. Independent streams are derived from (seed, stream) pairs with
// SplitMix64 so no generator state is shared between callers.
using Engine = boost::random::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

inline Engine make_engine(std::uint64_t seed, std::uint64_t stream = 0) {
    return Engine{derive_seed(seed, stream)};
}

}  // namespace ratecast
