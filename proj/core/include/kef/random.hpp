#pragma once

#include <cstdint>
#include <random>

namespace kef {

using Rng = std::mt19937_64;

/// 64-bit finalizer from SplitMix64.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of draw `index` under `master`; independent of execution order.
constexpr std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return splitmix64(splitmix64(master) ^ splitmix64(index ^ 0x5851f42d4c957f2dULL));
}

inline Rng substream(std::uint64_t master, std::uint64_t index) {
    return Rng(substream_seed(master, index));
}

}  // namespace kef
