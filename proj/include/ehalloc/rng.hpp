#pragma once

#include <cstdint>
#include <random>

namespace ehalloc {

/// SplitMix64 finalizer. Used as the 64-bit mixing function for all seed
/// derivation so that trial streams are independent of scheduling order.
std::uint64_t splitmix64(std::uint64_t x);

/// seed = mix(mix(mix(master) ^ a) ^ b), with mix = splitmix64.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

/// Per-trial random stream labels.
enum class Stream : std::uint64_t { Arrivals = 1, Channel = 2, Unitary = 3 };

using Engine = std::mt19937_64;

}  // namespace ehalloc
