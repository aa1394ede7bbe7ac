#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace dhmm {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; a bijective scramble of a 64-bit word.
std::uint64_t splitmix64(std::uint64_t x);

/// Hash-combines a parent seed with a child index into an independent seed.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index);

std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> path);

/// Seeds an engine with the full state width from a single 64-bit seed.
Rng make_rng(std::uint64_t seed);

}  // namespace dhmm
