#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace hgkt {

/// splitmix64 step; the standard 64-bit finalizer-based generator.
std::uint64_t splitmix64(std::uint64_t& state);

/// Mixes several words into one seed, order-sensitive. Used to derive
/// independent deterministic streams (per node, per layer, per epoch)
/// from a single user seed.
std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts);

/// Draws uniformly from [0, n) by rejection, so the sequence depends only
/// on the mt19937_64 stream and not on library internals.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n);

/// Uniform sample of `count` distinct elements (partial Fisher-Yates).
/// Returns the pool unchanged when count >= pool size.
std::vector<int> sample_without_replacement(const std::vector<int>& pool,
                                            int count, std::uint64_t seed);

}  // namespace hgkt
