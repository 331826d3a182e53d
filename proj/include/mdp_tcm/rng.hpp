#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mdp_tcm {

using Rng = std::mt19937_64;

/// Mixes a run seed with a stream name so that independent consumers
/// (split, init, DE, sampling, ...) draw from decorrelated generators.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream);

inline Rng make_rng(std::uint64_t seed, std::string_view stream) {
  return Rng(derive_seed(seed, stream));
}

}  // namespace mdp_tcm
