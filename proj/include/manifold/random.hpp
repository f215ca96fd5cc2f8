#pragma once

#include <cstdint>
#include <random>

namespace manifold {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derive an independent seed for stream `stream` of `master`. Stream ids are
/// caller-defined; the same (master, stream) always yields the same seed and
/// adding new streams never perturbs existing ones.
constexpr std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream) {
  return mix64(mix64(master) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t split_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  return split_seed(split_seed(master, a), b);
}

}  // namespace manifold
