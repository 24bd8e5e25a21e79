#pragma once

#include <cstdint>
#include <random>

namespace psipi {

using Engine = std::mt19937_64;

/// Stream ids for the seed-splitting rule. Every random draw in the project
/// comes from Engine{derive_seed(seed, stream)} (or a further split of it).
enum class Stream : std::uint64_t {
  pump_phase = 1,
  frame_noise = 2,
  shot_noise = 3,
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(seed ^ mix64(stream));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, Stream stream) {
  return derive_seed(seed, static_cast<std::uint64_t>(stream));
}

}  // namespace psipi
