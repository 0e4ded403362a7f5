#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace dialdiv {

/// FNV-1a over bytes; stable across platforms.
constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Order-sensitive combination of seed components.
constexpr std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) noexcept {
  std::uint64_t h = 0x243f6a8885a308d3ull;
  for (auto p : parts) h = splitmix64(h ^ splitmix64(p));
  return h;
}

/// Uniform double in [0,1) from a 64-bit hash (53 mantissa bits).
constexpr double unit_interval(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

using Rng = std::mt19937_64;

/// Uniform [0,1) draw that does not depend on the library's distribution code.
inline double uniform01(Rng& rng) { return unit_interval(rng()); }

/// Uniform integer in [0, n); n > 0.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
}

/// Purposes for per-turn seed derivation.
enum class SeedPurpose : std::uint64_t {
  kScore = 1,
  kGenerate = 2,
  kJudge = 3,
  kBackup = 4,
  kCandidatePick = 6,
};

constexpr std::uint64_t turn_seed(std::uint64_t trial_seed, std::uint64_t turn, SeedPurpose purpose,
                                  std::uint64_t index = 0) noexcept {
  return mix_seed({trial_seed, turn, static_cast<std::uint64_t>(purpose), index});
}

}  // namespace dialdiv
