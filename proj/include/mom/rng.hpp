#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mom {

using Rng = std::mt19937_64;

// SplitMix64 finalizer. Every derived seed in the library goes through this
// function so that streams are reproducible from a single master seed.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seed for sub-stream `stream` of `seed` (row index, replication index, ...).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

// FNV-1a, used to turn a purpose tag ("partition", "cv", ...) into a stream id.
constexpr std::uint64_t tag_hash(std::string_view tag) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag,
                                    std::uint64_t stream = 0) noexcept {
  return derive_seed(derive_seed(seed, tag_hash(tag)), stream);
}

inline Rng make_rng(std::uint64_t seed) { return Rng(mix64(seed)); }

inline double standard_normal(Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

inline double uniform01(Rng& rng) {
  // 53 random bits -> [0, 1)
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double rademacher(Rng& rng) { return (rng() >> 63) != 0 ? 1.0 : -1.0; }

}  // namespace mom
