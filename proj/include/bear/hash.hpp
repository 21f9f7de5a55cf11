#pragma once

#include <cstdint>
#include <string_view>

namespace bear {

using FeatureId = std::uint64_t;

// MurmurHash3 x86_32 over an arbitrary byte string.
std::uint32_t murmur3_32(const void* data, std::size_t len, std::uint32_t seed);

inline std::uint32_t murmur3_32(std::string_view s, std::uint32_t seed) {
  return murmur3_32(s.data(), s.size(), seed);
}

// Hashes the little-endian 8-byte encoding of a feature id, so results do not
// depend on host byte order.
std::uint32_t hash_feature(FeatureId id, std::uint32_t seed);

// splitmix64 finalizer. Used to derive independent 32-bit hash seeds from a
// single 64-bit reproducibility seed.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

enum class HashPurpose : std::uint32_t { kIndex = 0, kSign = 1 };

// Seed for one (row, purpose) hash function of a sketch keyed by `seed`.
constexpr std::uint32_t derive_seed(std::uint64_t seed, std::uint64_t row,
                                    HashPurpose purpose) {
  const std::uint64_t key =
      mix64(seed) ^ mix64((row << 1) | static_cast<std::uint64_t>(purpose));
  return static_cast<std::uint32_t>(mix64(key) >> 32);
}

}  // namespace bear
