#include "bear/hash.hpp"

#include <cstring>

namespace bear {

namespace {

inline std::uint32_t rotl32(std::uint32_t x, int r) {
  return (x << r) | (x >> (32 - r));
}

inline std::uint32_t fmix32(std::uint32_t h) {
  h ^= h >> 16;
  h *= 0x85ebca6bU;
  h ^= h >> 13;
  h *= 0xc2b2ae35U;
  h ^= h >> 16;
  return h;
}

inline std::uint32_t load_le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

constexpr std::uint32_t kC1 = 0xcc9e2d51U;
constexpr std::uint32_t kC2 = 0x1b873593U;

}  // namespace

std::uint32_t murmur3_32(const void* data, std::size_t len, std::uint32_t seed) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  const std::size_t nblocks = len / 4;
  std::uint32_t h1 = seed;

  for (std::size_t i = 0; i < nblocks; ++i) {
    std::uint32_t k1 = load_le32(bytes + 4 * i);
    k1 *= kC1;
    k1 = rotl32(k1, 15);
    k1 *= kC2;
    h1 ^= k1;
    h1 = rotl32(h1, 13);
    h1 = h1 * 5 + 0xe6546b64U;
  }

  const unsigned char* tail = bytes + 4 * nblocks;
  std::uint32_t k1 = 0;
  switch (len & 3) {
    case 3:
      k1 ^= static_cast<std::uint32_t>(tail[2]) << 16;
      [[fallthrough]];
    case 2:
      k1 ^= static_cast<std::uint32_t>(tail[1]) << 8;
      [[fallthrough]];
    case 1:
      k1 ^= tail[0];
      k1 *= kC1;
      k1 = rotl32(k1, 15);
      k1 *= kC2;
      h1 ^= k1;
  }

  h1 ^= static_cast<std::uint32_t>(len);
  return fmix32(h1);
}

// Two-block specialization; the low and high words are the little-endian
// blocks of the 8-byte encoding.
std::uint32_t hash_feature(FeatureId id, std::uint32_t seed) {
  std::uint32_t h1 = seed;
  for (const std::uint32_t block : {static_cast<std::uint32_t>(id),
                                    static_cast<std::uint32_t>(id >> 32)}) {
    std::uint32_t k1 = block * kC1;
    k1 = rotl32(k1, 15);
    k1 *= kC2;
    h1 ^= k1;
    h1 = rotl32(h1, 13);
    h1 = h1 * 5 + 0xe6546b64U;
  }
  h1 ^= 8U;
  return fmix32(h1);
}

}  // namespace bear
