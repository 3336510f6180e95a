#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace tal {

// FNV-1a, 64 bit. Used for rng stream derivation and manifest hashes;
// stable across platforms, unlike std::hash.
inline uint64_t fnv1a(std::string_view s, uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Every random decision in the pipeline draws from a named stream so that
// stages stay reproducible independently of each other.
inline std::mt19937_64 make_rng(uint64_t seed, std::string_view stream) {
  uint64_t h = fnv1a(stream);
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(h), static_cast<uint32_t>(h >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace tal
