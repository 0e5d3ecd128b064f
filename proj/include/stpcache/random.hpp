#pragma once

#include <cstdint>

namespace stpcache {

// SplitMix64 finalizer (Steele, Lea, Flood 2014). Bijective on 64 bits.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed of an independent substream keyed by (master, a, b). Distinct keys
// give distinct seeds because every step is a bijection.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) noexcept {
  return splitmix64(splitmix64(splitmix64(master) ^ a) ^ b);
}

}  // namespace stpcache
