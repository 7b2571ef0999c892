#ifndef INVEVOLVE_RNG_H_
#define INVEVOLVE_RNG_H_

// Seed derivation for independent, order-insensitive RNG streams.

#include <cstdint>
#include <initializer_list>

namespace invevolve {

constexpr std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Stream seed for (base, k1, k2, ...); distinct key tuples give
// statistically unrelated streams.
constexpr std::uint64_t DeriveSeed(std::uint64_t base,
                                   std::initializer_list<std::uint64_t> keys) {
  std::uint64_t s = SplitMix64(base);
  for (std::uint64_t k : keys) s = SplitMix64(s ^ k);
  return s;
}

}  // namespace invevolve

#endif  // INVEVOLVE_RNG_H_
