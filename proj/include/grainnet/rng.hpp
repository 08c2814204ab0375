#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace grainnet::rng {

// All randomness in the project flows through these helpers on top of
// std::mt19937 so that streams are reproducible independent of the standard
// library's distribution implementations.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Deterministic stream seed derived from a base seed and up to three indices.
inline std::uint32_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
  std::uint64_t h = splitmix64(base);
  h = splitmix64(h ^ (a + 0x100000001ull));
  h = splitmix64(h ^ (b + 0x200000003ull));
  h = splitmix64(h ^ (c + 0x300000007ull));
  return static_cast<std::uint32_t>(h);
}

// Unbiased integer in [0, n) via rejection sampling.
inline std::uint32_t uniform_u32(std::mt19937& g, std::uint32_t n) {
  if (n <= 1) return 0;
  const std::uint32_t limit = 0xffffffffu - (0xffffffffu % n + 1) % n;
  std::uint32_t v;
  do {
    v = g();
  } while (v > limit);
  return v % n;
}

inline int uniform_int(std::mt19937& g, int lo, int hi) {  // inclusive bounds
  return lo + static_cast<int>(uniform_u32(g, static_cast<std::uint32_t>(hi - lo + 1)));
}

// Uniform in [0, 1) with 24 bits of mantissa, exactly representable in float.
inline float uniform_unit(std::mt19937& g) {
  return static_cast<float>(g() >> 8) * (1.0f / 16777216.0f);
}

inline float uniform_real(std::mt19937& g, float lo, float hi) {
  return lo + (hi - lo) * uniform_unit(g);
}

inline double uniform_unit_f64(std::mt19937& g) {
  const std::uint64_t hi = g() >> 6;  // 26 bits
  const std::uint64_t lo = g() >> 5;  // 27 bits
  return static_cast<double>((hi << 27) | lo) * (1.0 / 9007199254740992.0);
}

inline bool coin(std::mt19937& g) { return (g() & 1u) != 0; }

template <typename T>
void fisher_yates(std::vector<T>& v, std::mt19937& g) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = uniform_u32(g, static_cast<std::uint32_t>(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace grainnet::rng
