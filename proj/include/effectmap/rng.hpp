#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace effectmap {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from a master seed and a key path.
inline std::uint64_t stream_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  return Rng(stream_seed(seed, keys));
}

// Stream tags keep unrelated draws apart.
namespace streams {
inline constexpr std::uint64_t design = 1;
inline constexpr std::uint64_t noise = 2;
inline constexpr std::uint64_t oracle = 3;
inline constexpr std::uint64_t shapley = 4;
inline constexpr std::uint64_t bootstrap = 5;
inline constexpr std::uint64_t restart = 6;
inline constexpr std::uint64_t teacher = 7;
inline constexpr std::uint64_t trial = 8;
inline constexpr std::uint64_t context = 9;
}  // namespace streams

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace effectmap
