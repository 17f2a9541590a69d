#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

// Deterministic sampling helpers. mt19937_64 output is fully specified by the
// standard, but the std distributions are not; everything that must be
// bit-reproducible across platforms goes through the explicit transforms here.
namespace sfb::rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream seed derived from (seed, a, b), e.g. per replication.
inline std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(seed ^ splitmix64(a ^ splitmix64(b + 0x632be59bd9b4e019ULL)));
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed) { return Engine(splitmix64(seed)); }

// Uniform in [0, 1).
inline double uniform01(Engine& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

inline double uniform(Engine& g, double a, double b) { return a + (b - a) * uniform01(g); }

// Unbiased-enough bounded integer in [0, m) via 128-bit multiply.
inline std::uint64_t below(Engine& g, std::uint64_t m) {
  return static_cast<std::uint64_t>((static_cast<__uint128_t>(g()) * m) >> 64);
}

// Standard normal via Box-Muller; consumes two words per draw.
inline double normal(Engine& g) {
  double u1 = 1.0 - uniform01(g);  // (0, 1]
  double u2 = uniform01(g);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline double exponential(Engine& g, double rate) {
  return -std::log(1.0 - uniform01(g)) / rate;
}

// +1 with probability half, else -1.
inline int sign_flip(Engine& g) { return uniform01(g) < 0.5 ? 1 : -1; }

template <class T>
void shuffle(std::vector<T>& v, Engine& g) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(below(g, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace sfb::rng
