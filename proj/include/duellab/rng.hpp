#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace duellab {

// Random stream used everywhere in the library.
//
// Engine: std::mt19937_64 (fully specified by the standard). Gaussians come
// from std::normal_distribution and uniforms from
// std::uniform_real_distribution, so sequences are bit-exact within one
// standard library build but not promised across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }

  // Fresh distribution per call: no cached second variate leaks between uses.
  double normal(double mean = 0.0, double stddev = 1.0) {
    if (!(stddev > 0.0)) return mean;
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }

  bool bernoulli(double p) { return uniform() < p; }

  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_); }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// 64-bit FNV-1a.
constexpr std::uint64_t hash_string(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Seed of an independent stream for one (seed, env, agent, purpose) cell.
// The result does not depend on scheduling or on how many other streams exist.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view env, std::string_view agent,
                                    std::string_view purpose) noexcept {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ hash_string(env));
  h = mix64(h ^ hash_string(agent));
  h = mix64(h ^ hash_string(purpose));
  return h;
}

inline Rng derive_stream(std::uint64_t seed, std::string_view env, std::string_view agent,
                         std::string_view purpose) {
  return Rng(derive_seed(seed, env, agent, purpose));
}

}  // namespace duellab
