#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ffq {

// Counter-based seed derivation: a master seed and a stream name (plus
// optional indices) map to an independent 64-bit seed. Results never depend
// on how work is scheduled, only on (master, name, indices).
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a(std::string_view s);
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t i = 0,
                          std::uint64_t j = 0);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double normal(double mean = 0.0, double sigma = 1.0) {
    return std::normal_distribution<double>(mean, sigma)(engine_);
  }
  bool bernoulli(double p) { return uniform() < p; }
  std::uint64_t next() { return engine_(); }
  int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  // Child stream, deterministic given the parent state.
  Rng split() { return Rng(splitmix64(engine_())); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ffq
