#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace snntcl {

/// Named deterministic RNG streams. Every random draw in the project comes
/// from a stream derived from (seed, name), so adding a consumer with a new
/// name never perturbs existing ones.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view name)
      : engine_(mix(seed, name)) {}

  std::mt19937_64& engine() { return engine_; }

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal(double mean, double stddev) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }
  /// Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
  }
  bool bernoulli(double p) {
    return std::bernoulli_distribution(p)(engine_);
  }

  static std::uint64_t mix(std::uint64_t seed, std::string_view name) {
    // FNV-1a over the name, folded with the seed via splitmix64.
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : name) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL + h;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace snntcl
