#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace crm {

/// splitmix64 finalizer; used to derive well-separated child seeds.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// A seeded random stream. Every sampler takes one explicitly, so results
/// depend only on the seed and never on scheduling.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(mix64(seed)) {}

  /// Stream number `index` derived from `master`; independent of the order in
  /// which children are requested.
  static Stream child(std::uint64_t master, std::uint64_t index) {
    return Stream(mix64(master) ^ mix64(index * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL));
  }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    for (;;) {
      const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
      if (u > 0.0) return u;
    }
  }

  /// Unit-rate exponential.
  double exponential() { return -std::log(uniform()); }

  double normal(double mean, double sd) {
    return std::normal_distribution<double>(mean, sd)(engine_);
  }

  /// Gamma with the given shape and rate.
  double gamma(double shape, double rate) {
    return std::gamma_distribution<double>(shape, 1.0 / rate)(engine_);
  }

  double beta(double alpha, double beta) {
    const double x = gamma(alpha, 1.0);
    const double y = gamma(beta, 1.0);
    if (x + y == 0.0) return alpha >= beta ? 1.0 : 0.0;
    return x / (x + y);
  }

  bool bernoulli(double p) { return uniform() < p; }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace crm
