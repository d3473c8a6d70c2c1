#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace paa {

/// splitmix64 mixing step; used to derive independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seedable random source with a fully specified output path:
/// mt19937_64 -> top 53 bits -> uniform double -> Box-Muller normal.
/// std::*_distribution is avoided on purpose so that sequences are
/// identical across standard library implementations.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : seed_(seed), eng_(seed) {}

  /// Uniform on [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Standard normal via the trigonometric Box-Muller transform.
  /// Pairs are generated together; the second value is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Independent child stream; depends only on (seed, index), never on draw
  /// order, so parallel replicates are reproducible by construction.
  Rng stream(std::uint64_t index) const {
    return Rng(splitmix64(seed_ + 0x9E3779B97F4A7C15ULL * (index + 1)));
  }

  std::uint64_t seed() const { return seed_; }

private:
  std::uint64_t seed_;
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace paa
