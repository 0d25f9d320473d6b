#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace plaw {

// Derives an independent stream seed from a base seed and a stream index
// (splitmix64 finalizer). Replicates, chains and predictive draws each get
// their own stream so results do not depend on execution order.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seedable random stream with the hand-rolled samplers used throughout.
// All variate algorithms live here (rather than <random> distributions) so
// that a given seed reproduces the same sequence on every platform.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : eng_(seed) {}

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1).
  double uniform_pos() {
    for (;;) {
      double u = uniform01();
      if (u > 0.0) return u;
    }
  }

  // Uniform integer in [0, n), rejection against modulo bias.
  std::uint64_t uniform_below(std::uint64_t n) {
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % n;
    for (;;) {
      std::uint64_t x = eng_();
      if (x < limit) return x % n;
    }
  }

  // Standard normal, Marsaglia polar method with one cached variate.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  double exponential() { return -std::log(uniform_pos()); }

  // Poisson: product-of-uniforms for small means, Hormann's PTRS
  // transformed rejection for large means.
  long long poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean < 30.0) {
      const double limit = std::exp(-mean);
      long long k = 0;
      double p = 1.0;
      do {
        ++k;
        p *= uniform_pos();
      } while (p > limit);
      return k - 1;
    }
    return poisson_ptrs(mean);
  }

  // Gamma(shape, scale), Marsaglia-Tsang squeeze.
  double gamma(double shape, double scale) {
    if (shape < 1.0) {
      const double u = uniform_pos();
      return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_pos();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
    }
  }

 private:
  long long poisson_ptrs(double mean) {
    const double b = 0.931 + 2.53 * std::sqrt(mean);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double log_mean = std::log(mean);
    for (;;) {
      const double u = uniform01() - 0.5;
      const double v = uniform_pos();
      const double us = 0.5 - std::abs(u);
      const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
      if (us >= 0.07 && v <= v_r) return static_cast<long long>(k);
      if (k < 0.0 || (us < 0.013 && v > us)) continue;
      if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
          k * log_mean - mean - std::lgamma(k + 1.0))
        return static_cast<long long>(k);
    }
  }

  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace plaw
