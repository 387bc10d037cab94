#pragma once

#include <cmath>
#include <cstdint>

namespace traffic {

// splitmix64 finalizer; passes standard statistical batteries when used as a
// counter hash.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Counter-based generator. Output depends only on (key, counter), so any
// (seed, step, cell, lane) tuple maps to a reproducible stream regardless of
// how work is scheduled across threads.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static std::uint64_t derive(std::uint64_t a, std::uint64_t b = 0,
                              std::uint64_t c = 0, std::uint64_t d = 0) {
    std::uint64_t k = mix64(a);
    k = mix64(k ^ b);
    k = mix64(k ^ c);
    k = mix64(k ^ d);
    return k;
  }

  std::uint64_t next_u64() { return mix64(key_ ^ mix64(counter_++)); }

  // uniform in [0,1)
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * next_double(); }

  bool bernoulli(double p) { return next_double() < p; }

  // index in [0, n)
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

  // zero-mean uniform law with the requested variance
  double symmetric_uniform(double variance) {
    if (variance <= 0.0) return 0.0;
    double half = std::sqrt(3.0 * variance);
    return uniform(-half, half);
  }

  double normal() {
    double u1 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  // Marsaglia-Tsang; the shape<1 boost keeps it valid for all positive shapes.
  double gamma(double shape) {
    if (shape < 1.0) {
      double u = next_double();
      while (u <= 0.0) u = next_double();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / (3.0 * std::sqrt(d));
    for (;;) {
      double x, t;
      do {
        x = normal();
        t = 1.0 + c * x;
      } while (t <= 0.0);
      t = t * t * t;
      const double u = next_double();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * t;
      if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - t + std::log(t))) return d * t;
    }
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace traffic
