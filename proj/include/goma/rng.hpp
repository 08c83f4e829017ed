#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace goma {

// Seeded generator with platform-independent draws. std::*_distribution is
// implementation-defined, so the conversions are done by hand.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : engine_(seed) {}

  uint64_t next() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). n must be > 0.
  uint64_t below(uint64_t n) { return engine_() % n; }

  bool bernoulli(double p) { return uniform() < p; }

  // Index drawn from unnormalized non-negative weights; -1 when all are zero.
  int categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (total <= 0.0) return -1;
    double r = uniform() * total;
    int last = -1;
    for (size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] <= 0.0) continue;
      last = static_cast<int>(i);
      if (r < weights[i]) return last;
      r -= weights[i];
    }
    return last;
  }

 private:
  std::mt19937_64 engine_;
};

inline uint64_t mix_seed(uint64_t a, uint64_t b) {
  uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

}  // namespace goma
