#pragma once

#include <cstdint>
#include <random>

namespace toolseq {

// Deterministic RNG: identical seed => identical draws, forever.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform(double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(gen_);
  }

  // inclusive bounds
  int uniform_int(int lo, int hi) {
    std::uniform_int_distribution<int> d(lo, hi);
    return d(gen_);
  }

  double gaussian(double mean, double stddev) {
    std::normal_distribution<double> d(mean, stddev);
    return d(gen_);
  }

  int poisson(double mean) {
    if (mean <= 0.0) return 0;
    std::poisson_distribution<int> d(mean);
    return d(gen_);
  }

  std::uint64_t next_u64() { return gen_(); }

  // Independent stream for parallel work, derived from a base seed.
  static Rng derive(std::uint64_t seed, std::uint64_t index) {
    return Rng(seed ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace toolseq
