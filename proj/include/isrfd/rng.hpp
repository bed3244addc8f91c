#pragma once

#include <cstdint>
#include <random>

namespace isrfd {

/// SplitMix64 finalizer. Used everywhere a child seed is derived from a parent
/// seed so that serial and parallel runs consume identical streams.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Child seed for substream `salt` of a parent seed.
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t salt) {
  return splitmix64(parent ^ (0xA0761D6478BD642FULL * (salt + 1)));
}

/// Seeded random stream passed explicitly to every stochastic operation.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

  double gaussian(double sigma) {
    std::normal_distribution<double> d(0.0, sigma);
    return d(engine_);
  }
  double uniform() {
    std::uniform_real_distribution<double> d(0.0, 1.0);
    return d(engine_);
  }
  /// Uniform integer in [0, n).
  int uniform_int(int n) {
    std::uniform_int_distribution<int> d(0, n - 1);
    return d(engine_);
  }
  /// Independent child stream; `salt` distinguishes siblings.
  RandomStream derive(std::uint64_t salt) const { return RandomStream(derive_seed(seed_, salt)); }

  std::uint64_t seed() const { return seed_; }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace isrfd
