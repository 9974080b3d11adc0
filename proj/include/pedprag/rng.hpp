#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

namespace pedprag {

/// Seeded random stream with bit-portable draws.
///
/// std::mt19937_64 output is fully specified by the standard; the draw
/// helpers below avoid the standard <random> distributions, whose results
/// differ between library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  /// SplitMix64 finalizer, used to derive substream seeds.
  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    return mix(a ^ mix(b));
  }

  /// Independent stream for a named sub-task; does not advance this stream.
  Rng fork(std::uint64_t tag) const { return Rng(mix(seed_, tag)); }

  std::uint64_t seed() const { return seed_; }

  /// Uniform double in [0, 1), 53 bits of entropy.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  int uniform_int(int n) {
    if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
    int k = static_cast<int>(uniform() * static_cast<double>(n));
    return k < n ? k : n - 1;
  }

  /// Draw an index proportional to the given nonnegative weights.
  int categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (total <= 0.0) throw std::invalid_argument("categorical: weights sum to zero");
    double u = uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size() - 1);  // fp slack on the last bin
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace pedprag
