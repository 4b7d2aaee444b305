#pragma once

#include <cstdint>
#include <random>

namespace lsh {

/// splitmix64 finalizer; used to derive independent stream seeds from a
/// (seed, counter) pair.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t counter);

/// Portable random source. Only the raw mt19937_64 output is used, so
/// streams are bit-identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1].
  double uniform_open();
  double normal();
  /// Gamma(shape, 1) by Marsaglia-Tsang.
  double gamma(double shape);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace lsh
