#pragma once

#include <cstdint>
#include <random>

namespace polarlattice {

// Named substream families. A (seed, family, index) triple always maps to the
// same generator state, which is what makes trial-parallel runs reproducible.
enum class Stream : std::uint64_t {
  construction = 1,
  frozen_bits = 2,
  evaluation = 3,
  offsets = 4,
  offset_eval = 5,
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  static Rng substream(std::uint64_t seed, Stream family, std::uint64_t index);

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double normal();
  std::uint8_t bit();

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

// Derives a child seed, e.g. one fixed frozen-bit assignment per offset index.
std::uint64_t derive_seed(std::uint64_t seed, Stream family, std::uint64_t index);

}  // namespace polarlattice
