#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "polarlattice/partition_chain.hpp"
#include "polarlattice/polar_construction.hpp"
#include "polarlattice/rng.hpp"
#include "polarlattice/test_channel.hpp"

namespace polarlattice {

class ConstructionRejected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotApplicable : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class FrozenPolicyKind { random_dither, fixed };

// random_dither: frozen bits drawn once from the quantizer seed.
// fixed: bits drawn from offset_seed, or taken from explicit_bits (one length-N
// vector per level; entries at information indices are ignored).
struct FrozenPolicy {
  FrozenPolicyKind kind = FrozenPolicyKind::random_dither;
  std::uint64_t offset_seed = 0;
  std::vector<Bits> explicit_bits;

  static FrozenPolicy random_dither() { return {}; }
  static FrozenPolicy fixed_from_seed(std::uint64_t seed) { return {FrozenPolicyKind::fixed, seed, {}}; }
  static FrozenPolicy fixed_bits(std::vector<Bits> bits) { return {FrozenPolicyKind::fixed, 0, std::move(bits)}; }
};

struct PolarLevel {
  int level = 0;
  std::vector<double> z;
  std::vector<double> z_se;
  Bits info;
  double threshold = 0.0;
  std::size_t flagged = 0;  // indices within 3 standard errors of the threshold

  std::size_t info_size() const;
};

struct BuildConfig {
  std::size_t n = 1024;
  double beta = 0.3;
  std::size_t mc_trials = 10000;
  FrozenPolicy policy;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  bool enforce_conditions = true;
};

enum class QuantizeMode { sample, map };

struct QuantizationResult {
  std::vector<Bits> u_levels;
  std::vector<std::int64_t> residual;
  std::vector<double> x;
  double distortion = 0.0;  // ||alpha y - x||^2 / N
};

struct RateVolume {
  double rate = 0.0;                  // R_C in bits per dimension
  double log2_volume_per_dim = 0.0;   // log2(eta 2^r) - R_C
};

class PolarLatticeQuantizer {
 public:
  static PolarLatticeQuantizer build(const PartitionChain& chain, const TestChannelParams& params,
                                     const BuildConfig& config);

  // Quantizer with prescribed information sets and no Z estimates, e.g. the
  // full-rate and zero-rate lattices. Nesting is still enforced.
  static PolarLatticeQuantizer from_sets(const PartitionChain& chain, const TestChannelParams& params,
                                         std::vector<Bits> info, const FrozenPolicy& policy, std::uint64_t seed);

  // Restore a quantizer from stored parts; no estimation, no promotion.
  static PolarLatticeQuantizer restore(const PartitionChain& chain, const TestChannelParams& params,
                                       std::vector<PolarLevel> levels, FrozenPolicyKind kind,
                                       std::vector<Bits> frozen_bits, std::uint64_t seed, double beta,
                                       std::size_t mc_trials, std::size_t promotions);

  // Same lattice and frozen bits under different source parameters.
  PolarLatticeQuantizer with_params(const TestChannelParams& params) const;
  PolarLatticeQuantizer with_frozen_policy(const FrozenPolicy& policy) const;

  QuantizationResult quantize(const std::vector<double>& y, Rng& rng, QuantizeMode mode = QuantizeMode::sample) const;

  // eta sum_l 2^(l-1) psi(frozen bits of level l); throws NotApplicable under
  // the random-dither policy.
  std::vector<double> frozen_offset() const;

  // Membership in the unshifted lattice: each level's label must be a codeword
  // whose frozen coordinates are zero, the rest is a 2^r Z^N residual.
  bool contains(const std::vector<double>& point) const;

  RateVolume rate_and_volume() const;

  const PartitionChain& chain() const noexcept { return chain_; }
  const TestChannelParams& params() const noexcept { return params_; }
  std::size_t n() const noexcept { return n_; }
  const std::vector<PolarLevel>& levels() const noexcept { return levels_; }
  FrozenPolicyKind policy_kind() const noexcept { return kind_; }
  const std::vector<Bits>& frozen_bits() const noexcept { return frozen_bits_; }
  std::uint64_t seed() const noexcept { return seed_; }
  double beta() const noexcept { return beta_; }
  std::size_t mc_trials() const noexcept { return mc_trials_; }
  std::size_t promotions() const noexcept { return promotions_; }

 private:
  PolarLatticeQuantizer(const PartitionChain& chain, const TestChannelParams& params) : chain_(chain), params_(params) {}

  void enforce_nesting();
  void materialize_frozen(const FrozenPolicy& policy);

  PartitionChain chain_;
  TestChannelParams params_;
  std::size_t n_ = 0;
  std::vector<PolarLevel> levels_;
  FrozenPolicyKind kind_ = FrozenPolicyKind::random_dither;
  std::vector<Bits> frozen_bits_;
  std::uint64_t seed_ = 0;
  double beta_ = 0.0;
  std::size_t mc_trials_ = 0;
  std::size_t promotions_ = 0;
};

// Versioned text format, first line "POLARLATTICE-QUANTIZER 1". Reals are
// written as hex floats so a load reproduces the quantizer bit for bit.
void save_quantizer(const PolarLatticeQuantizer& q, std::ostream& out);
PolarLatticeQuantizer load_quantizer(std::istream& in);
void save_quantizer(const PolarLatticeQuantizer& q, const std::string& path);
PolarLatticeQuantizer load_quantizer(const std::string& path);

}  // namespace polarlattice
