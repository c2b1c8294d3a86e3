#pragma once

#include <cstddef>
#include <cstdint>
#include <numbers>
#include <vector>

#include "polarlattice/partition_chain.hpp"
#include "polarlattice/rng.hpp"
#include "polarlattice/test_channel.hpp"

namespace polarlattice {

using Bits = std::vector<std::uint8_t>;

// LLRs are clamped to this magnitude.
inline constexpr double kLlrCap = 700.0 * std::numbers::log2e;

// x = u G_N over GF(2), natural index order. Throws std::invalid_argument
// unless the length is a power of two.
void polar_transform_inplace(Bits& bits);
Bits polar_transform(const Bits& u);

// The same butterfly over the integers: returns sum_j u_j psi(g_j), the real
// sum of the selected rows of G_N. Reduces to polar_transform mod 2.
std::vector<std::int64_t> integer_polar_transform(const Bits& u);

// log f(t - base) - log f(t - base - shift) for the aliased Gaussian on `lattice`.
double coset_llr(const ScaledIntegerLattice& lattice, double sigma, double t, double base, double shift);

// LLR of the level-l bit given the lower-level labels prev_bits = x_1..x_{l-1}
// of this coordinate: representatives eta (sum_j 2^(j-1) x_j + 2^(l-1) b).
double level_llr(double t, const Bits& prev_bits, const PartitionChain& chain, const TestChannelParams& params,
                 int level);

// 2 atanh(tanh(a/2) tanh(b/2)) without overflow.
double boxplus(double a, double b);

enum class ScMode { sample, map, genie };

// Successive cancellation over channel LLRs log P(y|0)/P(y|1) of the code bits
// x = u G_N. Scratch is sized once per block length and reused.
class ScDecoder {
 public:
  explicit ScDecoder(std::size_t n);

  std::size_t size() const noexcept { return n_; }

  // frozen[i] != 0 forces u_i = frozen_values[i] (sample and map modes).
  // genie mode follows genie_u everywhere. rng is only used by sample mode.
  void run(const double* channel_llr, ScMode mode, const std::uint8_t* frozen, const std::uint8_t* frozen_values,
           const std::uint8_t* genie_u, Rng* rng);

  const Bits& u() const noexcept { return u_; }
  const Bits& x() const noexcept { return x_; }
  // LLR of u_i given u_1..u_{i-1} and the observations.
  const std::vector<double>& decision_llr() const noexcept { return decision_; }
  // P(u_i = 1 | u_1..u_{i-1}, observations).
  std::vector<double> posteriors() const;

 private:
  void recurse(const double* llr, std::size_t n, std::size_t u_offset, std::uint8_t* x_out, std::size_t depth);
  void decide(std::size_t i, double llr);

  std::size_t n_;
  std::vector<std::vector<double>> scratch_;
  Bits u_, x_;
  std::vector<double> decision_;
  ScMode mode_ = ScMode::map;
  const std::uint8_t* frozen_ = nullptr;
  const std::uint8_t* frozen_values_ = nullptr;
  const std::uint8_t* genie_ = nullptr;
  Rng* rng_ = nullptr;
};

struct ScResult {
  Bits u;
  Bits x;
  std::vector<double> posteriors;
};

// One SC pass over a level's observations. `base` holds the coset base of each
// coordinate (eta times the lower-level label sum); the level-l lattice decides.
ScResult sc_pass(const std::vector<double>& observations, const std::vector<double>& base, const PartitionChain& chain,
                 const TestChannelParams& params, int level, ScMode mode, const Bits& frozen,
                 const Bits& frozen_values, const Bits* genie_u, Rng* rng);

// Binary-input symmetric channel used for Bhattacharyya estimation.
class ChannelPlug {
 public:
  virtual ~ChannelPlug() = default;
  virtual double output(std::uint8_t bit, Rng& rng) const = 0;
  virtual double llr(double y) const = 0;
  // P(y | 0) = P(reflect(y) | 1).
  virtual double reflect(double y) const = 0;
  // Density (or mass) of y given the input bit.
  virtual double transition(double y, std::uint8_t bit) const = 0;
};

// Outputs +1 for bit 0, -1 for bit 1 and 0 for an erasure.
class ErasurePlug final : public ChannelPlug {
 public:
  explicit ErasurePlug(double epsilon);
  double output(std::uint8_t bit, Rng& rng) const override;
  double llr(double y) const override;
  double reflect(double y) const override { return -y; }
  double transition(double y, std::uint8_t bit) const override;

 private:
  double epsilon_;
};

// The L_{l-1}/L_l channel: y = b eta 2^(l-1) + n, n ~ N(0, sigma^2), read mod L_l.
class PartitionPlug final : public ChannelPlug {
 public:
  PartitionPlug(const PartitionChain& chain, int level, double sigma);
  double output(std::uint8_t bit, Rng& rng) const override;
  double llr(double y) const override;
  double reflect(double y) const override { return shift_ - y; }
  double transition(double y, std::uint8_t bit) const override;

 private:
  ScaledIntegerLattice lattice_;
  double shift_;
  double sigma_;
};

// Z values of the N synthesized channels of an erasure channel. N <= 1024.
std::vector<double> exact_bhattacharyya_erasure(double epsilon, std::size_t n);

struct BhattacharyyaEstimate {
  std::vector<double> z;
  std::vector<double> se;
};

// Monte-Carlo Z_i = E[2 sqrt(p_i (1 - p_i))] from genie SC on m fresh channel
// uses. Trial k draws from substream (seed, construction, stream_base + k).
// Throws std::invalid_argument when m < 1000.
BhattacharyyaEstimate estimate_bhattacharyya(const ChannelPlug& plug, std::size_t n, std::size_t m,
                                             std::uint64_t seed, std::uint64_t stream_base, unsigned workers);

BhattacharyyaEstimate estimate_bhattacharyya(int level, const PartitionChain& chain, const TestChannelParams& params,
                                             std::size_t n, std::size_t m, std::uint64_t seed, unsigned workers);

// 1 - 2^(-N^beta), evaluated without cancellation.
double selection_threshold(std::size_t n, double beta);

struct SetSelection {
  Bits info;  // 1 for information indices
  double threshold = 0.0;
  std::size_t info_size() const;
};

// Information set: indices with z below selection_threshold. 0 < beta < 1/2.
SetSelection select_sets(const std::vector<double>& z, double beta);

}  // namespace polarlattice
