#include "polarlattice/polar_construction.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "polarlattice/parallel.hpp"

namespace polarlattice {

namespace {

constexpr std::size_t kTrialBlock = 64;

void require_power_of_two(std::size_t n) {
  if (!is_power_of_two(n))
    throw std::invalid_argument("block length must be a power of two, got " + std::to_string(n));
}

double clamp_llr(double l) {
  if (std::isnan(l)) return 0.0;
  return std::clamp(l, -kLlrCap, kLlrCap);
}

}  // namespace

void polar_transform_inplace(Bits& a) {
  const std::size_t n = a.size();
  require_power_of_two(n);
  for (std::size_t h = 1; h < n; h <<= 1)
    for (std::size_t blk = 0; blk < n; blk += 2 * h)
      for (std::size_t j = blk; j < blk + h; ++j) a[j] ^= a[j + h];
}

Bits polar_transform(const Bits& u) {
  Bits x = u;
  polar_transform_inplace(x);
  return x;
}

std::vector<std::int64_t> integer_polar_transform(const Bits& u) {
  const std::size_t n = u.size();
  require_power_of_two(n);
  std::vector<std::int64_t> a(u.begin(), u.end());
  for (std::size_t h = 1; h < n; h <<= 1)
    for (std::size_t blk = 0; blk < n; blk += 2 * h)
      for (std::size_t j = blk; j < blk + h; ++j) a[j] += a[j + h];
  return a;
}

double coset_llr(const ScaledIntegerLattice& lattice, double sigma, double t, double base, double shift) {
  const double d = t - base;
  return clamp_llr(log_aliased_density(lattice, sigma, d) - log_aliased_density(lattice, sigma, d - shift));
}

double level_llr(double t, const Bits& prev_bits, const PartitionChain& chain, const TestChannelParams& params,
                 int level) {
  if (level < 1 || level > chain.levels()) throw std::out_of_range("level must lie in [1, r]");
  if (prev_bits.size() + 1 < static_cast<std::size_t>(level))
    throw std::invalid_argument("level_llr needs the labels of every lower level");
  double label = 0.0;
  for (int j = 1; j < level; ++j) label += std::ldexp(static_cast<double>(prev_bits[j - 1] & 1u), j - 1);
  return coset_llr(chain.lattice(level), std::sqrt(params.sigma_tilde_sq), t, chain.eta() * label,
                   chain.spacing(level - 1));
}

double boxplus(double a, double b) {
  // The tanh form keeps relative accuracy for small inputs, where the log1p
  // form below cancels; the log1p form avoids atanh(1) for large ones.
  if (std::min(std::abs(a), std::abs(b)) < 8.0) return 2.0 * std::atanh(std::tanh(0.5 * a) * std::tanh(0.5 * b));
  const double sum = std::abs(a + b);
  const double diff = std::abs(a - b);
  double out = std::copysign(1.0, a) * std::copysign(1.0, b) * std::min(std::abs(a), std::abs(b));
  if (sum < 40.0) out += std::log1p(std::exp(-sum));
  if (diff < 40.0) out -= std::log1p(std::exp(-diff));
  return out;
}

ScDecoder::ScDecoder(std::size_t n) : n_(n), u_(n), x_(n), decision_(n) {
  require_power_of_two(n);
  for (std::size_t len = n / 2; len >= 1; len /= 2) scratch_.emplace_back(len);
}

void ScDecoder::run(const double* channel_llr, ScMode mode, const std::uint8_t* frozen,
                    const std::uint8_t* frozen_values, const std::uint8_t* genie_u, Rng* rng) {
  if (mode == ScMode::genie && genie_u == nullptr) throw std::invalid_argument("genie mode needs the true bits");
  if (mode == ScMode::sample && rng == nullptr) throw std::invalid_argument("sample mode needs a generator");
  mode_ = mode;
  frozen_ = frozen;
  frozen_values_ = frozen_values;
  genie_ = genie_u;
  rng_ = rng;
  recurse(channel_llr, n_, 0, x_.data(), 0);
}

void ScDecoder::recurse(const double* llr, std::size_t n, std::size_t u_offset, std::uint8_t* x_out,
                        std::size_t depth) {
  if (n == 1) {
    decide(u_offset, llr[0]);
    x_out[0] = u_[u_offset];
    return;
  }
  const std::size_t h = n / 2;
  double* child = scratch_[depth].data();
  for (std::size_t j = 0; j < h; ++j) child[j] = boxplus(llr[j], llr[j + h]);
  recurse(child, h, u_offset, x_out, depth + 1);
  for (std::size_t j = 0; j < h; ++j) child[j] = llr[j + h] + (x_out[j] ? -llr[j] : llr[j]);
  recurse(child, h, u_offset + h, x_out + h, depth + 1);
  for (std::size_t j = 0; j < h; ++j) x_out[j] ^= x_out[j + h];
}

void ScDecoder::decide(std::size_t i, double llr) {
  llr = clamp_llr(llr);
  decision_[i] = llr;
  std::uint8_t bit = 0;
  if (mode_ == ScMode::genie) {
    bit = genie_[i] & 1u;
  } else if (frozen_ != nullptr && frozen_[i]) {
    bit = frozen_values_ != nullptr ? (frozen_values_[i] & 1u) : 0;
  } else if (mode_ == ScMode::sample) {
    const double p1 = 1.0 / (1.0 + std::exp(llr));
    bit = rng_->uniform() < p1 ? 1 : 0;
  } else {
    bit = llr < 0.0 ? 1 : 0;
  }
  u_[i] = bit;
}

std::vector<double> ScDecoder::posteriors() const {
  std::vector<double> p(n_);
  for (std::size_t i = 0; i < n_; ++i) p[i] = 1.0 / (1.0 + std::exp(decision_[i]));
  return p;
}

ScResult sc_pass(const std::vector<double>& observations, const std::vector<double>& base, const PartitionChain& chain,
                 const TestChannelParams& params, int level, ScMode mode, const Bits& frozen,
                 const Bits& frozen_values, const Bits* genie_u, Rng* rng) {
  const std::size_t n = observations.size();
  if (base.size() != n) throw std::invalid_argument("coset base must match the observation length");
  if (level < 1 || level > chain.levels()) throw std::out_of_range("level must lie in [1, r]");
  const auto lattice = chain.lattice(level);
  const double shift = chain.spacing(level - 1);
  const double sigma = std::sqrt(params.sigma_tilde_sq);
  std::vector<double> llr(n);
  for (std::size_t j = 0; j < n; ++j) llr[j] = coset_llr(lattice, sigma, observations[j], base[j], shift);

  ScDecoder dec(n);
  dec.run(llr.data(), mode, frozen.empty() ? nullptr : frozen.data(),
          frozen_values.empty() ? nullptr : frozen_values.data(), genie_u ? genie_u->data() : nullptr, rng);
  return {dec.u(), dec.x(), dec.posteriors()};
}

ErasurePlug::ErasurePlug(double epsilon) : epsilon_(epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("erasure probability must lie in [0, 1]");
}

double ErasurePlug::output(std::uint8_t bit, Rng& rng) const {
  if (rng.uniform() < epsilon_) return 0.0;
  return bit ? -1.0 : 1.0;
}

double ErasurePlug::llr(double y) const {
  if (y > 0.0) return kLlrCap;
  if (y < 0.0) return -kLlrCap;
  return 0.0;
}

double ErasurePlug::transition(double y, std::uint8_t bit) const {
  if (y == 0.0) return epsilon_;
  return (y > 0.0) == (bit == 0) ? 1.0 - epsilon_ : 0.0;
}

PartitionPlug::PartitionPlug(const PartitionChain& chain, int level, double sigma)
    : lattice_(chain.lattice(level)), shift_(chain.spacing(level - 1)), sigma_(sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
}

double PartitionPlug::output(std::uint8_t bit, Rng& rng) const { return (bit ? shift_ : 0.0) + sigma_ * rng.normal(); }

double PartitionPlug::llr(double y) const { return coset_llr(lattice_, sigma_, y, 0.0, shift_); }

double PartitionPlug::transition(double y, std::uint8_t bit) const {
  return aliased_density(lattice_, sigma_, y - (bit ? shift_ : 0.0));
}

std::vector<double> exact_bhattacharyya_erasure(double epsilon, std::size_t n) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("erasure probability must lie in [0, 1]");
  require_power_of_two(n);
  if (n > 1024) throw std::invalid_argument("exact erasure recursion is limited to N <= 1024");
  if (n == 1) return {epsilon};
  // Natural order: the first half of u sees the degraded channel, each half
  // then polarizes on its own.
  auto out = exact_bhattacharyya_erasure(2.0 * epsilon - epsilon * epsilon, n / 2);
  const auto upper = exact_bhattacharyya_erasure(epsilon * epsilon, n / 2);
  out.insert(out.end(), upper.begin(), upper.end());
  return out;
}

BhattacharyyaEstimate estimate_bhattacharyya(const ChannelPlug& plug, std::size_t n, std::size_t m,
                                             std::uint64_t seed, std::uint64_t stream_base, unsigned workers) {
  require_power_of_two(n);
  if (m < 1000) throw std::invalid_argument("Bhattacharyya estimation needs at least 1000 trials");
  const std::size_t blocks = (m + kTrialBlock - 1) / kTrialBlock;
  std::vector<std::vector<double>> sums(blocks), squares(blocks);

  parallel_for(blocks, workers, [&](std::size_t b) {
    ScDecoder dec(n);
    Bits u(n);
    std::vector<double> llr(n);
    std::vector<double> s(n, 0.0), s2(n, 0.0);
    const std::size_t first = b * kTrialBlock;
    const std::size_t last = std::min(m, first + kTrialBlock);
    for (std::size_t k = first; k < last; ++k) {
      Rng rng = Rng::substream(seed, Stream::construction, stream_base + k);
      for (auto& bit : u) bit = rng.bit();
      const Bits x = polar_transform(u);
      for (std::size_t j = 0; j < n; ++j) llr[j] = plug.llr(plug.output(x[j], rng));
      dec.run(llr.data(), ScMode::genie, nullptr, nullptr, u.data(), nullptr);
      const auto& d = dec.decision_llr();
      for (std::size_t i = 0; i < n; ++i) {
        const double z = 1.0 / std::cosh(0.5 * d[i]);
        s[i] += z;
        s2[i] += z * z;
      }
    }
    sums[b] = std::move(s);
    squares[b] = std::move(s2);
  });

  std::vector<double> total(n, 0.0), total2(n, 0.0);
  for (std::size_t b = 0; b < blocks; ++b)
    for (std::size_t i = 0; i < n; ++i) {
      total[i] += sums[b][i];
      total2[i] += squares[b][i];
    }
  BhattacharyyaEstimate est{std::vector<double>(n), std::vector<double>(n)};
  const double md = static_cast<double>(m);
  for (std::size_t i = 0; i < n; ++i) {
    const double mean = total[i] / md;
    const double var = std::max(0.0, (total2[i] - md * mean * mean) / (md - 1.0));
    est.z[i] = mean;
    est.se[i] = std::sqrt(var / md);
  }
  return est;
}

BhattacharyyaEstimate estimate_bhattacharyya(int level, const PartitionChain& chain, const TestChannelParams& params,
                                             std::size_t n, std::size_t m, std::uint64_t seed, unsigned workers) {
  const PartitionPlug plug(chain, level, std::sqrt(params.sigma_tilde_sq));
  return estimate_bhattacharyya(plug, n, m, seed, static_cast<std::uint64_t>(level) << 40, workers);
}

double selection_threshold(std::size_t n, double beta) {
  return -std::expm1(-std::pow(static_cast<double>(n), beta) * std::numbers::ln2);
}

std::size_t SetSelection::info_size() const {
  return static_cast<std::size_t>(std::count(info.begin(), info.end(), std::uint8_t{1}));
}

SetSelection select_sets(const std::vector<double>& z, double beta) {
  if (!(beta > 0.0 && beta < 0.5)) throw std::invalid_argument("beta must lie in (0, 1/2)");
  SetSelection sel;
  sel.threshold = selection_threshold(z.size(), beta);
  sel.info.resize(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) sel.info[i] = z[i] < sel.threshold ? 1 : 0;
  return sel;
}

}  // namespace polarlattice
