#include "polarlattice/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace polarlattice {

std::size_t PolarLevel::info_size() const {
  return static_cast<std::size_t>(std::count(info.begin(), info.end(), std::uint8_t{1}));
}

PolarLatticeQuantizer PolarLatticeQuantizer::build(const PartitionChain& chain, const TestChannelParams& params,
                                                   const BuildConfig& config) {
  if (!is_power_of_two(config.n)) throw std::invalid_argument("n must be a power of two");
  if (!(config.beta > 0.0 && config.beta < 0.5)) throw std::invalid_argument("beta must lie in (0, 1/2)");
  if (config.enforce_conditions) {
    const auto report = check_conditions(chain, params);
    if (!report.tilde_ok) {
      std::ostringstream msg;
      msg << "construction rejected: flatness of the top lattice at sigma_tilde is " << report.eps_tilde
          << " > 1/2";
      throw ConstructionRejected(msg.str());
    }
    if (!report.moments_ok) {
      std::ostringstream msg;
      msg << "construction rejected: moment flatness eps2 is " << report.eps2 << " > 1";
      throw ConstructionRejected(msg.str());
    }
  }

  PolarLatticeQuantizer q(chain, params);
  q.n_ = config.n;
  q.seed_ = config.seed;
  q.beta_ = config.beta;
  q.mc_trials_ = config.mc_trials;
  for (int l = 1; l <= chain.levels(); ++l) {
    auto est = estimate_bhattacharyya(l, chain, params, config.n, config.mc_trials, config.seed, config.workers);
    auto sel = select_sets(est.z, config.beta);
    PolarLevel level;
    level.level = l;
    level.threshold = sel.threshold;
    for (std::size_t i = 0; i < config.n; ++i)
      if (std::abs(est.z[i] - sel.threshold) <= 3.0 * est.se[i]) ++level.flagged;
    level.z = std::move(est.z);
    level.z_se = std::move(est.se);
    level.info = std::move(sel.info);
    q.levels_.push_back(std::move(level));
  }
  q.enforce_nesting();
  q.materialize_frozen(config.policy);
  return q;
}

PolarLatticeQuantizer PolarLatticeQuantizer::from_sets(const PartitionChain& chain, const TestChannelParams& params,
                                                       std::vector<Bits> info, const FrozenPolicy& policy,
                                                       std::uint64_t seed) {
  if (info.size() != static_cast<std::size_t>(chain.levels()))
    throw std::invalid_argument("one information mask per level is required");
  PolarLatticeQuantizer q(chain, params);
  q.n_ = info.front().size();
  if (!is_power_of_two(q.n_)) throw std::invalid_argument("n must be a power of two");
  q.seed_ = seed;
  for (int l = 1; l <= chain.levels(); ++l) {
    if (info[l - 1].size() != q.n_) throw std::invalid_argument("information masks must share one length");
    PolarLevel level;
    level.level = l;
    level.info = std::move(info[l - 1]);
    q.levels_.push_back(std::move(level));
  }
  q.enforce_nesting();
  q.materialize_frozen(policy);
  return q;
}

PolarLatticeQuantizer PolarLatticeQuantizer::restore(const PartitionChain& chain, const TestChannelParams& params,
                                                     std::vector<PolarLevel> levels, FrozenPolicyKind kind,
                                                     std::vector<Bits> frozen_bits, std::uint64_t seed, double beta,
                                                     std::size_t mc_trials, std::size_t promotions) {
  if (levels.size() != static_cast<std::size_t>(chain.levels()) || frozen_bits.size() != levels.size())
    throw std::invalid_argument("stored quantizer has the wrong number of levels");
  PolarLatticeQuantizer q(chain, params);
  q.n_ = levels.front().info.size();
  if (!is_power_of_two(q.n_)) throw std::invalid_argument("n must be a power of two");
  for (std::size_t l = 0; l < levels.size(); ++l)
    if (levels[l].info.size() != q.n_ || frozen_bits[l].size() != q.n_)
      throw std::invalid_argument("stored masks must share one length");
  q.levels_ = std::move(levels);
  q.kind_ = kind;
  q.frozen_bits_ = std::move(frozen_bits);
  q.seed_ = seed;
  q.beta_ = beta;
  q.mc_trials_ = mc_trials;
  q.promotions_ = promotions;
  return q;
}

void PolarLatticeQuantizer::enforce_nesting() {
  promotions_ = 0;
  for (std::size_t l = 0; l + 1 < levels_.size(); ++l)
    for (std::size_t i = 0; i < n_; ++i)
      if (levels_[l].info[i] && !levels_[l + 1].info[i]) {
        levels_[l + 1].info[i] = 1;
        ++promotions_;
      }
}

void PolarLatticeQuantizer::materialize_frozen(const FrozenPolicy& policy) {
  kind_ = policy.kind;
  frozen_bits_.assign(levels_.size(), Bits(n_, 0));
  if (policy.kind == FrozenPolicyKind::fixed && !policy.explicit_bits.empty()) {
    if (policy.explicit_bits.size() != levels_.size())
      throw std::invalid_argument("explicit frozen bits need one vector per level");
    for (std::size_t l = 0; l < levels_.size(); ++l) {
      if (policy.explicit_bits[l].size() != n_) throw std::invalid_argument("explicit frozen bits have wrong length");
      for (std::size_t i = 0; i < n_; ++i)
        frozen_bits_[l][i] = levels_[l].info[i] ? 0 : (policy.explicit_bits[l][i] & 1u);
    }
    return;
  }
  const std::uint64_t source = policy.kind == FrozenPolicyKind::fixed ? policy.offset_seed : seed_;
  Rng rng = Rng::substream(source, Stream::frozen_bits, 0);
  for (std::size_t l = 0; l < levels_.size(); ++l)
    for (std::size_t i = 0; i < n_; ++i) {
      const std::uint8_t bit = rng.bit();
      frozen_bits_[l][i] = levels_[l].info[i] ? 0 : bit;
    }
}

PolarLatticeQuantizer PolarLatticeQuantizer::with_params(const TestChannelParams& params) const {
  PolarLatticeQuantizer q = *this;
  q.params_ = params;
  return q;
}

PolarLatticeQuantizer PolarLatticeQuantizer::with_frozen_policy(const FrozenPolicy& policy) const {
  PolarLatticeQuantizer q = *this;
  q.materialize_frozen(policy);
  return q;
}

QuantizationResult PolarLatticeQuantizer::quantize(const std::vector<double>& y, Rng& rng, QuantizeMode mode) const {
  if (y.size() != n_) throw std::invalid_argument("input length must equal the block length");
  const double eta = chain_.eta();
  const double sigma = std::sqrt(params_.sigma_tilde_sq);
  const int r = chain_.levels();

  std::vector<double> t(n_);
  for (std::size_t j = 0; j < n_; ++j) t[j] = params_.alpha * y[j];

  QuantizationResult res;
  std::vector<std::int64_t> label(n_, 0);  // x / eta without the residual
  std::vector<double> llr(n_);
  Bits frozen(n_);
  ScDecoder dec(n_);
  const ScMode sc_mode = mode == QuantizeMode::sample ? ScMode::sample : ScMode::map;

  for (int l = 1; l <= r; ++l) {
    const auto& level = levels_[l - 1];
    const auto lattice = chain_.lattice(l);
    const double shift = chain_.spacing(l - 1);
    const std::int64_t modulus = std::int64_t{1} << l;
    for (std::size_t j = 0; j < n_; ++j) {
      const double base = eta * static_cast<double>(label[j] % modulus);
      llr[j] = coset_llr(lattice, sigma, t[j], base, shift);
      frozen[j] = level.info[j] ? 0 : 1;
    }
    dec.run(llr.data(), sc_mode, frozen.data(), frozen_bits_[l - 1].data(), nullptr, &rng);
    const auto psi = integer_polar_transform(dec.u());
    const std::int64_t weight = std::int64_t{1} << (l - 1);
    for (std::size_t j = 0; j < n_; ++j) label[j] += weight * psi[j];
    res.u_levels.push_back(dec.u());
  }

  const double bottom = chain_.spacing(r);
  const std::int64_t top_weight = std::int64_t{1} << r;
  res.residual.resize(n_);
  res.x.resize(n_);
  double dist = 0.0;
  for (std::size_t j = 0; j < n_; ++j) {
    const double base = eta * static_cast<double>(label[j]);
    // Nearest point of base + bottom Z; an exact midpoint goes to the smaller one.
    const auto z = static_cast<std::int64_t>(std::ceil((t[j] - base) / bottom - 0.5));
    res.residual[j] = z;
    res.x[j] = eta * static_cast<double>(label[j] + top_weight * z);
    const double e = t[j] - res.x[j];
    dist += e * e;
  }
  res.distortion = dist / static_cast<double>(n_);
  return res;
}

std::vector<double> PolarLatticeQuantizer::frozen_offset() const {
  if (kind_ != FrozenPolicyKind::fixed) throw NotApplicable("frozen_offset is defined only for the fixed policy");
  std::vector<std::int64_t> label(n_, 0);
  for (std::size_t l = 0; l < levels_.size(); ++l) {
    const auto psi = integer_polar_transform(frozen_bits_[l]);
    for (std::size_t j = 0; j < n_; ++j) label[j] += (std::int64_t{1} << l) * psi[j];
  }
  std::vector<double> off(n_);
  for (std::size_t j = 0; j < n_; ++j) off[j] = chain_.eta() * static_cast<double>(label[j]);
  return off;
}

bool PolarLatticeQuantizer::contains(const std::vector<double>& point) const {
  if (point.size() != n_) return false;
  std::vector<std::int64_t> k(n_);
  for (std::size_t j = 0; j < n_; ++j) {
    const double scaled = point[j] / chain_.eta();
    const double rounded = std::nearbyint(scaled);
    if (std::abs(scaled - rounded) > 1e-9 * std::max(1.0, std::abs(scaled))) return false;
    k[j] = static_cast<std::int64_t>(rounded);
  }
  Bits c(n_);
  for (const auto& level : levels_) {
    for (std::size_t j = 0; j < n_; ++j) c[j] = static_cast<std::uint8_t>(k[j] & 1);
    const Bits u = polar_transform(c);
    for (std::size_t i = 0; i < n_; ++i)
      if (u[i] && !level.info[i]) return false;
    const auto psi = integer_polar_transform(u);
    for (std::size_t j = 0; j < n_; ++j) k[j] = (k[j] - psi[j]) / 2;
  }
  return true;
}

RateVolume PolarLatticeQuantizer::rate_and_volume() const {
  std::size_t info = 0;
  for (const auto& level : levels_) info += level.info_size();
  RateVolume rv;
  rv.rate = static_cast<double>(info) / static_cast<double>(n_);
  rv.log2_volume_per_dim = chain_.log2_bottom_volume() - rv.rate;
  return rv;
}

}  // namespace polarlattice
