#include "polarlattice/test_channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace polarlattice {

namespace {
constexpr double kTruncationSigmas = 12.0;
}

TestChannelParams derive_params(double sigma_s_sq, double delta) {
  if (!(sigma_s_sq > 0.0) || !std::isfinite(sigma_s_sq)) throw std::invalid_argument("sigma_s_sq must be positive");
  if (!(delta > 0.0) || !(delta < sigma_s_sq))
    throw std::invalid_argument("delta must satisfy 0 < delta < sigma_s_sq");
  TestChannelParams p;
  p.sigma_s_sq = sigma_s_sq;
  p.delta = delta;
  p.sigma_r_sq = sigma_s_sq - delta;
  p.alpha = p.sigma_r_sq / sigma_s_sq;
  p.sigma_tilde_sq = p.sigma_r_sq * delta / sigma_s_sq;
  return p;
}

TestChannelParams params_for_fixed_tilde(double sigma_tilde_sq, double kappa) {
  if (!(sigma_tilde_sq > 0.0)) throw std::invalid_argument("sigma_tilde_sq must be positive");
  if (!(kappa >= 4.0)) throw std::invalid_argument("kappa must be at least 4");
  const double s = kappa * sigma_tilde_sq;
  // delta (s - delta) / s = sigma_tilde_sq, smaller root. Written without the
  // cancelling subtraction.
  const double disc = std::sqrt(s * s - 4.0 * s * sigma_tilde_sq);
  const double delta = 2.0 * s * sigma_tilde_sq / (s + disc);
  return derive_params(s, delta);
}

double moment_width_factor_1() { return std::sqrt(std::numbers::pi / (std::numbers::pi - 1.0 / std::numbers::e)); }
double moment_width_factor_2() { return std::sqrt(std::numbers::pi / (std::numbers::pi - 2.0 / std::numbers::e)); }

ConditionReport check_conditions(const PartitionChain& chain, const TestChannelParams& params) {
  const auto top = chain.top();
  const double sigma_r = std::sqrt(params.sigma_r_sq);
  ConditionReport r;
  r.eps_tilde = flatness_factor(top, std::sqrt(params.sigma_tilde_sq));
  r.eps1 = flatness_factor(top, sigma_r / moment_width_factor_1());
  r.eps2 = flatness_factor(top, sigma_r / moment_width_factor_2());
  r.tilde_ok = r.eps_tilde <= 0.5;
  r.moments_ok = r.eps2 <= 1.0;
  return r;
}

double second_moment_envelope(double eps1) { return 2.0 * std::numbers::pi * eps1 / (1.0 - eps1); }

double fourth_moment_envelope(double eps2) { return 4.0 * (std::numbers::pi + 3.0) * eps2 / (1.0 - eps2); }

DiscreteGaussian::DiscreteGaussian(const DiscreteGaussianSpec& spec) {
  if (!(spec.spacing > 0.0) || !(spec.sigma > 0.0)) throw std::invalid_argument("spacing and sigma must be positive");
  const double v = spec.spacing;
  const auto lo = static_cast<long long>(std::ceil((spec.center - kTruncationSigmas * spec.sigma) / v));
  const auto hi = static_cast<long long>(std::floor((spec.center + kTruncationSigmas * spec.sigma) / v));
  if (hi < lo) {
    // Narrower than one spacing: all mass on the nearest point.
    points_.push_back(v * std::nearbyint(spec.center / v));
    pmf_.push_back(1.0);
    cdf_.push_back(1.0);
    return;
  }
  const double inv = 1.0 / (2.0 * spec.sigma * spec.sigma);
  double total = 0.0;
  for (long long k = lo; k <= hi; ++k) {
    const double x = v * static_cast<double>(k);
    const double w = std::exp(-(x - spec.center) * (x - spec.center) * inv);
    points_.push_back(x);
    pmf_.push_back(w);
    total += w;
  }
  double acc = 0.0;
  cdf_.reserve(pmf_.size());
  for (double& w : pmf_) {
    w /= total;
    acc += w;
    cdf_.push_back(acc);
  }
  cdf_.back() = 1.0;
}

double DiscreteGaussian::sample(Rng& rng) const {
  const double u = rng.uniform();
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), points_.size() - 1);
  return points_[idx];
}

double sample_discrete_gaussian(const DiscreteGaussianSpec& spec, Rng& rng) { return DiscreteGaussian(spec).sample(rng); }

std::pair<std::vector<double>, std::vector<double>> sample_pair(const TestChannelParams& params,
                                                                const PartitionChain& chain, std::size_t n,
                                                                Rng& rng) {
  const DiscreteGaussian dg({chain.eta(), std::sqrt(params.sigma_r_sq), 0.0});
  const double noise = std::sqrt(params.delta);
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = dg.sample(rng);
    y[i] = x[i] + noise * rng.normal();
  }
  return {std::move(x), std::move(y)};
}

}  // namespace polarlattice
