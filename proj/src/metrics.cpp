#include "polarlattice/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "polarlattice/parallel.hpp"

namespace polarlattice {

namespace {

constexpr double kZ95 = 1.959963984540054;

double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

}  // namespace

double sphere_nsm() { return 1.0 / (2.0 * std::numbers::pi * std::numbers::e); }

DistortionStats estimate_distortion(const PolarLatticeQuantizer& q, std::size_t trials, const EvalOptions& opt) {
  if (trials < 100) throw std::invalid_argument("distortion estimation needs at least 100 trials");
  const std::size_t n = q.n();
  const double sigma_s = std::sqrt(q.params().sigma_s_sq);
  DistortionStats st;
  st.trials = trials;
  st.per_trial.assign(trials, 0.0);
  parallel_for(trials, opt.workers, [&](std::size_t k) {
    Rng rng = Rng::substream(opt.seed, opt.family, opt.stream_base + k);
    std::vector<double> y(n);
    for (auto& v : y) v = sigma_s * rng.normal();
    st.per_trial[k] = q.quantize(y, rng, opt.mode).distortion;
  });

  const double t = static_cast<double>(trials);
  double sum = 0.0;
  for (double d : st.per_trial) {
    sum += d;
    st.max_per_dim = std::max(st.max_per_dim, d);
  }
  st.mean_per_dim = sum / t;
  double m2 = 0.0, m4 = 0.0;
  for (double d : st.per_trial) {
    const double e = (d - st.mean_per_dim) * (d - st.mean_per_dim);
    m2 += e;
    m4 += e * e;
  }
  st.variance_of_per_dim = m2 / (t - 1.0);
  st.se_mean = std::sqrt(st.variance_of_per_dim / t);
  const double biased = m2 / t;
  st.se_variance = std::sqrt(std::max(0.0, m4 / t - biased * biased) / t);
  return st;
}

NsmEstimate estimate_nsm(const PolarLatticeQuantizer& q, std::size_t trials, double kappa, const EvalOptions& opt) {
  if (!(kappa >= 100.0)) throw std::invalid_argument("kappa must be at least 100 for the high-resolution regime");
  const auto params = params_for_fixed_tilde(q.params().sigma_tilde_sq, kappa);
  const auto hi_res = q.with_params(params);
  NsmEstimate est;
  est.distortion = estimate_distortion(hi_res, trials, opt);
  const double scale = std::exp2(2.0 * hi_res.rate_and_volume().log2_volume_per_dim);
  est.nsm = est.distortion.mean_per_dim / scale;
  est.se = est.distortion.se_mean / scale;
  est.ci_lo = est.nsm - kZ95 * est.se;
  est.ci_hi = est.nsm + kZ95 * est.se;
  return est;
}

double GoodnessLedger::log2_2pie_g() const {
  if (!nsm) return std::numeric_limits<double>::quiet_NaN();
  return std::log2(2.0 * std::numbers::pi * std::numbers::e * nsm->nsm);
}

GoodnessLedger goodness_ledger(const PolarLatticeQuantizer& q, const std::optional<NsmEstimate>& nsm) {
  const auto& chain = q.chain();
  const double s2 = q.params().sigma_tilde_sq;
  const double two_pi_e = 2.0 * std::numbers::pi * std::numbers::e;
  const auto rv = q.rate_and_volume();

  GoodnessLedger g;
  g.n = q.n();
  g.r = chain.levels();
  g.rate = rv.rate;
  g.log2_volume_per_dim = rv.log2_volume_per_dim;
  g.eps_a = mod_capacity(chain.top(), s2);
  g.eps_b = 0.5 * std::log2(two_pi_e * s2) - aliased_entropy(chain.bottom(), s2);
  for (int l = 1; l <= chain.levels(); ++l) g.capacity_sum += partition_capacity(chain, l, s2);
  g.eps_c = rv.rate - g.capacity_sum;
  g.vnr_log2_gap = 2.0 * (g.eps_a - g.eps_b - g.eps_c);
  g.log2_vnr = 2.0 * rv.log2_volume_per_dim - std::log2(s2);
  const double nd = static_cast<double>(q.n());
  g.nsm_bound = nd / (nd + 2.0) * std::exp2(2.0 * (g.eps_b + g.eps_c)) / two_pi_e;
  g.flatness = flatness_factor(chain.top(), std::sqrt(s2));
  g.eps_a_bound = std::numbers::log2e * g.flatness;
  // eps_b <= H(lattice index of the noise) <= H2(tau) + 3 tau, tau the mass
  // leaving the central bottom cell, bounded through the Gaussian tail.
  const double v = chain.spacing(chain.levels());
  const double tau = std::min(0.5, 2.0 * std::exp(-v * v / (8.0 * s2)));
  g.eps_b_bound = binary_entropy(tau) + 3.0 * tau;
  g.rate_undershoot = g.eps_c < 0.0;
  g.rd_rate = 0.5 * std::log2(q.params().sigma_s_sq / q.params().delta);
  g.nsm = nsm;
  return g;
}

OffsetStudy offset_study(const PolarLatticeQuantizer& q, std::size_t num_offsets, std::size_t trials,
                         const EvalOptions& opt) {
  if (num_offsets < 1) throw std::invalid_argument("offset study needs at least one offset");
  OffsetStudy study;
  for (std::size_t k = 0; k < num_offsets; ++k) {
    const std::uint64_t offset_seed = derive_seed(opt.seed, Stream::offsets, k);
    const auto qk = q.with_frozen_policy(FrozenPolicy::fixed_from_seed(offset_seed));
    EvalOptions ek = opt;
    ek.family = Stream::offset_eval;
    ek.stream_base = static_cast<std::uint64_t>(k) << 32;
    study.offset_seeds.push_back(offset_seed);
    study.per_offset.push_back(estimate_distortion(qk, trials, ek));
  }
  double sum = 0.0;
  for (const auto& s : study.per_offset) sum += s.mean_per_dim;
  study.pooled_mean = sum / static_cast<double>(num_offsets);
  for (const auto& s : study.per_offset)
    study.max_relative_spread =
        std::max(study.max_relative_spread, std::abs(s.mean_per_dim - study.pooled_mean) / study.pooled_mean);
  return study;
}

double fit_goodness_slope(const std::vector<SweepRow>& rows) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t k = 0;
  for (const auto& row : rows) {
    if (!row.ledger.nsm) continue;
    const double excess = 2.0 * std::numbers::pi * std::numbers::e * row.ledger.nsm->nsm - 1.0;
    if (!(excess > 0.0)) continue;
    const double x = std::log2(static_cast<double>(row.n));
    const double y = std::log2(excess);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++k;
  }
  if (k < 2) return std::numeric_limits<double>::quiet_NaN();
  const double kd = static_cast<double>(k);
  const double den = kd * sxx - sx * sx;
  if (den == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (kd * sxy - sx * sy) / den;
}

SweepResult sweep_and_fit(const std::vector<std::size_t>& n_list, const SweepConfig& config) {
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    if (!is_power_of_two(n_list[i])) throw std::invalid_argument("sweep lengths must be powers of two");
    if (i > 0 && n_list[i] <= n_list[i - 1]) throw std::invalid_argument("sweep lengths must be ascending");
  }
  SweepResult out;
  const auto params = params_for_fixed_tilde(config.sigma_tilde_sq, config.kappa);
  for (std::size_t n : n_list) {
    const auto chain = recommended_chain(n, config.sigma_tilde_sq);
    BuildConfig bc;
    bc.n = n;
    bc.beta = config.beta;
    bc.mc_trials = config.mc_trials_construction;
    bc.policy = config.policy;
    bc.seed = config.seed;
    bc.workers = config.workers;
    const auto q = PolarLatticeQuantizer::build(chain, params, bc);
    EvalOptions opt{config.seed, config.workers, config.mode, Stream::evaluation, 0};
    const auto nsm = estimate_nsm(q, config.mc_trials_eval, config.kappa, opt);
    SweepRow row;
    row.n = n;
    row.variance_of_per_dim = nsm.distortion.variance_of_per_dim;
    row.ledger = goodness_ledger(q, nsm);
    out.rows.push_back(std::move(row));
  }
  out.slope = fit_goodness_slope(out.rows);
  return out;
}

}  // namespace polarlattice
