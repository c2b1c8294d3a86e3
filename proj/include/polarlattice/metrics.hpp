#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "polarlattice/quantizer.hpp"
#include "polarlattice/rng.hpp"

namespace polarlattice {

inline constexpr double kReferenceScalingExponent = 4.63;

// 1 / (2 pi e).
double sphere_nsm();

struct EvalOptions {
  std::uint64_t seed = 1;
  unsigned workers = 1;
  QuantizeMode mode = QuantizeMode::sample;
  Stream family = Stream::evaluation;
  std::uint64_t stream_base = 0;
};

struct DistortionStats {
  std::size_t trials = 0;
  double mean_per_dim = 0.0;
  double variance_of_per_dim = 0.0;  // unbiased
  double max_per_dim = 0.0;
  double se_mean = 0.0;
  double se_variance = 0.0;
  std::vector<double> per_trial;
};

// Trial k draws y ~ N(0, sigma_s^2)^N and quantizes it, all on substream
// (seed, family, stream_base + k). Needs trials >= 100.
DistortionStats estimate_distortion(const PolarLatticeQuantizer& q, std::size_t trials, const EvalOptions& opt);

struct NsmEstimate {
  double nsm = 0.0;
  double se = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  DistortionStats distortion;
};

// G of the quantization partition: mean distortion over V(L_Q)^(2/N), measured
// with sigma_s^2 = kappa sigma_tilde^2 on the same lattice. kappa >= 100.
NsmEstimate estimate_nsm(const PolarLatticeQuantizer& q, std::size_t trials, double kappa, const EvalOptions& opt);

struct GoodnessLedger {
  std::size_t n = 0;
  int r = 0;
  double rate = 0.0;
  double log2_volume_per_dim = 0.0;
  double eps_a = 0.0;
  double eps_b = 0.0;
  double eps_c = 0.0;
  double capacity_sum = 0.0;
  double vnr_log2_gap = 0.0;     // 2 (eps_a - eps_b - eps_c)
  double log2_vnr = 0.0;         // log2 of V^(2/N) / sigma_tilde^2
  double nsm_bound = 0.0;
  double flatness = 0.0;         // flatness of the top lattice at sigma_tilde
  double eps_a_bound = 0.0;      // log2(e) * flatness
  double eps_b_bound = 0.0;      // binary-entropy tail bound, valid once V >= 4 sigma_tilde
  bool rate_undershoot = false;  // eps_c < 0
  double rd_rate = 0.0;          // 1/2 log2(sigma_s^2 / delta)
  std::string additive_term = "2^(-N^beta'')/sigma_tilde^2 (constant unspecified, not evaluated)";
  std::optional<NsmEstimate> nsm;

  double log2_2pie_g() const;
};

GoodnessLedger goodness_ledger(const PolarLatticeQuantizer& q, const std::optional<NsmEstimate>& nsm = std::nullopt);

struct OffsetStudy {
  std::vector<DistortionStats> per_offset;
  std::vector<std::uint64_t> offset_seeds;
  double pooled_mean = 0.0;
  double max_relative_spread = 0.0;
};

// num_offsets copies of q under fixed frozen bits from distinct derived seeds,
// each evaluated on its own substream family slice.
OffsetStudy offset_study(const PolarLatticeQuantizer& q, std::size_t num_offsets, std::size_t trials,
                         const EvalOptions& opt);

struct SweepConfig {
  double beta = 0.3;
  std::size_t mc_trials_construction = 10000;
  std::size_t mc_trials_eval = 1000;
  double kappa = 400.0;
  double sigma_tilde_sq = 1.0;
  FrozenPolicy policy;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  QuantizeMode mode = QuantizeMode::sample;
};

struct SweepRow {
  std::size_t n = 0;
  GoodnessLedger ledger;
  double variance_of_per_dim = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double slope = 0.0;  // least squares of log2(2 pi e G - 1) on log2 N; NaN if undefined
  double reference_slope = -1.0 / kReferenceScalingExponent;
};

double fit_goodness_slope(const std::vector<SweepRow>& rows);

SweepResult sweep_and_fit(const std::vector<std::size_t>& n_list, const SweepConfig& config);

}  // namespace polarlattice
