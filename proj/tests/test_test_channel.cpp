#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>
#include <numbers>

#include "polarlattice/test_channel.hpp"

using namespace polarlattice;

TEST_CASE("derived parameters") {
  const auto p = derive_params(1.0, 0.25);
  CHECK(p.sigma_r_sq == doctest::Approx(0.75));
  CHECK(p.alpha == doctest::Approx(0.75));
  CHECK(p.sigma_tilde_sq == doctest::Approx(0.1875));
  CHECK(p.sigma_tilde_sq <= p.sigma_r_sq);
  CHECK(p.sigma_tilde_sq <= p.delta);
  CHECK_THROWS_AS(derive_params(1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(derive_params(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(derive_params(1.0, 1.5), std::invalid_argument);

  const auto q = params_for_fixed_tilde(0.1875, 100.0 / 0.1875);
  CHECK(q.sigma_s_sq == doctest::Approx(100.0));
  CHECK(q.sigma_tilde_sq == doctest::Approx(0.1875).epsilon(1e-13));
  const double s = 100.0;
  CHECK(q.delta == doctest::Approx((s - std::sqrt(s * s - 4.0 * s * 0.1875)) / 2.0).epsilon(1e-10));
  CHECK_THROWS_AS(params_for_fixed_tilde(1.0, 3.0), std::invalid_argument);
}

TEST_CASE("condition report") {
  CHECK(moment_width_factor_1() == doctest::Approx(1.06).epsilon(0.005));
  for (std::size_t n : {64u, 256u, 4096u}) {
    const auto chain = recommended_chain(n, 1.0);
    const auto r = check_conditions(chain, params_for_fixed_tilde(1.0, 400.0));
    CHECK(r.tilde_ok);
    CHECK(r.moments_ok);
    CHECK(r.all_ok());
  }
  const PartitionChain chain(1.0, 2);
  for (double s2 : {0.3, 1.0, 4.0}) {
    const auto r = check_conditions(chain, derive_params(2.0 * s2, s2));
    CHECK(r.eps1 < r.eps2);
  }
  const auto bad = check_conditions(PartitionChain(10.0, 2), params_for_fixed_tilde(1.0, 400.0));
  CHECK_FALSE(bad.tilde_ok);
}

TEST_CASE("discrete Gaussian pmf and goodness of fit") {
  const DiscreteGaussian dg({1.0, 2.0, 0.0});
  double total = 0.0;
  for (double p : dg.pmf()) total += p;
  CHECK(std::abs(total - 1.0) <= 1e-12);

  const std::size_t samples = 1000000;
  Rng rng(7);
  std::vector<double> counts(dg.points().size(), 0.0);
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double x = dg.sample(rng);
    const auto idx = static_cast<std::size_t>(std::lround(x - dg.points().front()));
    counts[idx] += 1.0;
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / samples;
  const double se = std::sqrt((sum2 / samples - mean * mean) / samples);
  CHECK(std::abs(mean) <= 3.0 * se);

  // Pool cells with expected count below 5.
  double stat = 0.0, exp_acc = 0.0, obs_acc = 0.0;
  int cells = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    exp_acc += dg.pmf()[i] * samples;
    obs_acc += counts[i];
    if (exp_acc >= 5.0) {
      stat += (obs_acc - exp_acc) * (obs_acc - exp_acc) / exp_acc;
      ++cells;
      exp_acc = obs_acc = 0.0;
    }
  }
  if (exp_acc > 0.0) stat += (obs_acc - exp_acc) * (obs_acc - exp_acc) / std::max(exp_acc, 1e-300);
  const boost::math::chi_squared dist(cells - 1);
  CHECK(boost::math::cdf(complement(dist, stat)) > 1e-3);
}

TEST_CASE("discrete Gaussian moments stay inside the flatness envelopes") {
  for (double sigma_r : {0.45, 0.6, 1.0}) {
    const double v = 1.0;
    const ScaledIntegerLattice lat(v);
    const double eps1 = flatness_factor(lat, sigma_r / moment_width_factor_1());
    const double eps2 = flatness_factor(lat, sigma_r / moment_width_factor_2());
    const DiscreteGaussian dg({v, sigma_r, 0.0});
    double m2 = 0.0, m4 = 0.0;
    for (std::size_t i = 0; i < dg.points().size(); ++i) {
      const double x2 = dg.points()[i] * dg.points()[i];
      m2 += dg.pmf()[i] * x2;
      m4 += dg.pmf()[i] * x2 * x2;
    }
    const double s2 = sigma_r * sigma_r;
    CAPTURE(sigma_r);
    CHECK(std::abs(m2 - s2) <= second_moment_envelope(eps1) * s2);
    CHECK(std::abs(m4 - 3.0 * s2 * s2) <= fourth_moment_envelope(eps2) * s2 * s2);

    Rng rng(11);
    const std::size_t n = 200000;
    double e2 = 0.0, e4 = 0.0, e8 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = dg.sample(rng);
      e2 += x * x;
      e4 += x * x * x * x;
      e8 += std::pow(x, 8);
    }
    e2 /= n;
    e4 /= n;
    e8 /= n;
    const double se2 = std::sqrt((e4 - e2 * e2) / n);
    const double se4 = std::sqrt((e8 - e4 * e4) / n);
    CHECK(std::abs(e2 - s2) <= second_moment_envelope(eps1) * s2 + 3.0 * se2);
    CHECK(std::abs(e4 - 3.0 * s2 * s2) <= fourth_moment_envelope(eps2) * s2 * s2 + 3.0 * se4);
  }
}

TEST_CASE("discrete Gaussian narrower than the spacing") {
  const DiscreteGaussian dg({10.0, 0.1, 3.0});
  Rng rng(3);
  CHECK(dg.sample(rng) == 0.0);
  const DiscreteGaussian dg2({10.0, 0.1, 7.0});
  CHECK(dg2.sample(rng) == 10.0);
}

TEST_CASE("test channel pairs") {
  const PartitionChain chain(0.5, 3);
  const auto p = derive_params(1.0, 0.25);
  const double eps1 = flatness_factor(chain.top(), std::sqrt(p.sigma_r_sq) / moment_width_factor_1());
  Rng rng(5);
  const std::size_t n = 400000;
  const auto [x, y] = sample_pair(p, chain, n, rng);

  auto mean_se = [](const std::vector<double>& v) {
    double s = 0.0, s2 = 0.0;
    for (double e : v) {
      s += e;
      s2 += e * e;
    }
    const double m = s / v.size();
    return std::pair{m, std::sqrt((s2 / v.size() - m * m) / v.size())};
  };

  std::vector<double> noise2(n), mmse(n), yy(n), xx(n), cross(n / 2);
  for (std::size_t i = 0; i < n; ++i) {
    noise2[i] = (y[i] - x[i]) * (y[i] - x[i]);
    mmse[i] = (p.alpha * y[i] - x[i]) * (p.alpha * y[i] - x[i]);
    yy[i] = y[i] * y[i];
    xx[i] = x[i] * x[i];
  }
  for (std::size_t i = 0; i + 1 < n; i += 2) cross[i / 2] = y[i] * y[i + 1];

  const auto [d, d_se] = mean_se(noise2);
  CHECK(std::abs(d - p.delta) <= 3.0 * d_se);

  const auto [m, m_se] = mean_se(mmse);
  const double slack = second_moment_envelope(eps1) * p.delta / p.sigma_s_sq;
  CHECK(std::abs(m - p.sigma_tilde_sq) <= slack * p.sigma_tilde_sq + 3.0 * m_se);

  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = yy[i] - xx[i];
  const auto [dy, dy_se] = mean_se(diff);
  CHECK(std::abs(dy - p.delta) <= 3.0 * dy_se);

  const auto [c, c_se] = mean_se(cross);
  CHECK(std::abs(c) <= 3.0 * c_se);
}
