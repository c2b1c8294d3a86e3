#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "polarlattice/partition_chain.hpp"

using namespace polarlattice;

namespace {

constexpr double kPi = std::numbers::pi;

// Dual theta series with a fixed number of terms, summed smallest first.
double flatness_oracle(double v, double sigma) {
  std::vector<double> terms;
  for (int k = 1; k <= 4000; ++k) terms.push_back(std::exp(-2.0 * kPi * kPi * sigma * sigma * k * k / (v * v)));
  double sum = 0.0;
  for (auto it = terms.rbegin(); it != terms.rend(); ++it) sum += *it;
  return 2.0 * sum;
}

// Primal sum over a wide window, no early exit.
double density_oracle(double v, double sigma, double x) {
  const int reach = static_cast<int>(40.0 * sigma / v) + 50;
  double sum = 0.0;
  for (int k = -reach; k <= reach; ++k) {
    const double d = x - k * v;
    sum += std::exp(-d * d / (2.0 * sigma * sigma));
  }
  return sum / (std::sqrt(2.0 * kPi) * sigma);
}

// The density is smooth and periodic, so the trapezoid rule over one cell
// converges geometrically.
double entropy_oracle(double v, double sigma_sq) {
  const int m = 20000;
  const double sigma = std::sqrt(sigma_sq);
  double acc = 0.0;
  for (int i = 0; i < m; ++i) {
    const double x = -0.5 * v + v * (i + 0.5) / m;
    const double f = density_oracle(v, sigma, x);
    if (f > 0.0) acc -= f * std::log2(f);
  }
  return acc * v / m;
}

}  // namespace

TEST_CASE("flatness factor closed form at v = sigma = 1") {
  const double expect = 2.0 * std::exp(-2.0 * kPi * kPi);
  CHECK(flatness_factor(ScaledIntegerLattice(1.0), 1.0) == doctest::Approx(expect).epsilon(1e-13));
  CHECK(expect == doctest::Approx(5.3e-9).epsilon(0.01));
}

TEST_CASE("flatness factor matches the direct theta series") {
  for (int i = 0; i <= 80; ++i) {
    const double ratio = std::pow(10.0, -2.0 + 4.0 * i / 80.0);  // v / sigma
    const double got = flatness_factor(ScaledIntegerLattice(ratio), 1.0);
    const double want = flatness_oracle(ratio, 1.0);
    CAPTURE(ratio);
    if (want == 0.0)
      CHECK(got < 1e-300);
    else
      CHECK(std::abs(got - want) <= 1e-10 * want);
  }
}

TEST_CASE("flatness factor monotonicity and scale invariance") {
  const ScaledIntegerLattice lat(1.0);
  double prev = flatness_factor(lat, 0.05);
  for (double s = 0.1; s < 1.5; s += 0.05) {
    const double cur = flatness_factor(lat, s);
    CHECK(cur < prev);
    prev = cur;
  }
  prev = flatness_factor(ScaledIntegerLattice(0.5), 1.0);
  for (double v = 0.6; v < 6.0; v += 0.2) {
    const double cur = flatness_factor(ScaledIntegerLattice(v), 1.0);
    CHECK(cur > prev);
    prev = cur;
  }
  for (double s : {0.01, 0.3, 7.0, 1000.0})
    CHECK(flatness_factor(ScaledIntegerLattice(2.0 * s), 0.7 * s) ==
          doctest::Approx(flatness_factor(ScaledIntegerLattice(2.0), 0.7)).epsilon(1e-12));
  CHECK(flatness_factor(lat, 50.0) == 0.0);
}

TEST_CASE("aliased density limits and normalisation") {
  const ScaledIntegerLattice flat(1.0);
  for (double x : {-0.5, -0.1, 0.0, 0.3, 0.49}) CHECK(std::abs(aliased_density(flat, 5.0, x) - 1.0) <= 1e-10);

  const double g = std::exp(-0.5 * 0.36) / std::sqrt(2.0 * kPi);
  CHECK(aliased_density(ScaledIntegerLattice(1e3), 1.0, 0.6) == doctest::Approx(g).epsilon(1e-14));

  for (double sigma : {0.02, 0.3, 1.0}) {
    const double v = 1.0;
    const int m = 20000;
    double mass = 0.0;
    for (int i = 0; i < m; ++i) mass += aliased_density(ScaledIntegerLattice(v), sigma, -0.5 + (i + 0.5) / m);
    CHECK(std::abs(mass / m - 1.0) <= 1e-12);
  }

  for (double sigma : {0.05, 0.29, 0.31, 2.0})
    for (double x : {-0.4, 0.0, 0.17, 3.3}) {
      CAPTURE(sigma);
      CAPTURE(x);
      const double want = density_oracle(1.0, sigma, x);
      CHECK(aliased_density(ScaledIntegerLattice(1.0), sigma, x) == doctest::Approx(want).epsilon(1e-12));
      const double excess = aliased_density_excess(ScaledIntegerLattice(1.0), sigma, x);
      CHECK(std::abs(excess - (want - 1.0)) <= 1e-14 + 1e-10 * std::abs(want - 1.0));
    }
}

TEST_CASE("aliased entropy limits and quadrature oracle") {
  const ScaledIntegerLattice lat(1.0);
  const double narrow = 0.5 * std::log2(2.0 * kPi * std::numbers::e * 1e-4);
  CHECK(std::abs(aliased_entropy(lat, 1e-4) - narrow) <= 1e-6);
  CHECK(std::abs(aliased_entropy(lat, 1e4)) <= 1e-6);

  // Folding onto a cell cannot raise entropy, so the value lies below both
  // the Gaussian entropy and log v, and above the Gaussian entropy minus the
  // entropy of the folded-away cell index.
  const double mid = aliased_entropy(lat, 0.05);
  const double gauss = 0.5 * std::log2(2.0 * kPi * std::numbers::e * 0.05);
  CHECK(mid < gauss);
  CHECK(mid < 0.0);
  const double tail = std::erfc(0.5 / std::sqrt(2.0 * 0.05));
  CHECK(mid > gauss - (-tail * std::log2(tail) - (1.0 - tail) * std::log2(1.0 - tail) + 2.0 * tail));

  for (double s2 : {0.003, 0.05, 0.089, 0.2, 1.0}) {
    CAPTURE(s2);
    CHECK(std::abs(aliased_entropy(lat, s2) - entropy_oracle(1.0, s2)) <= 1e-9);
  }

  double prev = aliased_entropy(lat, 1e-3);
  for (double s2 = 2e-3; s2 < 0.5; s2 *= 1.3) {
    const double cur = aliased_entropy(lat, s2);
    CHECK(cur > prev);
    CHECK(cur <= 0.0);
    prev = cur;
  }
}

TEST_CASE("mod and partition capacities") {
  const PartitionChain chain(1.0, 4);
  for (double s2 : {1e-4, 0.01, 0.1, 0.5, 2.0, 30.0}) {
    double sum = 0.0;
    for (int l = 1; l <= 4; ++l) {
      const double c = partition_capacity(chain, l, s2);
      CHECK(c >= -1e-12);
      CHECK(c <= 1.0 + 1e-12);
      sum += c;
    }
    CHECK(std::abs(sum - (mod_capacity(chain.bottom(), s2) - mod_capacity(chain.top(), s2))) <= 1e-8);
  }
  CHECK(partition_capacity(chain, 1, 1e-6) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(partition_capacity(chain, 1, 1e4) == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
  CHECK_THROWS_AS(partition_capacity(chain, 0, 1.0), std::out_of_range);
  CHECK_THROWS_AS(partition_capacity(chain, 5, 1.0), std::out_of_range);

  for (double v : {0.5, 1.0, 2.0, 4.0})
    for (double s : {0.2, 0.4, 0.8, 1.6}) {
      const ScaledIntegerLattice lat(v);
      CHECK(mod_capacity(lat, s * s) <= std::numbers::log2e * flatness_factor(lat, s) + 1e-15);
    }
}

TEST_CASE("recommended chain meets both tail conditions") {
  for (std::size_t n : {2u, 4u, 64u, 1024u}) {
    const auto chain = recommended_chain(n, 1.0);
    CHECK(chain.levels() >= 2);
    CHECK(flatness_factor(chain.top(), 1.0) < kChainTailThreshold);
    CHECK(gaussian_tail_mass(chain.spacing(chain.levels() - 1), 1.0) < kChainTailThreshold);
    CHECK(gaussian_tail_mass(chain.spacing(chain.levels() - 2), 1.0) >= kChainTailThreshold);
    // eta is maximal: a slightly wider top lattice breaks the flatness condition.
    CHECK(flatness_factor(ScaledIntegerLattice(chain.eta() * 1.001), 1.0) >= kChainTailThreshold);
  }
  const auto a = recommended_chain(256, 1.0);
  const auto b = recommended_chain(256, 9.0);
  CHECK(b.eta() == doctest::Approx(3.0 * a.eta()).epsilon(1e-12));
  CHECK(b.levels() == a.levels());
  CHECK(flatness_factor(b.top(), 3.0) == doctest::Approx(flatness_factor(a.top(), 1.0)).epsilon(1e-9));
  CHECK_THROWS_AS(recommended_chain(100, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(recommended_chain(1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(recommended_chain(64, 0.0), std::invalid_argument);
}

TEST_CASE("partition chain geometry") {
  const PartitionChain chain(0.5, 3);
  CHECK(chain.spacing(0) == 0.5);
  CHECK(chain.spacing(3) == 4.0);
  CHECK(chain.log2_bottom_volume() == doctest::Approx(2.0));
  CHECK(chain.top().dual_spacing() == 2.0);
  CHECK_THROWS(PartitionChain(0.0, 2));
  CHECK_THROWS(PartitionChain(1.0, 0));
  CHECK_THROWS(ScaledIntegerLattice(-1.0));
}
