#include "polarlattice/partition_chain.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace polarlattice {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kLn2 = std::numbers::ln2;
// Terms below this fraction of the running sum are dropped.
constexpr double kSeriesTail = 1e-17;
// sigma/v at or above which the dual (Poisson-summed) series is used.
constexpr double kDualRegime = 0.3;

void require_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value))
    throw std::invalid_argument(std::string(what) + " must be positive and finite");
}

// x reduced into [-v/2, v/2].
double reduce(double x, double v) { return x - v * std::nearbyint(x / v); }

// log sum_k exp(-(d - k v)^2 / 2 sigma^2) for |d| <= v/2.
double primal_log_sum(double d, double v, double sigma) {
  const double inv = 1.0 / (2.0 * sigma * sigma);
  const double lead = -d * d * inv;
  double sum = 1.0;
  for (int sign : {-1, 1}) {
    for (long k = 1;; ++k) {
      const double shifted = d - sign * static_cast<double>(k) * v;
      const double term = std::exp(-shifted * shifted * inv - lead);
      sum += term;
      if (term < kSeriesTail * sum) break;
    }
  }
  return lead + std::log(sum);
}

// delta(x) = 2 sum_{k>=1} exp(-2 pi^2 rho^2 k^2) cos(2 pi k x / v), rho = sigma / v.
double dual_excess(double x, double v, double sigma) {
  const double rho = sigma / v;
  const double decay = 2.0 * kPi * kPi * rho * rho;
  double delta = 0.0;
  for (long k = 1;; ++k) {
    const double weight = 2.0 * std::exp(-decay * static_cast<double>(k * k));
    delta += weight * std::cos(2.0 * kPi * static_cast<double>(k) * x / v);
    if (weight < kSeriesTail) break;
  }
  return delta;
}

// phi(g) = g ln g - g + 1 written in terms of delta = g - 1.
double phi_from_delta(double delta) {
  if (std::abs(delta) < 1e-2) {
    // sum_{n>=2} (-1)^n delta^n / (n (n - 1))
    double power = delta * delta;
    double acc = 0.0;
    for (int n = 2; n <= 12; ++n) {
      acc += ((n % 2 == 0) ? 1.0 : -1.0) * power / static_cast<double>(n * (n - 1));
      power *= delta;
    }
    return acc;
  }
  return (1.0 + delta) * std::log1p(delta) - delta;
}

double phi_from_log(double log_g) {
  const double g = std::exp(log_g);
  return g * log_g - g + 1.0;
}

}  // namespace

bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

ScaledIntegerLattice::ScaledIntegerLattice(double spacing) : spacing_(spacing) {
  require_positive(spacing, "lattice spacing");
}

PartitionChain::PartitionChain(double eta, int levels) : eta_(eta), levels_(levels) {
  require_positive(eta, "eta");
  if (levels < 1) throw std::invalid_argument("partition chain needs at least one level");
}

double PartitionChain::spacing(int level) const {
  if (level < 0 || level > levels_) throw std::out_of_range("partition chain level out of range");
  return std::ldexp(eta_, level);
}

double PartitionChain::log2_bottom_volume() const { return std::log2(eta_) + levels_; }

double gaussian_tail_mass(double half_width, double sigma) {
  require_positive(sigma, "sigma");
  return std::erfc(half_width / (sigma * std::numbers::sqrt2));
}

PartitionChain recommended_chain(std::size_t n, double sigma_tilde_sq) {
  if (n < 2 || !is_power_of_two(n))
    throw std::invalid_argument("block length must be a power of two >= 2, got " + std::to_string(n));
  require_positive(sigma_tilde_sq, "sigma_tilde_sq");

  // Work in units of sigma_tilde; flatness is increasing in the spacing.
  const auto top_flatness = [](double ratio) { return flatness_factor(ScaledIntegerLattice(ratio), 1.0); };
  double lo = 1e-3;
  double hi = 64.0;
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (top_flatness(mid) < kChainTailThreshold ? lo : hi) = mid;
  }
  const double ratio = lo;

  int levels = 1;
  while (gaussian_tail_mass(std::ldexp(ratio, levels - 1), 1.0) >= kChainTailThreshold) ++levels;

  return PartitionChain(ratio * std::sqrt(sigma_tilde_sq), levels);
}

double log_aliased_density(const ScaledIntegerLattice& lattice, double sigma, double x) {
  require_positive(sigma, "sigma");
  const double v = lattice.spacing();
  const double d = reduce(x, v);
  if (sigma / v >= kDualRegime) return -std::log(v) + std::log1p(dual_excess(d, v, sigma));
  return primal_log_sum(d, v, sigma) - std::log(std::sqrt(2.0 * kPi) * sigma);
}

double aliased_density(const ScaledIntegerLattice& lattice, double sigma, double x) {
  return std::exp(log_aliased_density(lattice, sigma, x));
}

double aliased_density_excess(const ScaledIntegerLattice& lattice, double sigma, double x) {
  require_positive(sigma, "sigma");
  const double v = lattice.spacing();
  const double d = reduce(x, v);
  if (sigma / v >= kDualRegime) return dual_excess(d, v, sigma);
  return std::expm1(std::log(v) + primal_log_sum(d, v, sigma) - std::log(std::sqrt(2.0 * kPi) * sigma));
}

double flatness_factor(const ScaledIntegerLattice& lattice, double sigma) {
  require_positive(sigma, "sigma");
  const double rho = sigma / lattice.spacing();
  if (rho >= kDualRegime) {
    const double decay = 2.0 * kPi * kPi * rho * rho;
    double sum = 0.0;
    for (long k = 1;; ++k) {
      const double term = std::exp(-decay * static_cast<double>(k * k));
      sum += term;
      if (term <= kSeriesTail * sum) break;
    }
    return 2.0 * sum;
  }
  // v f(0) - 1 = (1 / (sqrt(2 pi) rho)) sum_k exp(-k^2 / 2 rho^2) - 1
  const double decay = 1.0 / (2.0 * rho * rho);
  double sum = 0.0;
  for (long k = 1;; ++k) {
    const double term = std::exp(-decay * static_cast<double>(k * k));
    sum += term;
    if (term <= kSeriesTail * (1.0 + 2.0 * sum)) break;
  }
  return (1.0 + 2.0 * sum) / (std::sqrt(2.0 * kPi) * rho) - 1.0;
}

double mod_capacity(const ScaledIntegerLattice& lattice, double sigma_sq) {
  require_positive(sigma_sq, "sigma_sq");
  const double v = lattice.spacing();
  const double sigma = std::sqrt(sigma_sq);
  const double half = 0.5 * v;
  using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;

  // C = (1/v) int_cell g log2 g with g = v f; the integral of g - 1 over a cell
  // vanishes, so integrate the non-negative phi(g) = g ln g - g + 1 instead.
  double integral = 0.0;
  if (sigma / v >= kDualRegime) {
    const auto integrand = [&](double x) { return phi_from_delta(dual_excess(x, v, sigma)); };
    integral = Quad::integrate(integrand, 0.0, half, 20, 1e-13);
  } else {
    const double log_scale = std::log(v) - std::log(std::sqrt(2.0 * kPi) * sigma);
    const auto integrand = [&](double x) { return phi_from_log(log_scale + primal_log_sum(x, v, sigma)); };
    const double knee = std::min(half, 8.0 * sigma);
    integral = Quad::integrate(integrand, 0.0, knee, 20, 1e-13);
    if (knee < half) integral += Quad::integrate(integrand, knee, half, 20, 1e-13);
  }
  return 2.0 * integral / (v * kLn2);
}

double aliased_entropy(const ScaledIntegerLattice& lattice, double sigma_sq) {
  return std::log2(lattice.volume()) - mod_capacity(lattice, sigma_sq);
}

double partition_capacity(const PartitionChain& chain, int level, double sigma_sq) {
  if (level < 1 || level > chain.levels()) throw std::out_of_range("partition level must lie in [1, r]");
  return mod_capacity(chain.lattice(level), sigma_sq) - mod_capacity(chain.lattice(level - 1), sigma_sq);
}

}  // namespace polarlattice
