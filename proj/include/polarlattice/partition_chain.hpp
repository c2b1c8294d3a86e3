#pragma once

#include <cstddef>

namespace polarlattice {

// Threshold used by recommended_chain for both the top-lattice flatness factor
// and the Gaussian mass escaping the bottom cell.
inline constexpr double kChainTailThreshold = 1.0 / 65536.0;

bool is_power_of_two(std::size_t n) noexcept;

// The one-dimensional lattice vZ. V(vZ) = v, dual lattice (1/v)Z.
class ScaledIntegerLattice {
 public:
  explicit ScaledIntegerLattice(double spacing);

  double spacing() const noexcept { return spacing_; }
  double volume() const noexcept { return spacing_; }
  double dual_spacing() const noexcept { return 1.0 / spacing_; }

 private:
  double spacing_;
};

// Binary chain eta Z / 2 eta Z / ... / eta 2^r Z. Level l has spacing eta 2^l,
// so level 0 is the top lattice and level r the bottom one.
class PartitionChain {
 public:
  PartitionChain(double eta, int levels);

  double eta() const noexcept { return eta_; }
  int levels() const noexcept { return levels_; }

  double spacing(int level) const;
  ScaledIntegerLattice lattice(int level) const { return ScaledIntegerLattice(spacing(level)); }
  ScaledIntegerLattice top() const { return lattice(0); }
  ScaledIntegerLattice bottom() const { return lattice(levels_); }

  // log2 V(bottom) = log2(eta) + r.
  double log2_bottom_volume() const;

 private:
  double eta_;
  int levels_;
};

// Chain for block length n and noise variance sigma_tilde_sq: the largest eta
// with flatness_factor(eta Z, sigma_tilde) < kChainTailThreshold, then the
// smallest r with P(|noise| > eta 2^(r-1)) < kChainTailThreshold. Both are
// fixed multiples of sigma_tilde, so the chain scales with sqrt(sigma_tilde_sq).
// Throws std::invalid_argument unless n is a power of two >= 2.
PartitionChain recommended_chain(std::size_t n, double sigma_tilde_sq);

// P(|n| > half_width) for n ~ N(0, sigma^2).
double gaussian_tail_mass(double half_width, double sigma);

// f_{sigma,L}(x): the L-periodic sum of N(0, sigma^2) densities.
double aliased_density(const ScaledIntegerLattice& lattice, double sigma, double x);

// Natural log of aliased_density, finite far into the tails.
double log_aliased_density(const ScaledIntegerLattice& lattice, double sigma, double x);

// v f_{sigma,L}(x) - 1, accurate in relative terms when the density is flat.
double aliased_density_excess(const ScaledIntegerLattice& lattice, double sigma, double x);

// eps_L(sigma) = Theta_{L*}(2 pi sigma^2) - 1 = 2 sum_{k>=1} exp(-2 pi^2 sigma^2 k^2 / v^2).
double flatness_factor(const ScaledIntegerLattice& lattice, double sigma);

// h(L, sigma^2) in bits, integrated over one cell.
double aliased_entropy(const ScaledIntegerLattice& lattice, double sigma_sq);

// C(L, sigma^2) = log2 V(L) - h(L, sigma^2), in bits.
double mod_capacity(const ScaledIntegerLattice& lattice, double sigma_sq);

// Capacity of the L_{l-1}/L_l channel, 1 <= level <= r, in bits.
double partition_capacity(const PartitionChain& chain, int level, double sigma_sq);

}  // namespace polarlattice
