#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>

#include "polarlattice/quantizer.hpp"

namespace polarlattice {

namespace {

constexpr const char* kMagic = "POLARLATTICE-QUANTIZER";
constexpr int kVersion = 1;

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_real(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::runtime_error("bad real in quantizer file: " + s);
  return v;
}

std::string bits_string(const Bits& b) {
  std::string s(b.size(), '0');
  for (std::size_t i = 0; i < b.size(); ++i) s[i] = b[i] ? '1' : '0';
  return s;
}

Bits parse_bits(const std::string& s) {
  Bits b(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '0' && s[i] != '1') throw std::runtime_error("bad bit string in quantizer file");
    b[i] = s[i] == '1';
  }
  return b;
}

// Reads "key value..." and checks the key.
std::istringstream expect(std::istream& in, const std::string& key) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("quantizer file ends before '" + key + "'");
  std::istringstream ls(line);
  std::string got;
  ls >> got;
  if (got != key) throw std::runtime_error("quantizer file: expected '" + key + "', found '" + got + "'");
  return ls;
}

template <class T>
T read_one(std::istream& in, const std::string& key) {
  auto ls = expect(in, key);
  std::string tok;
  ls >> tok;
  if constexpr (std::is_same_v<T, double>) {
    return parse_real(tok);
  } else if constexpr (std::is_same_v<T, std::string>) {
    return tok;
  } else {
    return static_cast<T>(std::stoull(tok));
  }
}

std::vector<double> read_reals(std::istream& in, const std::string& key, std::size_t n) {
  auto ls = expect(in, key);
  std::vector<double> v;
  std::string tok;
  while (ls >> tok) v.push_back(parse_real(tok));
  if (!v.empty() && v.size() != n) throw std::runtime_error("quantizer file: wrong length for '" + key + "'");
  return v;
}

}  // namespace

void save_quantizer(const PolarLatticeQuantizer& q, std::ostream& out) {
  out << kMagic << ' ' << kVersion << '\n';
  out << "n " << q.n() << '\n';
  out << "eta " << hex(q.chain().eta()) << '\n';
  out << "levels " << q.chain().levels() << '\n';
  out << "sigma_s_sq " << hex(q.params().sigma_s_sq) << '\n';
  out << "delta " << hex(q.params().delta) << '\n';
  out << "beta " << hex(q.beta()) << '\n';
  out << "mc_trials " << q.mc_trials() << '\n';
  out << "seed " << q.seed() << '\n';
  out << "policy " << (q.policy_kind() == FrozenPolicyKind::fixed ? "fixed" : "random-dither") << '\n';
  out << "promotions " << q.promotions() << '\n';
  for (std::size_t l = 0; l < q.levels().size(); ++l) {
    const auto& level = q.levels()[l];
    out << "level " << level.level << '\n';
    out << "threshold " << hex(level.threshold) << '\n';
    out << "flagged " << level.flagged << '\n';
    out << "info " << bits_string(level.info) << '\n';
    out << "frozen " << bits_string(q.frozen_bits()[l]) << '\n';
    out << "z";
    for (double z : level.z) out << ' ' << hex(z);
    out << "\nz_se";
    for (double s : level.z_se) out << ' ' << hex(s);
    out << '\n';
  }
  out << "end\n";
}

PolarLatticeQuantizer load_quantizer(std::istream& in) {
  {
    std::string magic;
    int version = 0;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty quantizer file");
    std::istringstream ls(line);
    ls >> magic >> version;
    if (magic != kMagic) throw std::runtime_error("not a quantizer file (bad magic)");
    if (version != kVersion) throw std::runtime_error("unsupported quantizer file version " + std::to_string(version));
  }
  const auto n = read_one<std::size_t>(in, "n");
  const double eta = read_one<double>(in, "eta");
  const int r = read_one<int>(in, "levels");
  const double sigma_s_sq = read_one<double>(in, "sigma_s_sq");
  const double delta = read_one<double>(in, "delta");
  const double beta = read_one<double>(in, "beta");
  const auto mc = read_one<std::size_t>(in, "mc_trials");
  const auto seed = read_one<std::uint64_t>(in, "seed");
  const auto policy = read_one<std::string>(in, "policy");
  const auto promotions = read_one<std::size_t>(in, "promotions");
  if (policy != "fixed" && policy != "random-dither") throw std::runtime_error("unknown frozen policy " + policy);

  std::vector<PolarLevel> levels;
  std::vector<Bits> frozen;
  for (int l = 1; l <= r; ++l) {
    PolarLevel level;
    level.level = read_one<int>(in, "level");
    level.threshold = read_one<double>(in, "threshold");
    level.flagged = read_one<std::size_t>(in, "flagged");
    level.info = parse_bits(read_one<std::string>(in, "info"));
    frozen.push_back(parse_bits(read_one<std::string>(in, "frozen")));
    level.z = read_reals(in, "z", n);
    level.z_se = read_reals(in, "z_se", n);
    if (level.info.size() != n) throw std::runtime_error("quantizer file: mask length differs from n");
    levels.push_back(std::move(level));
  }
  expect(in, "end");
  return PolarLatticeQuantizer::restore(PartitionChain(eta, r), derive_params(sigma_s_sq, delta), std::move(levels),
                                        policy == "fixed" ? FrozenPolicyKind::fixed : FrozenPolicyKind::random_dither,
                                        std::move(frozen), seed, beta, mc, promotions);
}

void save_quantizer(const PolarLatticeQuantizer& q, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  save_quantizer(q, out);
}

PolarLatticeQuantizer load_quantizer(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return load_quantizer(in);
}

}  // namespace polarlattice
