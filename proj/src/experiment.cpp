#include "polarlattice/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "polarlattice/parallel.hpp"

namespace polarlattice {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError(key, "expected a non-negative integer, got '" + v + "'");
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw ConfigError(key, "integer out of range: '" + v + "'");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key, "expected a real number, got '" + v + "'");
  }
}

std::vector<std::size_t> parse_list(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_u64(key, trim(item)));
  if (out.empty()) throw ConfigError(key, "expected a comma-separated list");
  return out;
}

QuantizeMode quantize_mode(const ExperimentConfig& cfg) {
  return cfg.mode == "map" ? QuantizeMode::map : QuantizeMode::sample;
}

FrozenPolicy frozen_policy(const ExperimentConfig& cfg) {
  return cfg.frozen_policy == "fixed" ? FrozenPolicy::fixed_from_seed(cfg.offset_seed) : FrozenPolicy::random_dither();
}

EvalOptions eval_options(const ExperimentConfig& cfg) {
  return {cfg.seed, cfg.workers, quantize_mode(cfg), Stream::evaluation, 0};
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

void stamp(std::ostream& out, const ExperimentConfig& cfg) {
  out << "# config_hash=" << config_hash_hex(cfg) << " seed=" << cfg.seed << '\n';
}

void write_construction_report(const PolarLatticeQuantizer& q, const std::string& path, const ExperimentConfig& cfg) {
  constexpr int kBins = 10;
  auto out = open_out(path);
  stamp(out, cfg);
  out << "# promotions=" << q.promotions() << '\n';
  out << "level,n,info_size,frozen_size,flagged,threshold";
  for (int b = 0; b < kBins; ++b) out << ",z_bin" << b;
  out << '\n';
  for (const auto& level : q.levels()) {
    std::vector<std::size_t> hist(kBins, 0);
    for (double z : level.z) hist[std::clamp(static_cast<int>(z * kBins), 0, kBins - 1)]++;
    out << level.level << ',' << q.n() << ',' << level.info_size() << ',' << q.n() - level.info_size() << ','
        << level.flagged << ',' << fmt(level.threshold);
    for (auto h : hist) out << ',' << h;
    out << '\n';
  }
}

}  // namespace

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "n") cfg.n = parse_u64(key, value);
  else if (key == "beta") cfg.beta = parse_double(key, value);
  else if (key == "mc_trials_construction") cfg.mc_trials_construction = parse_u64(key, value);
  else if (key == "mc_trials_eval") cfg.mc_trials_eval = parse_u64(key, value);
  else if (key == "kappa") cfg.kappa = parse_double(key, value);
  else if (key == "sigma_tilde_sq") cfg.sigma_tilde_sq = parse_double(key, value);
  else if (key == "frozen_policy") cfg.frozen_policy = value;
  else if (key == "offset_seed") cfg.offset_seed = parse_u64(key, value);
  else if (key == "lattice") cfg.lattice = value;
  else if (key == "seed") cfg.seed = parse_u64(key, value);
  else if (key == "out") cfg.out = value;
  else if (key == "sweep_n") cfg.sweep_n = parse_list(key, value);
  else if (key == "num_offsets") cfg.num_offsets = parse_u64(key, value);
  else if (key == "mode") cfg.mode = value;
  else if (key == "workers") cfg.workers = static_cast<unsigned>(parse_u64(key, value));
  else if (key == "quantizer") cfg.quantizer_path = value;
  else if (key == "plot") cfg.plot_path = value;
  else throw ConfigError(key, "unknown key");
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno), "expected 'key = value'");
    set_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read " + path);
  return parse_config(in);
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.n < 2 || !is_power_of_two(cfg.n)) throw ConfigError("n", "must be a power of two >= 2");
  if (!(cfg.beta > 0.0 && cfg.beta < 0.5)) throw ConfigError("beta", "must lie in (0, 1/2)");
  if (cfg.mc_trials_construction < 1000) throw ConfigError("mc_trials_construction", "must be at least 1000");
  if (cfg.mc_trials_eval < 100) throw ConfigError("mc_trials_eval", "must be at least 100");
  if (!(cfg.kappa >= 100.0) || !std::isfinite(cfg.kappa)) throw ConfigError("kappa", "must be at least 100");
  if (!(cfg.sigma_tilde_sq > 0.0) || !std::isfinite(cfg.sigma_tilde_sq))
    throw ConfigError("sigma_tilde_sq", "must be positive");
  if (cfg.frozen_policy != "random-dither" && cfg.frozen_policy != "fixed")
    throw ConfigError("frozen_policy", "must be 'random-dither' or 'fixed'");
  if (cfg.lattice != "polar" && cfg.lattice != "full-rate" && cfg.lattice != "zero-rate")
    throw ConfigError("lattice", "must be 'polar', 'full-rate' or 'zero-rate'");
  if (cfg.out.empty()) throw ConfigError("out", "must not be empty");
  for (std::size_t i = 0; i < cfg.sweep_n.size(); ++i) {
    if (cfg.sweep_n[i] < 2 || !is_power_of_two(cfg.sweep_n[i]))
      throw ConfigError("sweep_n", "entries must be powers of two >= 2");
    if (i > 0 && cfg.sweep_n[i] <= cfg.sweep_n[i - 1]) throw ConfigError("sweep_n", "must be ascending");
  }
  if (cfg.num_offsets < 1) throw ConfigError("num_offsets", "must be at least 1");
  if (cfg.mode != "sample" && cfg.mode != "map") throw ConfigError("mode", "must be 'sample' or 'map'");
  if (cfg.workers < 1) throw ConfigError("workers", "must be at least 1");
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  std::ostringstream canon;
  auto hexd = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return std::string(buf);
  };
  canon << "n=" << cfg.n << "\nbeta=" << hexd(cfg.beta) << "\nmc_trials_construction=" << cfg.mc_trials_construction
        << "\nmc_trials_eval=" << cfg.mc_trials_eval << "\nkappa=" << hexd(cfg.kappa)
        << "\nsigma_tilde_sq=" << hexd(cfg.sigma_tilde_sq) << "\nfrozen_policy=" << cfg.frozen_policy
        << "\nlattice=" << cfg.lattice << "\nmode=" << cfg.mode << "\nnum_offsets=" << cfg.num_offsets
        << "\nsweep_n=";
  for (auto v : cfg.sweep_n) canon << v << ',';
  // offset_seed only matters under the fixed policy.
  if (cfg.frozen_policy == "fixed") canon << "\noffset_seed=" << cfg.offset_seed;
  canon << '\n';
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canon.str()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash_hex(const ExperimentConfig& cfg) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(config_hash(cfg)));
  return buf;
}

PolarLatticeQuantizer make_quantizer(const ExperimentConfig& cfg) {
  if (!cfg.quantizer_path.empty()) return load_quantizer(cfg.quantizer_path);
  const auto chain = recommended_chain(cfg.n, cfg.sigma_tilde_sq);
  const auto params = params_for_fixed_tilde(cfg.sigma_tilde_sq, cfg.kappa);
  if (cfg.lattice != "polar") {
    const std::uint8_t fill = cfg.lattice == "full-rate" ? 1 : 0;
    return PolarLatticeQuantizer::from_sets(chain, params, std::vector<Bits>(chain.levels(), Bits(cfg.n, fill)),
                                            frozen_policy(cfg), cfg.seed);
  }
  BuildConfig bc;
  bc.n = cfg.n;
  bc.beta = cfg.beta;
  bc.mc_trials = cfg.mc_trials_construction;
  bc.policy = frozen_policy(cfg);
  bc.seed = cfg.seed;
  bc.workers = cfg.workers;
  return PolarLatticeQuantizer::build(chain, params, bc);
}

std::string metrics_header() {
  return "n,r,beta,kappa,trials,rate,eps_a,eps_b,eps_c,nsm_est,nsm_ci_lo,nsm_ci_hi,log2pieG";
}

std::string metrics_row(const GoodnessLedger& g, const ExperimentConfig& cfg, std::size_t trials) {
  std::ostringstream row;
  row << g.n << ',' << g.r << ',' << fmt(cfg.beta) << ',' << fmt(cfg.kappa) << ',' << trials << ',' << fmt(g.rate)
      << ',' << fmt(g.eps_a) << ',' << fmt(g.eps_b) << ',' << fmt(g.eps_c);
  if (g.nsm)
    row << ',' << fmt(g.nsm->nsm) << ',' << fmt(g.nsm->ci_lo) << ',' << fmt(g.nsm->ci_hi) << ','
        << fmt(g.log2_2pie_g());
  else
    row << ",,,,";
  return row.str();
}

void write_sweep_svg(const SweepResult& sweep, const std::string& path) {
  constexpr double W = 480, H = 320, M = 48;
  std::vector<std::pair<double, double>> pts;
  for (const auto& row : sweep.rows)
    if (row.ledger.nsm) pts.emplace_back(std::log2(static_cast<double>(row.n)), row.ledger.log2_2pie_g());
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (!pts.empty()) {
    x0 = x1 = pts[0].first;
    y0 = 0.0;
    y1 = pts[0].second;
    for (auto [x, y] : pts) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
    if (x1 == x0) x1 = x0 + 1;
    if (y1 <= y0) y1 = y0 + 1;
  }
  auto sx = [&](double x) { return M + (x - x0) / (x1 - x0) * (W - 2 * M); };
  auto sy = [&](double y) { return H - M - (y - y0) / (y1 - y0) * (H - 2 * M); };
  auto out = open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << M << "\" y1=\"" << H - M << "\" x2=\"" << W - M << "\" y2=\"" << H - M
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << M << "\" y1=\"" << M << "\" x2=\"" << M << "\" y2=\"" << H - M << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">log2 N</text>\n";
  out << "<text x=\"14\" y=\"" << H / 2 << "\" transform=\"rotate(-90 14," << H / 2
      << ")\" text-anchor=\"middle\">log2(2 pi e G)</text>\n";
  if (!pts.empty()) {
    out << "<polyline fill=\"none\" stroke=\"steelblue\" points=\"";
    for (auto [x, y] : pts) out << sx(x) << ',' << sy(y) << ' ';
    out << "\"/>\n";
    for (auto [x, y] : pts) out << "<circle cx=\"" << sx(x) << "\" cy=\"" << sy(y) << "\" r=\"3\"/>\n";
  }
  out << "</svg>\n";
}

int run(const std::string& sub, const ExperimentConfig& cfg) {
  validate(cfg);
  const auto opt = eval_options(cfg);

  if (sub == "construct") {
    const auto q = make_quantizer(cfg);
    save_quantizer(q, cfg.out);
    write_construction_report(q, cfg.out + ".report.csv", cfg);
    return 0;
  }
  if (sub == "quantize") {
    const auto q = make_quantizer(cfg);
    const auto& p = q.params();
    std::vector<std::string> rows(cfg.mc_trials_eval);
    parallel_for(cfg.mc_trials_eval, cfg.workers, [&](std::size_t k) {
      Rng rng = Rng::substream(cfg.seed, Stream::evaluation, k);
      std::vector<double> y(q.n());
      for (auto& v : y) v = std::sqrt(p.sigma_s_sq) * rng.normal();
      const auto res = q.quantize(y, rng, opt.mode);
      std::ostringstream row;
      row << k;
      for (const auto& u : res.u_levels) row << ',' << std::count(u.begin(), u.end(), std::uint8_t{1});
      row << ',' << fmt(res.distortion);
      rows[k] = row.str();
    });
    auto out = open_out(cfg.out);
    stamp(out, cfg);
    out << "trial";
    for (int l = 1; l <= q.chain().levels(); ++l) out << ",ones_l" << l;
    out << ",distortion\n";
    for (const auto& row : rows) out << row << '\n';
    return 0;
  }
  if (sub == "distortion") {
    const auto q = make_quantizer(cfg);
    const auto st = estimate_distortion(q, cfg.mc_trials_eval, opt);
    const double ceiling = std::pow(q.chain().spacing(q.chain().levels() - 1), 2);
    auto out = open_out(cfg.out);
    stamp(out, cfg);
    out << "n,r,trials,sigma_tilde_sq,mean_per_dim,variance_of_per_dim,max_per_dim,se_mean,se_variance,ceiling\n";
    out << q.n() << ',' << q.chain().levels() << ',' << st.trials << ',' << fmt(q.params().sigma_tilde_sq) << ','
        << fmt(st.mean_per_dim) << ',' << fmt(st.variance_of_per_dim) << ',' << fmt(st.max_per_dim) << ','
        << fmt(st.se_mean) << ',' << fmt(st.se_variance) << ',' << fmt(ceiling) << '\n';
    return 0;
  }
  if (sub == "nsm" || sub == "ledger") {
    const auto q = make_quantizer(cfg);
    const auto nsm = estimate_nsm(q, cfg.mc_trials_eval, cfg.kappa, opt);
    const auto g = goodness_ledger(q, nsm);
    auto out = open_out(cfg.out);
    stamp(out, cfg);
    out << metrics_header() << '\n' << metrics_row(g, cfg, cfg.mc_trials_eval) << '\n';
    if (sub == "ledger") {
      auto detail = open_out(cfg.out + ".detail.csv");
      stamp(detail, cfg);
      detail << "key,value\n"
             << "log2_volume_per_dim," << fmt(g.log2_volume_per_dim) << '\n'
             << "capacity_sum," << fmt(g.capacity_sum) << '\n'
             << "vnr_log2_gap," << fmt(g.vnr_log2_gap) << '\n'
             << "log2_vnr," << fmt(g.log2_vnr) << '\n'
             << "nsm_bound," << fmt(g.nsm_bound) << '\n'
             << "nsm_se," << fmt(nsm.se) << '\n'
             << "flatness," << fmt(g.flatness) << '\n'
             << "eps_a_bound," << fmt(g.eps_a_bound) << '\n'
             << "eps_b_bound," << fmt(g.eps_b_bound) << '\n'
             << "rd_rate," << fmt(g.rd_rate) << '\n'
             << "rate_undershoot," << (g.rate_undershoot ? 1 : 0) << '\n'
             << "promotions," << q.promotions() << '\n'
             << "additive_term," << g.additive_term << '\n';
    }
    return 0;
  }
  if (sub == "offsets") {
    const auto q = make_quantizer(cfg);
    const auto study = offset_study(q, cfg.num_offsets, cfg.mc_trials_eval, opt);
    auto out = open_out(cfg.out);
    stamp(out, cfg);
    out << "# pooled_mean=" << fmt(study.pooled_mean) << " max_relative_spread=" << fmt(study.max_relative_spread)
        << '\n';
    out << "offset,offset_seed,trials,mean_per_dim,variance_of_per_dim,se_mean,relative_deviation\n";
    for (std::size_t k = 0; k < study.per_offset.size(); ++k) {
      const auto& s = study.per_offset[k];
      out << k << ',' << study.offset_seeds[k] << ',' << s.trials << ',' << fmt(s.mean_per_dim) << ','
          << fmt(s.variance_of_per_dim) << ',' << fmt(s.se_mean) << ','
          << fmt((s.mean_per_dim - study.pooled_mean) / study.pooled_mean) << '\n';
    }
    return 0;
  }
  if (sub == "sweep") {
    SweepConfig sc;
    sc.beta = cfg.beta;
    sc.mc_trials_construction = cfg.mc_trials_construction;
    sc.mc_trials_eval = cfg.mc_trials_eval;
    sc.kappa = cfg.kappa;
    sc.sigma_tilde_sq = cfg.sigma_tilde_sq;
    sc.policy = frozen_policy(cfg);
    sc.seed = cfg.seed;
    sc.workers = cfg.workers;
    sc.mode = quantize_mode(cfg);
    const auto sweep = sweep_and_fit(cfg.sweep_n, sc);
    auto out = open_out(cfg.out);
    stamp(out, cfg);
    out << "# reference_slope=" << fmt(sweep.reference_slope) << " fitted_slope=" << fmt(sweep.slope) << '\n';
    out << metrics_header() << '\n';
    for (const auto& row : sweep.rows) out << metrics_row(row.ledger, cfg, cfg.mc_trials_eval) << '\n';
    if (!cfg.plot_path.empty()) write_sweep_svg(sweep, cfg.plot_path);
    return 0;
  }
  throw ConfigError("subcommand", "unknown subcommand '" + sub + "'");
}

}  // namespace polarlattice
