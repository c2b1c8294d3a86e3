#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "polarlattice/metrics.hpp"
#include "polarlattice/quantizer.hpp"

namespace polarlattice {

// Invalid configuration; field() names the first offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error("field '" + field + "': " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct ExperimentConfig {
  std::size_t n = 1024;
  double beta = 0.3;
  std::size_t mc_trials_construction = 10000;
  std::size_t mc_trials_eval = 1000;
  double kappa = 400.0;
  double sigma_tilde_sq = 1.0;
  std::string frozen_policy = "random-dither";  // or "fixed"
  std::uint64_t offset_seed = 0;
  std::string lattice = "polar";  // polar | full-rate | zero-rate
  std::uint64_t seed = 1;
  std::string out = "out.csv";
  std::vector<std::size_t> sweep_n{256, 1024, 4096};
  std::size_t num_offsets = 10;
  std::string mode = "sample";  // or "map"
  unsigned workers = 1;
  std::string quantizer_path;  // load instead of building when set
  std::string plot_path;       // optional SVG for `sweep`
};

// `key = value` lines; '#' starts a comment. Unknown keys are errors.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_file(const std::string& path);
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

// Throws ConfigError for the first field that breaks a precondition.
void validate(const ExperimentConfig& cfg);

// FNV-1a over the fields that change results; seed, workers and output paths
// are excluded (the seed is stamped separately).
std::uint64_t config_hash(const ExperimentConfig& cfg);
std::string config_hash_hex(const ExperimentConfig& cfg);

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"construct", "quantize", "distortion", "nsm",
                                              "ledger",    "offsets",  "sweep"};
  return names;
}

// Runs one subcommand, writing its artifacts under cfg.out. Returns 0 on success.
int run(const std::string& subcommand, const ExperimentConfig& cfg);

// The quantizer the config describes: loaded from quantizer_path, or built.
PolarLatticeQuantizer make_quantizer(const ExperimentConfig& cfg);

std::string metrics_header();
std::string metrics_row(const GoodnessLedger& ledger, const ExperimentConfig& cfg, std::size_t trials);

// Minimal SVG of log2(2 pi e G) against log2 N.
void write_sweep_svg(const SweepResult& sweep, const std::string& path);

}  // namespace polarlattice
