#include <CLI11.hpp>

#include <iostream>

#include "polarlattice/experiment.hpp"

using namespace polarlattice;

int main(int argc, char** argv) {
  CLI::App app{"Polar lattice quantizer experiments"};
  std::string sub;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::string> out, mode, quantizer, plot;

  app.add_option("subcommand", sub, "construct | quantize | distortion | nsm | ledger | offsets | sweep")
      ->required()
      ->check(CLI::IsMember(subcommands()));
  app.add_option("--config", config_path, "key = value configuration file");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--workers", workers, "worker threads");
  app.add_option("--out", out, "output path");
  app.add_option("--mode", mode, "sample | map");
  app.add_option("--quantizer", quantizer, "serialized quantizer to load instead of building");
  app.add_option("--plot", plot, "SVG plot path (sweep)");
  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : parse_config_file(config_path);
    if (seed) cfg.seed = *seed;
    if (workers) cfg.workers = *workers;
    if (out) cfg.out = *out;
    if (mode) cfg.mode = *mode;
    if (quantizer) cfg.quantizer_path = *quantizer;
    if (plot) cfg.plot_path = *plot;
    return run(sub, cfg);
  } catch (const ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return 2;
  } catch (const ConstructionRejected& e) {
    std::cerr << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
