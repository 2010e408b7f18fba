// Experiment runner: `oco run --config <path> [--out-dir <path>]` and
// `oco sweep --config <path> [--threads N] [--out-dir <path>]`.
//
// Exit status: 0 on success, 2 for an invalid config, 3 for a numerical
// failure during the run.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "oco/error.hpp"
#include "oco/experiment.hpp"

namespace {

int run_command(const std::string& config_path, const std::string& out_dir) {
  const auto cfg = oco::ExperimentConfig::load(config_path, oco::seed_from_env());
  const auto result = oco::run_experiment(cfg);
  oco::write_outputs(cfg, result, out_dir);
  std::printf("%s seed=%llu T=%ld regret=%.17g\n", oco::to_string(cfg.kind).c_str(),
              static_cast<unsigned long long>(cfg.seed), cfg.horizon, result.regret);
  return 0;
}

int sweep_command(const std::string& config_path, const std::string& out_dir, int threads) {
  const auto cfg = oco::ExperimentConfig::load(config_path, oco::seed_from_env());
  const auto summary = oco::run_sweep(cfg, threads);
  std::filesystem::create_directories(out_dir);
  const auto csv_path = std::filesystem::path(out_dir) / cfg.summary_file;
  {
    std::ofstream out(csv_path);
    if (!out) throw oco::ConfigError("cannot write " + csv_path.string());
    oco::write_sweep_csv(summary, out);
  }
  nlohmann::json meta = {{"slope", std::isfinite(summary.slope) ? nlohmann::json(summary.slope)
                                                                 : nlohmann::json(nullptr)},
                         {"config_hash", cfg.hash},
                         {"seed", cfg.seed},
                         {"config", cfg.raw}};
  std::ofstream(std::filesystem::path(out_dir) / "summary.json") << meta.dump(2) << "\n";
  oco::write_sweep_csv(summary, std::cout);
  std::printf("slope=%.6f\n", summary.slope);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online convex optimization regret experiments"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir = ".";
  int threads = 1;

  auto* run = app.add_subcommand("run", "run one experiment");
  run->add_option("--config", config, "JSON experiment config")->required();
  run->add_option("--out-dir", out_dir, "output directory");

  auto* sweep = app.add_subcommand("sweep", "run a grid of experiments and fit the scaling");
  sweep->add_option("--config", config, "JSON sweep config")->required();
  sweep->add_option("--out-dir", out_dir, "output directory");
  sweep->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) return run_command(config, out_dir);
    return sweep_command(config, out_dir, threads);
  } catch (const oco::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const oco::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const oco::DomainError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  }
}
