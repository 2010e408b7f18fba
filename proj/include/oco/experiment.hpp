#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "oco/bench.hpp"
#include "oco/flh.hpp"
#include "oco/kernel.hpp"

namespace oco {

enum class ExperimentKind { kDynamicSc, kDynamicEc, kDynamicKernel, kPenalizedKrr, kBoundReport };

/// Validated experiment description read from a JSON config file.
///
/// Required keys: kind, T, seed.  Everything else has a default; see README
/// for the full list.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kDynamicSc;
  long horizon = 0;
  int dim = 2;
  std::uint64_t seed = 0;

  double curvature = 1.0;       // H
  double radius = 1.0;          // decision ball
  double center_radius = -1.0;  // drifting centers; < 0 means radius
  double bandwidth = 1.0;       // sigma
  double bound = 1.0;           // B
  double ridge = 1.0;           // a
  double lambda = 1.0;          // for d_eff
  std::optional<double> zeta;   // learning-rate override
  double target_variation = 0.0;
  DriftKind drift = DriftKind::kRandomWalk;
  int switches = 0;
  int anchors = 6;
  double label_noise = 0.0;
  Pruning pruning = Pruning::kNone;
  std::vector<Vector> points;   // bound-report: explicit points

  // sweep
  std::vector<long> grid_horizons;
  double variation_scale = 1.0;
  double variation_exponent = 0.5;
  int repeats = 1;
  bool synthetic_regret = false;

  std::string trace_file = "trace.csv";
  std::string metadata_file = "metadata.json";
  std::string report_file = "report.json";
  std::string summary_file = "summary.csv";

  nlohmann::json raw;  // effective config, after overrides
  std::string hash;    // FNV-1a of raw.dump()

  /// Parses and validates.  Errors are ConfigError("<origin>:<line>: ...").
  static ExperimentConfig parse(const std::string& text, const std::string& origin = "config",
                                std::optional<std::uint64_t> seed_override = std::nullopt);
  static ExperimentConfig load(const std::filesystem::path& path,
                               std::optional<std::uint64_t> seed_override = std::nullopt);
};

/// OCO_SEED from the environment, if set.
std::optional<std::uint64_t> seed_from_env();

std::string to_string(ExperimentKind kind);

struct ExperimentResult {
  RegretTrace trace;
  double regret = 0.0;     // dynamic regret, or penalized regret for penalized-krr
  double variation = 0.0;  // realized V_T
  std::optional<PenalizedBoundReport> report;
  nlohmann::json metadata;
};

/// Learning rate used by FLH for this config: the override, else H/G^2
/// (quadratic streams, G over the center ball) or 1/(8B^2) (kernel stream).
double default_learning_rate(const ExperimentConfig& cfg);

/// Runs one experiment in memory.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Writes trace CSV, metadata JSON and, when present, the bound report.
void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& result,
                   const std::filesystem::path& out_dir);

struct SweepRow {
  long horizon = 0;
  double variation = 0.0;
  double regret = 0.0;
  double sqrt_tv = 0.0;
  double ratio = 0.0;
};

struct SweepSummary {
  std::vector<SweepRow> rows;
  double slope = 0.0;  // NaN with fewer than two points
};

/// Least-squares slope of log(y) against log(x); NaN for fewer than two points.
double loglog_slope(std::span<const double> x, std::span<const double> y);

/// Runs every grid point (V_T = scale * T^exponent), averaging regret over
/// `repeats` consecutive seeds.  Points run on `threads` workers; the
/// summary is the same for any thread count.
SweepSummary run_sweep(const ExperimentConfig& cfg, int threads = 1);

void write_sweep_csv(const SweepSummary& summary, std::ostream& os);

}  // namespace oco
