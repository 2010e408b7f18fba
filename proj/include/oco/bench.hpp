#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oco/flh.hpp"
#include "oco/losses.hpp"

namespace oco {

/// z_1..z_T, either Euclidean points or RKHS functions f_t = sum_i beta_i k(u_i, .)
/// over shared anchors u_i with |f|^2 = beta^T K_u beta.
class ComparatorSequence {
 public:
  static ComparatorSequence euclidean(std::vector<Vector> points);
  static ComparatorSequence rkhs(std::vector<Vector> anchors, double bandwidth,
                                 std::vector<Vector> coefficients);

  long size() const { return static_cast<long>(points_.size()); }
  bool is_rkhs() const { return !anchors_.empty(); }
  /// Point (Euclidean) or coefficient vector (RKHS) of round t, 1-based.
  const Vector& at(long t) const { return points_.at(static_cast<std::size_t>(t - 1)); }
  const std::vector<Vector>& points() const { return points_; }
  const std::vector<Vector>& anchors() const { return anchors_; }
  const Matrix& anchor_gram() const { return anchor_gram_; }

  /// |z_i - z_j| in the Euclidean or RKHS norm.
  double distance(long i, long j) const;
  /// RKHS function of round t evaluated at x.
  double evaluate(long t, const Vector& x) const;
  /// V_T cached at construction.
  double variation() const { return variation_; }

 private:
  std::vector<Vector> points_;
  std::vector<Vector> anchors_;
  double bandwidth_ = 1.0;
  Matrix anchor_gram_;
  double variation_ = 0.0;
};

/// V_T = sum_{t=2}^T |z_t - z_{t-1}|; 0 for T <= 1.
double path_variation(const ComparatorSequence& z);
/// V_{s->e} = sum_{t=s+1}^e |z_t - z_{t-1}|.
double segment_variation(const ComparatorSequence& z, long start, long end);

/// sum_{t=2}^T max_{x in probes} |f_t(x) - f_{t-1}(x)|, a lower approximation
/// of the functional variation C_T.  Throws ConfigError on an empty probe set.
double functional_variation(std::span<const LossFunction> losses, std::span<const Vector> probes);

/// C_T for quadratic losses of a common curvature on a common ball: the
/// difference of two such losses is affine, so its sup over the ball is
/// |b| + R |a|.  Other loss sequences fall back to the default probe set.
double functional_variation(std::span<const LossFunction> losses);

/// Default probe set: an evenly spaced grid for 1-D domains, otherwise
/// deterministic pseudo-random points in the ball (half on the boundary).
std::vector<Vector> probe_set(Eigen::Index dim, double radius, int count = 128);

struct Bin {
  long start = 1;
  long end = 1;
  friend bool operator==(const Bin&, const Bin&) = default;
};
using Partition = std::vector<Bin>;

/// Greedy partition of [1, T]: close [s, t-1] as soon as V_{s->t} >= v_tilde,
/// then restart at t; the open bin [s, T] is appended at the end.
Partition partition_by_variation(const ComparatorSequence& z, double v_tilde);

struct TraceRow {
  long round = 0;
  double learner_loss = 0.0;
  double comparator_loss = 0.0;
  double cum_regret = 0.0;
  double prediction = std::numeric_limits<double>::quiet_NaN();  ///< scalar predictions only
  double label = std::numeric_limits<double>::quiet_NaN();
};

/// Per-round losses of a learner and its comparator sequence.
struct RegretTrace {
  std::string algorithm;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::vector<TraceRow> rows;

  void push(double learner_loss, double comparator_loss);
  long size() const { return static_cast<long>(rows.size()); }

  /// Header `round,learner_loss,comparator_loss,cum_regret`, 17 significant digits.
  void write_csv(std::ostream& os) const;
};

/// sum learner loss - sum comparator loss.
double dynamic_regret(const RegretTrace& trace);

/// sum_{t=r}^s f_t(x_t) - f_t(z) for a fixed z.
double interval_regret(const RegretTrace& trace, std::span<const LossFunction> losses, long r,
                       long s, const Vector& z);

/// sum (yhat_t - y_t)^2 minus the penalized offline optimum over the RKHS.
double penalized_regret(const RegretTrace& trace, const Matrix& gram, double ridge);

enum class DriftKind { kPiecewiseConstant, kRandomWalk, kKernelRegression };

struct EnvironmentConfig {
  DriftKind kind = DriftKind::kRandomWalk;
  long horizon = 100;
  int dim = 2;
  double target_variation = 0.0;
  std::uint64_t seed = 0;
  double curvature = 1.0;       ///< H of the quadratic losses
  double domain_radius = 1.0;   ///< decision ball for quadratic losses
  double center_radius = -1.0;  ///< ball holding the drifting centers; < 0 means domain_radius
  int switches = 0;             ///< piecewise-constant only; 0 picks the fewest that fit
  double bandwidth = 1.0;       ///< kernel drift
  double bound = 1.0;           ///< B: labels, RKHS-norm ball and clipping
  int anchors = 6;
  double label_noise = 0.0;
};

/// Loss stream plus the comparator it is measured against.
struct Environment {
  std::vector<LossFunction> losses;
  ComparatorSequence comparators;
  /// Comparator in each loss's own domain: z_t for quadratics, [f_t(x_t)] for
  /// the kernel stream.
  std::vector<Vector> comparator_points;
};

/// Deterministic in the seed.  Drifting quadratics have centers equal to the
/// comparator, so comparators are the per-round minimizers.  The kernel
/// stream draws x_t uniformly from [-1, 1]^d and labels y_t = f_t(x_t) plus
/// clipped Gaussian noise.  Throws ConfigError when the target V_T cannot be
/// realized with steps that stay inside the center ball.
Environment generate_environment(const EnvironmentConfig& config);

/// Losses of every expert, indexed by birth round.
struct ExpertLossLog {
  std::vector<std::vector<double>> by_birth;
  /// Loss of the expert born at `birth` in round t, if it was alive.
  std::optional<double> loss(long birth, long round) const;
};

/// Runs FLH over the environment and records its regret trace.  When `log`
/// is given, every expert's loss is recorded.
RegretTrace run_flh(Flh& flh, const Environment& env, ExpertLossLog* log = nullptr);

/// sum_{t=r}^s f_t(x_t) - f_t(x_t^{(r)}) for the expert born at r.
double meta_regret_vs_expert(const RegretTrace& trace, const ExpertLossLog& log, long r, long s);

/// Best fixed point in hindsight for quadratics of one curvature: the
/// projected mean of the centers over [r, s].
Vector best_fixed_quadratic(std::span<const LossFunction> losses, long r, long s);

}  // namespace oco
