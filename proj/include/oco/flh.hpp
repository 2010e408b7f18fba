#pragma once

#include <functional>
#include <span>
#include <variant>
#include <vector>

#include "oco/base_learners.hpp"
#include "oco/losses.hpp"

namespace oco {

using BaseLearner = std::variant<OgdLearner, OnsLearner, KrrLearner>;

/// Base learner together with its round of birth and current weight.
struct Expert {
  long birth = 1;
  BaseLearner learner;
  double weight = 0.0;
};

enum class Pruning { kNone, kAflh };

/// Lifetime of the expert born at round j: 2^(2 + z) where 2^z is the largest
/// power of two dividing j.
long aflh_lifetime(long birth);
/// Whether the expert born at `birth` is still alive in round t.
bool aflh_is_alive(long birth, long round);
/// Birth rounds of the experts alive in round t, ascending.
std::vector<long> aflh_alive(long round);

/// sum_j weights[j] * predictions[j].
Vector weighted_prediction(std::span<const double> weights, std::span<const Vector> predictions);

/// v_i exp(-zeta loss_i) / sum_j v_j exp(-zeta loss_j).  Losses are shifted by
/// their minimum before exponentiation.
std::vector<double> exponential_reweight(std::span<const double> weights,
                                         std::span<const double> losses, double zeta);

/// Addition step after round t: scales the weights by 1 - 1/(t+1) and
/// appends 1/(t+1) for the newcomer.
std::vector<double> addition_step(std::span<const double> reweighted, long round);

struct ExpertRecord {
  long birth = 0;
  Vector prediction;
  double loss = 0.0;
};

struct RoundResult {
  Vector prediction;
  double loss = 0.0;
  std::vector<ExpertRecord> experts;
};

/// Follow-the-Leading-History: one base learner per start time, mixed with
/// exponential weights and a 1/(t+1) share for each newcomer.
class Flh {
 public:
  using Factory = std::function<BaseLearner(long birth)>;

  Flh(double learning_rate, Factory factory, Pruning pruning = Pruning::kNone);

  /// Current round t (1-based); the pool holds the experts that play in it.
  long round() const { return t_; }
  double learning_rate() const { return zeta_; }
  Pruning pruning() const { return pruning_; }
  const std::vector<Expert>& experts() const { return experts_; }
  std::vector<double> weights() const;

  /// Weighted average of the live experts' predictions, in pool order.
  Vector predict(std::span<const Vector> expert_predictions) const;

  /// Exponential reweighting with the experts' losses, then the addition
  /// step, spawning the learner born at t+1, then AFLH pruning when enabled.
  void update(std::span<const double> expert_losses);

  /// One full round against `loss`: queries the experts, plays the weighted
  /// average, feeds f_t to each expert and updates the weights.
  RoundResult play(const LossFunction& loss);

 private:
  double zeta_;
  Factory factory_;
  Pruning pruning_;
  long t_ = 1;
  std::vector<Expert> experts_;
};

/// Prediction of a base learner for a round with the given loss.  For
/// kernel learners this is the clipped prediction at the loss's point as a
/// 1-vector.
Vector learner_prediction(BaseLearner& learner, const LossFunction& loss);

/// Feeds f_t to a base learner whose prediction this round was `played`.
void learner_update(BaseLearner& learner, const LossFunction& loss, const Vector& played);

}  // namespace oco
