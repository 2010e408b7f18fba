#include "oco/flh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "oco/error.hpp"

namespace oco {

long aflh_lifetime(long birth) {
  if (birth < 1) throw ConfigError("birth round must be >= 1");
  long z = 0;
  for (long j = birth; (j & 1L) == 0; j >>= 1) ++z;
  return 1L << (2 + z);
}

bool aflh_is_alive(long birth, long round) {
  return birth <= round && round < birth + aflh_lifetime(birth);
}

std::vector<long> aflh_alive(long round) {
  if (round < 1) throw ConfigError("round must be >= 1");
  // An expert with exponent z lives 4 * 2^z rounds, so only births in
  // (round - 4 * 2^z, round] with that exponent can be alive.
  std::vector<long> alive;
  for (long scale = 1; scale <= round; scale <<= 1) {
    const long lo = std::max(1L, round - 4 * scale + 1);
    for (long j = (lo + scale - 1) / scale * scale; j <= round; j += scale) {
      if ((j / scale) % 2 == 1 && aflh_is_alive(j, round)) alive.push_back(j);
    }
  }
  std::sort(alive.begin(), alive.end());
  return alive;
}

Vector weighted_prediction(std::span<const double> weights, std::span<const Vector> predictions) {
  if (weights.size() != predictions.size() || predictions.empty()) {
    throw ConfigError("need exactly one prediction per expert");
  }
  Vector out = Vector::Zero(predictions.front().size());
  for (std::size_t i = 0; i < weights.size(); ++i) out += weights[i] * predictions[i];
  return out;
}

std::vector<double> exponential_reweight(std::span<const double> weights,
                                         std::span<const double> losses, double zeta) {
  if (weights.size() != losses.size()) throw ConfigError("need exactly one loss per expert");
  double shift = std::numeric_limits<double>::infinity();
  for (double l : losses) {
    if (std::isnan(l)) throw NumericalError("expert loss is NaN");
    shift = std::min(shift, l);
  }
  std::vector<double> out(weights.size());
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out[i] = weights[i] * std::exp(-zeta * (losses[i] - shift));
    total += out[i];
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw NumericalError("exponential weights degenerated");
  }
  for (double& w : out) w /= total;
  return out;
}

std::vector<double> addition_step(std::span<const double> reweighted, long round) {
  const double share = 1.0 / static_cast<double>(round + 1);
  std::vector<double> out;
  out.reserve(reweighted.size() + 1);
  for (double w : reweighted) out.push_back((1.0 - share) * w);
  out.push_back(share);
  return out;
}

Flh::Flh(double learning_rate, Factory factory, Pruning pruning)
    : zeta_(learning_rate), factory_(std::move(factory)), pruning_(pruning) {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate zeta must be > 0");
  if (!factory_) throw ConfigError("FLH needs a base-learner factory");
  experts_.push_back(Expert{1, factory_(1), 1.0});
}

std::vector<double> Flh::weights() const {
  std::vector<double> w;
  w.reserve(experts_.size());
  for (const auto& e : experts_) w.push_back(e.weight);
  return w;
}

Vector Flh::predict(std::span<const Vector> expert_predictions) const {
  if (expert_predictions.size() != experts_.size()) {
    throw ConfigError("need exactly one prediction per live expert");
  }
  return weighted_prediction(weights(), expert_predictions);
}

void Flh::update(std::span<const double> expert_losses) {
  if (expert_losses.size() != experts_.size()) {
    throw ConfigError("need exactly one loss per live expert");
  }
  const auto next = addition_step(exponential_reweight(weights(), expert_losses, zeta_), t_);
  for (std::size_t i = 0; i < experts_.size(); ++i) experts_[i].weight = next[i];
  experts_.push_back(Expert{t_ + 1, factory_(t_ + 1), next.back()});
  ++t_;

  if (pruning_ == Pruning::kAflh) {
    std::erase_if(experts_, [&](const Expert& e) { return !aflh_is_alive(e.birth, t_); });
    double total = 0.0;
    for (const auto& e : experts_) total += e.weight;
    for (auto& e : experts_) e.weight /= total;
  }
}

Vector learner_prediction(BaseLearner& learner, const LossFunction& loss) {
  return std::visit(
      [&](auto& l) -> Vector {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, KrrLearner>) {
          if (loss.kind() != LossKind::kSquaredErrorKernel) {
            throw ConfigError("kernel learners need squared-error-kernel losses");
          }
          return Vector::Constant(1, l.predict(loss.point()));
        } else {
          return l.predict();
        }
      },
      learner);
}

void learner_update(BaseLearner& learner, const LossFunction& loss, const Vector& played) {
  std::visit(
      [&](auto& l) {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, KrrLearner>) {
          l.update(loss.point(), loss.label());
        } else {
          l.step(loss.grad(played));
        }
      },
      learner);
}

RoundResult Flh::play(const LossFunction& loss) {
  RoundResult out;
  out.experts.reserve(experts_.size());
  std::vector<Vector> preds;
  preds.reserve(experts_.size());
  for (auto& e : experts_) preds.push_back(learner_prediction(e.learner, loss));

  out.prediction = predict(preds);
  out.loss = loss.eval(out.prediction);

  std::vector<double> losses(experts_.size());
  for (std::size_t i = 0; i < experts_.size(); ++i) {
    losses[i] = loss.eval(preds[i]);
    learner_update(experts_[i].learner, loss, preds[i]);
    out.experts.push_back(ExpertRecord{experts_[i].birth, preds[i], losses[i]});
  }
  update(losses);
  return out;
}

}  // namespace oco
