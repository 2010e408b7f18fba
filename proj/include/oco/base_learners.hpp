#pragma once

#include <optional>

#include "oco/kernel.hpp"
#include "oco/losses.hpp"

namespace oco {

/// Projected online gradient descent with step size 1/(H t), where t is the
/// learner's own round counter starting at 1.
class OgdLearner {
 public:
  OgdLearner(Vector start, double curvature, Ball domain);

  const Vector& predict() const { return x_; }
  /// x <- Project(x - g / (H t)); t <- t + 1.
  void step(const Vector& gradient);

  long local_round() const { return t_; }
  double curvature() const { return curvature_; }

 private:
  Vector x_;
  long t_ = 1;
  double curvature_;
  Ball domain_;
};

/// Minimizes (x - y)^T A (x - y) over the ball.  The multiplier of the norm
/// constraint is found by bisection in the eigenbasis of A.
Vector mahalanobis_project(const Matrix& a, const Vector& y, const Ball& ball);

/// Online Newton Step.
class OnsLearner {
 public:
  struct Params {
    double gamma = 1.0;
    double epsilon = 1.0;
  };
  /// gamma = min{1/(4GD), alpha}/2, epsilon = 1/(gamma^2 D^2).
  static Params default_params(const CurvatureCertificate& cert);

  OnsLearner(Vector start, Params params, Ball domain);

  const Vector& predict() const { return x_; }
  /// A <- A + g g^T;  x <- Project^A(x - A^{-1} g / gamma).
  void step(const Vector& gradient);

  const Matrix& precision() const { return a_; }
  const Params& params() const { return params_; }

 private:
  Vector x_;
  Matrix a_;
  Matrix a_inv_;
  Params params_;
  Ball domain_;
};

/// Online kernel ridge regression with predictions clipped to [-B, B].
///
/// Keeps the Cholesky factor L of (K + aI) over the points seen so far and
/// z = L^{-1} y, so a prediction k(x)^T (K + aI)^{-1} y = (L^{-1} k(x))^T z
/// costs one triangular solve.
class KrrLearner {
 public:
  KrrLearner(double bandwidth, double ridge, double bound);

  /// clip(k(x)^T (K + aI)^{-1} y); 0 on an empty history.
  double predict(const Vector& x);
  /// Adds (x, y).  Throws ConfigError if |y| > B.
  void update(const Vector& x, double label);

  const GramState& gram() const { return gram_; }
  const Vector& labels() const { return labels_; }
  double bound() const { return bound_; }

 private:
  void refresh_weights();

  GramState gram_;
  double bound_;
  Vector labels_;
  Vector z_;  // L^{-1} y
  // last predict() query and its L^{-1} k(x), reused by update() on the same point
  std::optional<std::pair<Vector, Vector>> cached_;
};

}  // namespace oco
