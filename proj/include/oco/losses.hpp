#pragma once

#include <Eigen/Dense>

namespace oco {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Absolute slack allowed on the domain norm constraint.
inline constexpr double kDomainTolerance = 1e-9;

/// Closed ball of the given radius, centered at the origin.
///
/// For Euclidean losses this is the decision set {x : |x| <= radius}.  For the
/// kernel loss it is the range of predictions [-radius, radius] reachable by
/// functions of RKHS norm at most radius (k(x, x) = 1 for the Gaussian kernel).
struct Ball {
  double radius = 1.0;

  double diameter() const { return 2.0 * radius; }
  bool contains(const Vector& x, double tol = kDomainTolerance) const {
    return x.norm() <= radius + tol;
  }
  /// Euclidean projection onto the ball.
  Vector project(const Vector& x) const;
};

/// Curvature facts about a loss over its domain.
struct CurvatureCertificate {
  double strong_convexity = 0.0;  ///< H, 0 if merely convex
  double exp_concavity = 0.0;     ///< alpha
  double gradient_bound = 0.0;    ///< G
  double diameter = 0.0;          ///< D
};

enum class LossKind { kQuadratic, kSquaredErrorLinear, kSquaredErrorKernel };

/// Convex loss f_t with closed-form value and gradient.
///
///  - quadratic:            f(x) = (H/2) |x - c|^2 on a Euclidean ball
///  - squared-error-linear: f(w) = (w.v - y)^2 on the ball |w| <= B, |v| <= 1
///  - squared-error-kernel: f(p) = (p - y)^2 where p = f_w(x_t) is the value of
///    an RKHS function at the embedded point x_t.  The loss is evaluated on that
///    prediction (a 1-vector), which carries all the information of the RKHS
///    weight: the exp-concavity inequality in weight space reduces exactly to
///    the same inequality on predictions.
///
/// Values are immutable after construction.
class LossFunction {
 public:
  static LossFunction quadratic(Vector center, double curvature, Ball domain);
  static LossFunction squared_error_linear(Vector feature, double label, double bound);
  static LossFunction squared_error_kernel(Vector point, double label, double bandwidth,
                                           double bound);

  LossKind kind() const { return kind_; }
  const Ball& domain() const { return domain_; }
  /// Dimension of the points eval/grad accept.
  Eigen::Index dim() const;

  double eval(const Vector& x) const;
  Vector grad(const Vector& x) const;
  CurvatureCertificate certify() const;

  // quadratic
  const Vector& center() const { return vec_; }
  double curvature() const { return curvature_; }
  // squared-error kinds
  const Vector& feature() const { return vec_; }
  const Vector& point() const { return vec_; }
  double label() const { return label_; }
  double bandwidth() const { return bandwidth_; }
  double bound() const { return domain_.radius; }

  /// Minimizer over the domain (quadratic kind only).
  Vector minimizer() const;

 private:
  LossFunction() = default;
  void check_domain(const Vector& x) const;

  LossKind kind_ = LossKind::kQuadratic;
  Vector vec_;
  double curvature_ = 0.0;
  double label_ = 0.0;
  double bandwidth_ = 1.0;
  Ball domain_;
};

}  // namespace oco
