#include "oco/losses.hpp"

#include <cmath>
#include <sstream>

#include "oco/error.hpp"

namespace oco {

Vector Ball::project(const Vector& x) const {
  const double n = x.norm();
  if (n <= radius) return x;
  return x * (radius / n);
}

LossFunction LossFunction::quadratic(Vector center, double curvature, Ball domain) {
  if (!(curvature > 0.0)) throw ConfigError("quadratic loss needs curvature H > 0");
  if (!(domain.radius >= 0.0)) throw ConfigError("domain radius must be nonnegative");
  LossFunction f;
  f.kind_ = LossKind::kQuadratic;
  f.vec_ = std::move(center);
  f.curvature_ = curvature;
  f.domain_ = domain;
  return f;
}

LossFunction LossFunction::squared_error_linear(Vector feature, double label, double bound) {
  if (!(bound > 0.0)) throw ConfigError("squared-error loss needs B > 0");
  if (std::abs(label) > bound) throw ConfigError("label outside [-B, B]");
  if (feature.norm() > 1.0 + kDomainTolerance) throw ConfigError("feature norm must be <= 1");
  LossFunction f;
  f.kind_ = LossKind::kSquaredErrorLinear;
  f.vec_ = std::move(feature);
  f.label_ = label;
  f.domain_ = Ball{bound};
  return f;
}

LossFunction LossFunction::squared_error_kernel(Vector point, double label, double bandwidth,
                                                double bound) {
  if (!(bound > 0.0)) throw ConfigError("squared-error loss needs B > 0");
  if (!(bandwidth > 0.0)) throw ConfigError("kernel bandwidth must be > 0");
  if (std::abs(label) > bound) throw ConfigError("label outside [-B, B]");
  LossFunction f;
  f.kind_ = LossKind::kSquaredErrorKernel;
  f.vec_ = std::move(point);
  f.label_ = label;
  f.bandwidth_ = bandwidth;
  f.domain_ = Ball{bound};
  return f;
}

Eigen::Index LossFunction::dim() const {
  return kind_ == LossKind::kSquaredErrorKernel ? 1 : vec_.size();
}

void LossFunction::check_domain(const Vector& x) const {
  if (x.size() != dim()) {
    std::ostringstream os;
    os << "point has dimension " << x.size() << ", loss expects " << dim();
    throw DomainError(os.str());
  }
  const double n = x.norm();
  if (!(n <= domain_.radius + kDomainTolerance)) {
    std::ostringstream os;
    os.precision(17);
    os << "point norm " << n << " exceeds domain radius " << domain_.radius;
    throw DomainError(os.str());
  }
}

double LossFunction::eval(const Vector& x) const {
  check_domain(x);
  switch (kind_) {
    case LossKind::kQuadratic:
      return 0.5 * curvature_ * (x - vec_).squaredNorm();
    case LossKind::kSquaredErrorLinear: {
      const double r = x.dot(vec_) - label_;
      return r * r;
    }
    case LossKind::kSquaredErrorKernel: {
      const double r = x[0] - label_;
      return r * r;
    }
  }
  return 0.0;
}

Vector LossFunction::grad(const Vector& x) const {
  check_domain(x);
  switch (kind_) {
    case LossKind::kQuadratic:
      return curvature_ * (x - vec_);
    case LossKind::kSquaredErrorLinear:
      return 2.0 * (x.dot(vec_) - label_) * vec_;
    case LossKind::kSquaredErrorKernel:
      return Vector::Constant(1, 2.0 * (x[0] - label_));
  }
  return {};
}

CurvatureCertificate LossFunction::certify() const {
  CurvatureCertificate c;
  c.diameter = domain_.diameter();
  if (kind_ == LossKind::kQuadratic) {
    if (!(domain_.radius > 0.0)) throw ConfigError("degenerate domain: radius must be > 0");
    // max over the ball of |H (x - c)| is attained at x = -R c/|c|
    c.strong_convexity = curvature_;
    c.gradient_bound = curvature_ * (domain_.radius + vec_.norm());
    c.exp_concavity = curvature_ / (c.gradient_bound * c.gradient_bound);
    return c;
  }
  const double b2 = domain_.radius * domain_.radius;
  c.strong_convexity = 0.0;
  c.exp_concavity = 1.0 / (8.0 * b2);
  c.gradient_bound = 2.0 * b2;
  return c;
}

Vector LossFunction::minimizer() const {
  if (kind_ != LossKind::kQuadratic) throw ConfigError("minimizer() is defined for quadratic losses");
  return domain_.project(vec_);
}

}  // namespace oco
