#include "oco/base_learners.hpp"

#include <algorithm>
#include <cmath>

#include "oco/error.hpp"

namespace oco {

OgdLearner::OgdLearner(Vector start, double curvature, Ball domain)
    : x_(std::move(start)), curvature_(curvature), domain_(domain) {
  if (!(curvature > 0.0)) throw ConfigError("OGD needs curvature H > 0");
  x_ = domain_.project(x_);
}

void OgdLearner::step(const Vector& gradient) {
  if (gradient.size() != x_.size()) throw ConfigError("gradient dimension mismatch");
  x_ = domain_.project(x_ - gradient / (curvature_ * static_cast<double>(t_)));
  ++t_;
}

Vector mahalanobis_project(const Matrix& a, const Vector& y, const Ball& ball) {
  if (y.norm() <= ball.radius) return y;
  if (ball.radius <= 0.0) return Vector::Zero(y.size());

  Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  const Vector& lambda = eig.eigenvalues();
  const Vector w = eig.eigenvectors().transpose() * y;

  // x(mu) = (A + mu I)^{-1} A y, whose norm decreases in mu.
  auto coords = [&](double mu) -> Vector {
    return (lambda.array() / (lambda.array() + mu) * w.array()).matrix();
  };
  const double r2 = ball.radius * ball.radius;
  double lo = 0.0;
  double hi = lambda.maxCoeff() * y.norm() / ball.radius;
  for (int it = 0; it < 200 && hi - lo > 1e-10 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (coords(mid).squaredNorm() > r2) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return ball.project(eig.eigenvectors() * coords(hi));
}

OnsLearner::Params OnsLearner::default_params(const CurvatureCertificate& cert) {
  const double gd = cert.gradient_bound * cert.diameter;
  if (!(gd > 0.0) || !(cert.exp_concavity > 0.0)) {
    throw ConfigError("ONS parameters need G, D, alpha > 0");
  }
  Params p;
  p.gamma = 0.5 * std::min(1.0 / (4.0 * gd), cert.exp_concavity);
  p.epsilon = 1.0 / (p.gamma * p.gamma * cert.diameter * cert.diameter);
  return p;
}

OnsLearner::OnsLearner(Vector start, Params params, Ball domain)
    : x_(std::move(start)), params_(params), domain_(domain) {
  if (!(params.gamma > 0.0) || !(params.epsilon > 0.0)) {
    throw ConfigError("ONS needs gamma > 0 and epsilon > 0");
  }
  const auto d = x_.size();
  a_ = params.epsilon * Matrix::Identity(d, d);
  a_inv_ = Matrix::Identity(d, d) / params.epsilon;
  x_ = domain_.project(x_);
}

void OnsLearner::step(const Vector& gradient) {
  if (gradient.size() != x_.size()) throw ConfigError("gradient dimension mismatch");
  a_.noalias() += gradient * gradient.transpose();
  // Sherman-Morrison update of A^{-1}
  const Vector u = a_inv_ * gradient;
  a_inv_.noalias() -= (u * u.transpose()) / (1.0 + gradient.dot(u));
  const Vector y = x_ - (a_inv_ * gradient) / params_.gamma;
  if (!y.allFinite()) throw NumericalError("ONS step produced a non-finite iterate");
  x_ = mahalanobis_project(a_, y, domain_);
}

KrrLearner::KrrLearner(double bandwidth, double ridge, double bound)
    : gram_(bandwidth, ridge), bound_(bound) {
  if (!(bound > 0.0)) throw ConfigError("clip level B must be > 0");
}

double KrrLearner::predict(const Vector& x) {
  if (gram_.size() == 0) {
    cached_.reset();
    return 0.0;
  }
  Vector lowered = gram_.lower_solve(gram_.kernel_column(x));
  const double raw = lowered.dot(z_);
  cached_.emplace(x, std::move(lowered));
  return std::clamp(raw, -bound_, bound_);
}

void KrrLearner::update(const Vector& x, double label) {
  if (!(std::abs(label) <= bound_)) throw ConfigError("label outside [-B, B]");
  const Vector* lowered = nullptr;
  if (cached_ && cached_->first.size() == x.size() && cached_->first == x) {
    lowered = &cached_->second;
  }
  const Vector l = lowered ? *lowered : gram_.lower_solve(gram_.kernel_column(x));
  const double prior = l.dot(z_);
  const bool rebuilt = gram_.append(x, &l);
  cached_.reset();

  labels_.conservativeResize(labels_.size() + 1);
  labels_[labels_.size() - 1] = label;
  if (rebuilt) {
    refresh_weights();
    return;
  }
  const auto n = gram_.size();
  z_.conservativeResize(n);
  z_[n - 1] = (label - prior) / gram_.cholesky()(n - 1, n - 1);
}

void KrrLearner::refresh_weights() { z_ = gram_.lower_solve(labels_); }

}  // namespace oco
