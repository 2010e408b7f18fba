#include "oco/kernel.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <numbers>

#include "oco/error.hpp"

namespace oco {

double gaussian_kernel(const Vector& x, const Vector& y, double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("kernel bandwidth sigma must be > 0");
  return std::exp(-(x - y).squaredNorm() / (2.0 * sigma * sigma));
}

Matrix gram_matrix(std::span<const Vector> points, double sigma) {
  const auto n = static_cast<Eigen::Index>(points.size());
  Matrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      k(i, j) = k(j, i) = gaussian_kernel(points[i], points[j], sigma);
    }
  }
  return k;
}

Eigen::LLT<Matrix> factorize_spd(const Matrix& a, const char* what) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() == Eigen::Success) return llt;
  std::cerr << "warning: " << what << ": Cholesky failed, retrying with 1e-10 jitter\n";
  Matrix jittered = a;
  jittered.diagonal().array() += 1e-10;
  llt.compute(jittered);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(std::string(what) + ": matrix is not positive definite");
  }
  return llt;
}

// GramState ---------------------------------------------------------------

GramState::GramState(double bandwidth, double ridge) : sigma_(bandwidth), ridge_(ridge) {
  if (!(bandwidth > 0.0)) throw ConfigError("kernel bandwidth sigma must be > 0");
  if (!(ridge > 0.0)) throw ConfigError("ridge a must be > 0");
}

void GramState::reserve(Eigen::Index n) {
  if (n <= k_.rows()) return;
  const Eigen::Index cap = std::max<Eigen::Index>(16, std::max(n, 2 * k_.rows()));
  Matrix k = Matrix::Zero(cap, cap);
  Matrix l = Matrix::Zero(cap, cap);
  k.topLeftCorner(n_, n_) = k_.topLeftCorner(n_, n_);
  l.topLeftCorner(n_, n_) = l_.topLeftCorner(n_, n_);
  k_.swap(k);
  l_.swap(l);
}

Vector GramState::kernel_column(const Vector& x) const {
  Vector k(n_);
  for (Eigen::Index i = 0; i < n_; ++i) k[i] = gaussian_kernel(points_[i], x, sigma_);
  return k;
}

Vector GramState::lower_solve(const Vector& b) const {
  if (n_ == 0) return Vector(0);
  return cholesky().triangularView<Eigen::Lower>().solve(b);
}

Vector GramState::solve(const Vector& b) const {
  if (n_ == 0) return Vector(0);
  Vector z = lower_solve(b);
  return cholesky().transpose().triangularView<Eigen::Upper>().solve(z);
}

bool GramState::append(const Vector& x, const Vector* lowered) {
  const Vector col = kernel_column(x);
  const Vector l = lowered ? *lowered : lower_solve(col);
  reserve(n_ + 1);
  k_.block(n_, 0, 1, n_) = col.transpose();
  k_.block(0, n_, n_, 1) = col;
  k_(n_, n_) = 1.0;
  points_.push_back(x);

  const double pivot = 1.0 + ridge_ - l.squaredNorm();
  ++n_;
  ++appends_since_refactor_;
  if (!(pivot > 0.0) || appends_since_refactor_ >= kRefactorInterval) {
    refactorize();
    return true;
  }
  l_.block(n_ - 1, 0, 1, n_ - 1) = l.transpose();
  l_(n_ - 1, n_ - 1) = std::sqrt(pivot);
  return false;
}

void GramState::refactorize() {
  Matrix a = gram();
  a.diagonal().array() += ridge_;
  auto llt = factorize_spd(a, "GramState");
  l_.topLeftCorner(n_, n_) = llt.matrixL();
  appends_since_refactor_ = 0;
}

// Batch closed forms ----------------------------------------------------

namespace {

void check_square(const Matrix& k) {
  if (k.rows() != k.cols()) throw ConfigError("kernel matrix must be square");
}

Matrix shifted(const Matrix& k, double shift) {
  Matrix a = k;
  a.diagonal().array() += shift;
  return a;
}

}  // namespace

Vector krr_fit(const Matrix& gram, const Vector& labels, double ridge) {
  check_square(gram);
  if (!(ridge > 0.0)) throw ConfigError("ridge a must be > 0");
  if (labels.size() != gram.rows()) throw ConfigError("label count does not match kernel matrix");
  return factorize_spd(shifted(gram, ridge), "krr_fit").solve(labels);
}

double offline_penalized_optimum(const Matrix& gram, const Vector& labels, double ridge) {
  return ridge * labels.dot(krr_fit(gram, labels, ridge));
}

double log_det_ratio(const Matrix& gram, double ridge) {
  check_square(gram);
  if (!(ridge > 0.0)) throw ConfigError("ridge a must be > 0");
  Matrix a = gram / ridge;
  a.diagonal().array() += 1.0;
  auto llt = factorize_spd(a, "log_det_ratio");
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

double penalized_regret_upper(const Matrix& gram, double ridge, double bound) {
  if (bound < 0.0) throw ConfigError("B must be nonnegative");
  return 4.0 * bound * bound * log_det_ratio(gram, ridge);
}

double penalized_regret_lower(const Matrix& gram, double ridge, long horizon) {
  if (horizon <= 1) throw ConfigError("lower bound needs T > 1");
  return log_det_ratio(gram, ridge) + 2.0 * std::log1p(-1.0 / static_cast<double>(horizon));
}

double effective_dimension(const Matrix& gram, double lambda) {
  check_square(gram);
  if (!(lambda > 0.0)) throw ConfigError("lambda must be > 0");
  return factorize_spd(shifted(gram, lambda), "effective_dimension").solve(gram).trace();
}

double lb_noise_level(double kappa, double ridge, double horizon) {
  if (!(horizon >= 2.0)) throw ConfigError("noise level needs T >= 2");
  if (!(ridge > 0.0)) throw ConfigError("ridge a must be > 0");
  return std::sqrt(2.0 * (1.0 + kappa * kappa / ridge) * std::log(horizon));
}

double map_density_identity_check(const Matrix& gram, double ridge, const Vector& y1,
                                  const Vector& y2) {
  check_square(gram);
  if (y1.size() != gram.rows() || y2.size() != gram.rows()) {
    throw ConfigError("label count does not match kernel matrix");
  }
  const auto ridge_factor = factorize_spd(shifted(gram, ridge), "map_density_identity_check");
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  const double t = static_cast<double>(gram.rows());

  // -log Q(y | theta_map) - log q(theta_map), dropping the prior's normalizer
  // (shared by y1 and y2).
  auto neg_log_joint = [&](const Vector& y) {
    const Vector alpha = ridge_factor.solve(y);
    const Vector fitted = gram * alpha;
    const double neg_log_lik = 0.5 * t * log_2pi + 0.5 * (y - fitted).squaredNorm();
    const double rkhs_norm2 = alpha.dot(gram * alpha);
    return neg_log_lik + 0.5 * ridge * rkhs_norm2;
  };

  Matrix cov = gram / ridge;
  cov.diagonal().array() += 1.0;
  const auto cov_factor = factorize_spd(cov, "map_density_identity_check");
  auto half_quad = [&](const Vector& y) { return 0.5 * y.dot(cov_factor.solve(y)); };

  const double actual = neg_log_joint(y1) - neg_log_joint(y2);
  const double quadform = half_quad(y1) - half_quad(y2);
  return std::abs(actual - quadform);
}

PenalizedBoundReport make_bound_report(const Matrix& gram, double ridge, double bound,
                                       double lambda, long horizon) {
  PenalizedBoundReport r;
  r.horizon = horizon < 0 ? static_cast<long>(gram.rows()) : horizon;
  r.ridge = ridge;
  r.bound = bound;
  r.lambda = lambda;
  r.logdet = log_det_ratio(gram, ridge);
  r.upper = 4.0 * bound * bound * r.logdet;
  r.lower = r.horizon > 1 ? r.logdet + 2.0 * std::log1p(-1.0 / static_cast<double>(r.horizon))
                          : std::numeric_limits<double>::quiet_NaN();
  r.d_eff = effective_dimension(gram, lambda);
  const double kappa2 = gram.rows() > 0 ? gram.diagonal().maxCoeff() : 1.0;
  r.lb_bound = r.horizon >= 2 ? lb_noise_level(std::sqrt(kappa2), ridge, static_cast<double>(r.horizon))
                              : std::numeric_limits<double>::quiet_NaN();
  return r;
}

void to_json(nlohmann::json& j, const PenalizedBoundReport& r) {
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  j = nlohmann::json{{"logdet", r.logdet}, {"upper", r.upper},   {"lower", num(r.lower)},
                     {"d_eff", r.d_eff},   {"lambda", r.lambda}, {"a", r.ridge},
                     {"B", r.bound},       {"T", r.horizon},     {"B_lb", num(r.lb_bound)}};
}

}  // namespace oco
