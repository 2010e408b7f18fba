#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "oco/losses.hpp"

namespace oco {

/// k(x, y) = exp(-|x - y|^2 / (2 sigma^2)).  Throws ConfigError for sigma <= 0.
double gaussian_kernel(const Vector& x, const Vector& y, double sigma);

/// Pairwise Gaussian-kernel matrix of the given points.
Matrix gram_matrix(std::span<const Vector> points, double sigma);

/// Kernel matrix over a growing point set together with the Cholesky factor
/// of (K + aI), extended by one row and column per appended point.
///
/// The factor is rebuilt from K every `kRefactorInterval` appends to bound the
/// drift of the rank-one extensions.
class GramState {
 public:
  static constexpr int kRefactorInterval = 512;

  GramState(double bandwidth, double ridge);

  Eigen::Index size() const { return n_; }
  double bandwidth() const { return sigma_; }
  double ridge() const { return ridge_; }
  const std::vector<Vector>& points() const { return points_; }

  auto gram() const { return k_.topLeftCorner(n_, n_); }
  auto cholesky() const { return l_.topLeftCorner(n_, n_); }

  /// [k(x_1, x), ..., k(x_n, x)]
  Vector kernel_column(const Vector& x) const;
  /// L^{-1} b for the current lower factor L of K + aI.
  Vector lower_solve(const Vector& b) const;
  /// (K + aI)^{-1} b.
  Vector solve(const Vector& b) const;

  /// Appends x.  `lowered` may carry L^{-1} kernel_column(x) when the caller
  /// already has it.  Returns true when the factor was rebuilt from scratch,
  /// which invalidates any cached L^{-1} products.
  bool append(const Vector& x, const Vector* lowered = nullptr);

  /// Rebuilds the factor from K.
  void refactorize();

 private:
  void reserve(Eigen::Index n);

  double sigma_;
  double ridge_;
  Eigen::Index n_ = 0;
  int appends_since_refactor_ = 0;
  std::vector<Vector> points_;
  Matrix k_;  // capacity-sized buffers, active block is n_ x n_
  Matrix l_;
};

/// Cholesky of a symmetric positive definite matrix.  On failure a 1e-10
/// diagonal jitter is added once (and reported on stderr); a second failure
/// throws NumericalError.
Eigen::LLT<Matrix> factorize_spd(const Matrix& a, const char* what);

/// alpha = (K + aI)^{-1} y, the minimizer of |y - K alpha|^2 + a alpha^T K alpha.
Vector krr_fit(const Matrix& gram, const Vector& labels, double ridge);

/// inf_f sum (f(x_t) - y_t)^2 + a |f|^2 over the RKHS, = a y^T (K + aI)^{-1} y.
double offline_penalized_optimum(const Matrix& gram, const Vector& labels, double ridge);

/// log |I + K/a|, from the Cholesky diagonal.
double log_det_ratio(const Matrix& gram, double ridge);

/// 4 B^2 log |I + K/a|, the penalized-regret guarantee of clipped KRR.
double penalized_regret_upper(const Matrix& gram, double ridge, double bound);

/// log |I + K/a| + 2 log(1 - 1/T), the minimax penalized-regret lower bound.
/// Throws ConfigError for T <= 1.
double penalized_regret_lower(const Matrix& gram, double ridge, long horizon);

/// d_eff(lambda) = Tr(K (K + lambda I)^{-1}).
double effective_dimension(const Matrix& gram, double lambda);

/// Label range at which the lower bound holds: sqrt(2 (1 + kappa^2/a) log T).
double lb_noise_level(double kappa, double ridge, double horizon);

/// Checks that the Gaussian likelihood at the MAP fit times the RKHS prior
/// behaves as N(0, I + K/a) in y.  Returns the absolute difference between
/// the change of -log(Q q) from y1 to y2 and the change of the quadratic form
/// y^T (I + K/a)^{-1} y / 2; both routes are evaluated independently.
double map_density_identity_check(const Matrix& gram, double ridge, const Vector& y1,
                                  const Vector& y2);

struct PenalizedBoundReport {
  double logdet = 0.0;
  double upper = 0.0;
  double lower = 0.0;
  double d_eff = 0.0;
  double lambda = 1.0;
  double ridge = 1.0;
  double bound = 1.0;
  long horizon = 0;
  double lb_bound = 0.0;  ///< B from lb_noise_level(kappa, a, T)
};

/// Evaluates every bound quantity for the Gram matrix K (T = K.rows() unless
/// given).  `lower` is NaN when T <= 1.
PenalizedBoundReport make_bound_report(const Matrix& gram, double ridge, double bound,
                                       double lambda, long horizon = -1);

void to_json(nlohmann::json& j, const PenalizedBoundReport& r);

}  // namespace oco
