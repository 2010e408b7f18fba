#include "oco/bench.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

#include "oco/error.hpp"
#include "oco/kernel.hpp"

namespace oco {

// ComparatorSequence ------------------------------------------------------

ComparatorSequence ComparatorSequence::euclidean(std::vector<Vector> points) {
  ComparatorSequence z;
  z.points_ = std::move(points);
  z.variation_ = path_variation(z);
  return z;
}

ComparatorSequence ComparatorSequence::rkhs(std::vector<Vector> anchors, double bandwidth,
                                            std::vector<Vector> coefficients) {
  if (anchors.empty()) throw ConfigError("RKHS comparators need at least one anchor");
  for (const auto& c : coefficients) {
    if (c.size() != static_cast<Eigen::Index>(anchors.size())) {
      throw ConfigError("coefficient vector length must match the anchor count");
    }
  }
  ComparatorSequence z;
  z.anchor_gram_ = gram_matrix(anchors, bandwidth);
  z.anchors_ = std::move(anchors);
  z.bandwidth_ = bandwidth;
  z.points_ = std::move(coefficients);
  z.variation_ = path_variation(z);
  return z;
}

double ComparatorSequence::distance(long i, long j) const {
  const Vector diff = at(i) - at(j);
  if (!is_rkhs()) return diff.norm();
  return std::sqrt(std::max(0.0, diff.dot(anchor_gram_ * diff)));
}

double ComparatorSequence::evaluate(long t, const Vector& x) const {
  if (!is_rkhs()) throw ConfigError("evaluate() needs an RKHS comparator sequence");
  const Vector& beta = at(t);
  double v = 0.0;
  for (std::size_t i = 0; i < anchors_.size(); ++i) {
    v += beta[static_cast<Eigen::Index>(i)] * gaussian_kernel(anchors_[i], x, bandwidth_);
  }
  return v;
}

double segment_variation(const ComparatorSequence& z, long start, long end) {
  double v = 0.0;
  for (long t = start + 1; t <= end; ++t) v += z.distance(t, t - 1);
  return v;
}

double path_variation(const ComparatorSequence& z) { return segment_variation(z, 1, z.size()); }

// Functional variation ----------------------------------------------------

double functional_variation(std::span<const LossFunction> losses, std::span<const Vector> probes) {
  if (probes.empty()) throw ConfigError("functional variation needs a nonempty probe set");
  double total = 0.0;
  for (std::size_t t = 1; t < losses.size(); ++t) {
    double worst = 0.0;
    for (const auto& x : probes) {
      worst = std::max(worst, std::abs(losses[t].eval(x) - losses[t - 1].eval(x)));
    }
    total += worst;
  }
  return total;
}

std::vector<Vector> probe_set(Eigen::Index dim, double radius, int count) {
  std::vector<Vector> probes;
  probes.reserve(static_cast<std::size_t>(count));
  if (dim == 1) {
    for (int i = 0; i < count; ++i) {
      const double u = count == 1 ? 0.0 : -1.0 + 2.0 * i / (count - 1);
      probes.push_back(Vector::Constant(1, u * radius));
    }
    return probes;
  }
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  for (int i = 0; i < count; ++i) {
    Vector u(dim);
    for (auto& v : u) v = normal(rng);
    u.normalize();
    const double r = (i % 2 == 0) ? 1.0 : std::pow(unif(rng), 1.0 / static_cast<double>(dim));
    probes.push_back(radius * r * u);
  }
  return probes;
}

double functional_variation(std::span<const LossFunction> losses) {
  if (losses.size() < 2) return 0.0;
  bool closed_form = true;
  for (const auto& f : losses) {
    closed_form = closed_form && f.kind() == LossKind::kQuadratic &&
                  f.curvature() == losses[0].curvature() &&
                  f.domain().radius == losses[0].domain().radius;
  }
  if (!closed_form) {
    const auto probes = probe_set(losses[0].dim(), losses[0].domain().radius);
    return functional_variation(losses, probes);
  }
  // f_t - f_{t-1} = -H x.(c_t - c_{t-1}) + (H/2)(|c_t|^2 - |c_{t-1}|^2)
  const double h = losses[0].curvature();
  const double radius = losses[0].domain().radius;
  double total = 0.0;
  for (std::size_t t = 1; t < losses.size(); ++t) {
    const Vector& c = losses[t].center();
    const Vector& p = losses[t - 1].center();
    const double slope = h * (c - p).norm();
    const double offset = 0.5 * h * (c.squaredNorm() - p.squaredNorm());
    total += std::abs(offset) + radius * slope;
  }
  return total;
}

// Partition -----------------------------------------------------------------

Partition partition_by_variation(const ComparatorSequence& z, double v_tilde) {
  if (!(v_tilde > 0.0)) throw ConfigError("partition threshold must be > 0");
  Partition bins;
  const long horizon = z.size();
  long s = 1;
  double running = 0.0;  // V_{s->t}
  for (long t = 1; t <= horizon; ++t) {
    if (t > s) running += z.distance(t, t - 1);
    if (running >= v_tilde) {
      bins.push_back({s, t - 1});
      s = t;
      running = 0.0;
    }
  }
  if (horizon >= 1) bins.push_back({s, horizon});
  return bins;
}

// Regret accounting ---------------------------------------------------------

void RegretTrace::push(double learner_loss, double comparator_loss) {
  TraceRow row;
  row.round = size() + 1;
  row.learner_loss = learner_loss;
  row.comparator_loss = comparator_loss;
  const double prev = rows.empty() ? 0.0 : rows.back().cum_regret;
  row.cum_regret = prev + (learner_loss - comparator_loss);
  rows.push_back(row);
}

void RegretTrace::write_csv(std::ostream& os) const {
  os << "round,learner_loss,comparator_loss,cum_regret\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g,%.17g\n", r.round, r.learner_loss,
                  r.comparator_loss, r.cum_regret);
    os << buf;
  }
}

double dynamic_regret(const RegretTrace& trace) {
  double learner = 0.0;
  double comparator = 0.0;
  for (const auto& r : trace.rows) {
    learner += r.learner_loss;
    comparator += r.comparator_loss;
  }
  return learner - comparator;
}

double interval_regret(const RegretTrace& trace, std::span<const LossFunction> losses, long r,
                       long s, const Vector& z) {
  if (r < 1 || r > s || s > trace.size() || s > static_cast<long>(losses.size())) {
    throw ConfigError("interval [r, s] must satisfy 1 <= r <= s <= T");
  }
  double regret = 0.0;
  for (long t = r; t <= s; ++t) {
    const auto i = static_cast<std::size_t>(t - 1);
    regret += trace.rows[i].learner_loss - losses[i].eval(z);
  }
  return regret;
}

double penalized_regret(const RegretTrace& trace, const Matrix& gram, double ridge) {
  Vector labels(trace.size());
  double learner = 0.0;
  for (long t = 0; t < trace.size(); ++t) {
    const auto& row = trace.rows[static_cast<std::size_t>(t)];
    if (std::isnan(row.prediction) || std::isnan(row.label)) {
      throw ConfigError("penalized regret needs recorded predictions and labels");
    }
    labels[t] = row.label;
    learner += (row.prediction - row.label) * (row.prediction - row.label);
  }
  return learner - offline_penalized_optimum(gram, labels, ridge);
}

// Environments --------------------------------------------------------------

namespace {

Vector random_unit(std::mt19937_64& rng, Eigen::Index dim) {
  std::normal_distribution<double> normal;
  Vector u(dim);
  do {
    for (auto& v : u) v = normal(rng);
  } while (u.norm() == 0.0);
  return u.normalized();
}

Vector random_in_ball(std::mt19937_64& rng, Eigen::Index dim, double radius) {
  std::uniform_real_distribution<double> unif;
  return radius * std::pow(unif(rng), 1.0 / static_cast<double>(dim)) * random_unit(rng, dim);
}

// Moves c by exactly `length` in a random direction, staying inside the
// ball.  Needs length <= radius: if the random direction leaves the ball,
// stepping towards the origin lands at norm | |c| - length | <= radius.
Vector step_in_ball(const Vector& c, double length, double radius, std::mt19937_64& rng) {
  const Vector u = random_unit(rng, c.size());
  Vector next = c + length * u;
  if (next.norm() <= radius) return next;
  const double n = c.norm();
  const Vector inward = n > 0.0 ? Vector(-c / n) : Vector(-u);
  return c + length * inward;
}

std::vector<Vector> drift_path(const EnvironmentConfig& cfg, double radius, Eigen::Index dim,
                               std::mt19937_64& rng) {
  const long horizon = cfg.horizon;
  std::vector<Vector> path;
  path.reserve(static_cast<std::size_t>(horizon));
  path.push_back(random_in_ball(rng, dim, 0.5 * radius));
  if (cfg.target_variation == 0.0 || horizon == 1) {
    path.resize(static_cast<std::size_t>(horizon), path.front());
    return path;
  }
  if (cfg.kind == DriftKind::kPiecewiseConstant) {
    long switches = cfg.switches;
    if (switches <= 0) switches = static_cast<long>(std::ceil(cfg.target_variation / radius));
    if (switches > horizon - 1) throw ConfigError("too many switches for the horizon");
    const double jump = cfg.target_variation / static_cast<double>(switches);
    if (jump > radius) throw ConfigError("V_T target unachievable: jump exceeds center radius");
    long next_switch = 1;
    for (long t = 2; t <= horizon; ++t) {
      Vector c = path.back();
      // switch k happens at round 1 + ceil(k T / (m + 1))
      const long at =
          1 + static_cast<long>(std::ceil(static_cast<double>(next_switch * horizon) /
                                          static_cast<double>(switches + 1)));
      if (next_switch <= switches && t >= at) {
        c = step_in_ball(c, jump, radius, rng);
        ++next_switch;
      }
      path.push_back(std::move(c));
    }
    return path;
  }
  const double step = cfg.target_variation / static_cast<double>(horizon - 1);
  if (step > radius) throw ConfigError("V_T target unachievable: per-round step exceeds center radius");
  for (long t = 2; t <= horizon; ++t) path.push_back(step_in_ball(path.back(), step, radius, rng));
  return path;
}

}  // namespace

Environment generate_environment(const EnvironmentConfig& cfg) {
  if (cfg.horizon < 1) throw ConfigError("horizon T must be >= 1");
  if (cfg.dim < 1) throw ConfigError("dimension d must be >= 1");
  if (!(cfg.target_variation >= 0.0)) throw ConfigError("V_T target must be >= 0");
  std::mt19937_64 rng(cfg.seed);
  Environment env;
  env.losses.reserve(static_cast<std::size_t>(cfg.horizon));

  if (cfg.kind != DriftKind::kKernelRegression) {
    const double radius = cfg.center_radius < 0.0 ? cfg.domain_radius : cfg.center_radius;
    if (radius > cfg.domain_radius) throw ConfigError("center radius exceeds domain radius");
    auto centers = drift_path(cfg, radius, cfg.dim, rng);
    for (const auto& c : centers) {
      env.losses.push_back(LossFunction::quadratic(c, cfg.curvature, Ball{cfg.domain_radius}));
    }
    env.comparator_points = centers;
    env.comparators = ComparatorSequence::euclidean(std::move(centers));
    return env;
  }

  // Kernel stream: the walk runs on whitened coordinates g = L_u^T beta, for
  // which |f|_H = |g|, so RKHS steps have exactly the drawn length.
  if (cfg.anchors < 1) throw ConfigError("kernel drift needs at least one anchor");
  std::uniform_real_distribution<double> cube(-1.0, 1.0);
  std::vector<Vector> anchors;
  for (int i = 0; i < cfg.anchors; ++i) {
    Vector u(cfg.dim);
    for (auto& v : u) v = cube(rng);
    anchors.push_back(std::move(u));
  }
  const Matrix ku = gram_matrix(anchors, cfg.bandwidth);
  const auto llt = factorize_spd(ku, "kernel drift anchors");
  const Matrix lower = llt.matrixL();

  EnvironmentConfig walk = cfg;
  walk.kind = DriftKind::kRandomWalk;
  const auto whitened = drift_path(walk, cfg.bound, cfg.anchors, rng);
  std::vector<Vector> coefficients;
  coefficients.reserve(whitened.size());
  for (const auto& g : whitened) {
    coefficients.push_back(lower.transpose().triangularView<Eigen::Upper>().solve(g));
  }
  env.comparators = ComparatorSequence::rkhs(anchors, cfg.bandwidth, std::move(coefficients));

  std::normal_distribution<double> noise(0.0, 1.0);
  for (long t = 1; t <= cfg.horizon; ++t) {
    Vector x(cfg.dim);
    for (auto& v : x) v = cube(rng);
    const double value = std::clamp(env.comparators.evaluate(t, x), -cfg.bound, cfg.bound);
    double y = value;
    if (cfg.label_noise > 0.0) y += cfg.label_noise * noise(rng);
    y = std::clamp(y, -cfg.bound, cfg.bound);
    env.losses.push_back(LossFunction::squared_error_kernel(x, y, cfg.bandwidth, cfg.bound));
    env.comparator_points.push_back(Vector::Constant(1, value));
  }
  return env;
}

// Runs ----------------------------------------------------------------------

std::optional<double> ExpertLossLog::loss(long birth, long round) const {
  if (birth < 1 || birth > static_cast<long>(by_birth.size())) return std::nullopt;
  const auto& series = by_birth[static_cast<std::size_t>(birth - 1)];
  const long offset = round - birth;
  if (offset < 0 || offset >= static_cast<long>(series.size())) return std::nullopt;
  return series[static_cast<std::size_t>(offset)];
}

RegretTrace run_flh(Flh& flh, const Environment& env, ExpertLossLog* log) {
  RegretTrace trace;
  trace.rows.reserve(env.losses.size());
  for (std::size_t i = 0; i < env.losses.size(); ++i) {
    const auto& loss = env.losses[i];
    const auto result = flh.play(loss);
    trace.push(result.loss, loss.eval(env.comparator_points[i]));
    if (loss.kind() == LossKind::kSquaredErrorKernel) {
      trace.rows.back().prediction = result.prediction[0];
      trace.rows.back().label = loss.label();
    }
    if (log) {
      for (const auto& e : result.experts) {
        const auto b = static_cast<std::size_t>(e.birth);
        if (log->by_birth.size() < b) log->by_birth.resize(b);
        log->by_birth[b - 1].push_back(e.loss);
      }
    }
  }
  return trace;
}

double meta_regret_vs_expert(const RegretTrace& trace, const ExpertLossLog& log, long r, long s) {
  if (r < 1 || r > s || s > trace.size()) throw ConfigError("interval [r, s] out of range");
  double regret = 0.0;
  for (long t = r; t <= s; ++t) {
    const auto expert = log.loss(r, t);
    if (!expert) throw ConfigError("expert was not alive over the whole interval");
    regret += trace.rows[static_cast<std::size_t>(t - 1)].learner_loss - *expert;
  }
  return regret;
}

Vector best_fixed_quadratic(std::span<const LossFunction> losses, long r, long s) {
  if (r < 1 || r > s || s > static_cast<long>(losses.size())) {
    throw ConfigError("interval [r, s] out of range");
  }
  Vector mean = Vector::Zero(losses[static_cast<std::size_t>(r - 1)].dim());
  for (long t = r; t <= s; ++t) mean += losses[static_cast<std::size_t>(t - 1)].center();
  mean /= static_cast<double>(s - r + 1);
  return losses[static_cast<std::size_t>(r - 1)].domain().project(mean);
}

}  // namespace oco
