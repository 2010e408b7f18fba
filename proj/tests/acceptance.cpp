// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oco/bench.hpp"
#include "oco/experiment.hpp"
#include "oco/flh.hpp"
#include "oco/kernel.hpp"
#include "oco/losses.hpp"
#include "oracles.hpp"

using namespace oco;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int threads() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

Vector uniform_in_ball(std::mt19937_64& rng, int dim, double radius) {
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> u;
  Vector v(dim);
  for (auto& e : v) e = nd(rng);
  return radius * std::pow(u(rng), 1.0 / dim) * v.normalized();
}

std::vector<Vector> cube_points(std::mt19937_64& rng, int n, int dim) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vector> pts;
  for (int i = 0; i < n; ++i) {
    Vector x(dim);
    for (auto& e : x) e = u(rng);
    pts.push_back(std::move(x));
  }
  return pts;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 1. OGD with step 1/(Ht) against the best fixed point in hindsight.
Outcome ogd_static_bound() {
  const int dim = 5;
  const long horizon = 10'000;
  const double h = 1.0, radius = 2.0;
  const double g = h * (radius + radius);  // |grad| <= H (|x| + |c|) = 4
  const double bound = g * g / (2 * h) * (1 + std::log(static_cast<double>(horizon)));
  double worst = -1e300;
  for (int s = 0; s < 20; ++s) {
    std::mt19937_64 rng(1000 + s);
    std::vector<LossFunction> losses;
    // half the streams have iid centers, half a slowly drifting one
    Vector c = uniform_in_ball(rng, dim, radius);
    for (long t = 0; t < horizon; ++t) {
      if (s % 2 == 0) {
        c = uniform_in_ball(rng, dim, radius);
      } else {
        c += uniform_in_ball(rng, dim, 0.05);
        if (c.norm() > radius) c *= radius / c.norm();
      }
      losses.push_back(LossFunction::quadratic(c, h, Ball{radius}));
    }
    OgdLearner ogd(Vector::Zero(dim), h, Ball{radius});
    RegretTrace trace;
    for (const auto& f : losses) {
      const Vector x = ogd.predict();
      trace.push(f.eval(x), 0.0);
      ogd.step(f.grad(x));
    }
    worst = std::max(worst, interval_regret(trace, losses, 1, horizon,
                                            best_fixed_quadratic(losses, 1, horizon)));
  }
  return {worst <= bound, fmt("worst static regret %.4f, bound %.4f", worst, bound)};
}

// 2. FLH meta-regret against each expert over dyadic intervals.
Outcome flh_envelope() {
  const long horizon = 1024;
  const double h = 1.0, radius = 1.0;
  const double zeta = h / std::pow(h * 2 * radius, 2);
  double needed = 0.0;
  for (int s = 0; s < 30; ++s) {
    EnvironmentConfig ec;
    ec.kind = s % 3 == 0 ? DriftKind::kPiecewiseConstant : DriftKind::kRandomWalk;
    ec.horizon = horizon;
    ec.dim = 2;
    ec.target_variation = std::array{0.5, 2.0, 8.0}[static_cast<std::size_t>(s % 3)];
    ec.seed = 2000 + static_cast<std::uint64_t>(s);
    const auto env = generate_environment(ec);
    Flh flh(zeta, [](long) -> BaseLearner { return OgdLearner(Vector::Zero(2), 1.0, Ball{1.0}); });
    ExpertLossLog log;
    const auto trace = run_flh(flh, env, &log);
    for (long r = 1; r <= 512; r *= 2) {
      for (long len = 1; len <= 512; len *= 2) {
        const double meta = meta_regret_vs_expert(trace, log, r, r + len - 1);
        const double unit = (1 / zeta) * (std::log(static_cast<double>(r)) +
                                           std::log(static_cast<double>(len)) + 1);
        needed = std::max(needed, meta / unit);
      }
    }
  }
  const bool pass = needed <= 8.0;
  return {pass, fmt("minimal envelope constant %.4f (%s)", needed,
                    needed <= 4.0 ? "within 4" : pass ? "exceeds 4, within 8" : "exceeds 8")};
}

SweepSummary sweep(const std::string& kind, int dim, const std::string& extra = "") {
  const auto cfg = ExperimentConfig::parse(
      fmt(R"({"kind": "%s", "T": 1000, "seed": 7, "d": %d, %s
             "grid": {"T": [1000, 4000, 16000], "V_scale": 1.0, "V_exponent": 0.5}})",
          kind.c_str(), dim, extra.c_str()),
      "acceptance");
  return run_sweep(cfg, threads());
}

Outcome scaling(const SweepSummary& s, double max_slope) {
  std::string detail = fmt("slope %.4f;", s.slope);
  bool flat = true;
  double prev = 0.0;
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    const auto& r = s.rows[i];
    const double ratio = r.regret / (r.sqrt_tv * (1 + std::log(static_cast<double>(r.horizon))));
    detail += fmt(" T=%ld regret=%.3f ratio=%.5f", r.horizon, r.regret, ratio);
    if (i > 0 && ratio > 1.10 * prev) flat = false;
    prev = ratio;
  }
  return {s.slope <= max_slope && flat, detail};
}

// 4. Nearly static comparator: logarithmic regret.
Outcome small_variation() {
  const long horizon = 4000;
  const double h = 1.0, radius = 1.0, g = 2.0;
  const double zeta = h / (g * g);
  const double c = 3 * (g * g / (2 * h) + 4 / zeta);
  const double bound = c * std::log(static_cast<double>(horizon));
  double worst = -1e300;
  for (int s = 0; s < 5; ++s) {
    const auto cfg = ExperimentConfig::parse(
        fmt(R"({"kind": "dynamic-sc", "T": %ld, "seed": %d, "d": 2, "H": %g, "radius": %g,
               "V_T": %.17g})",
            horizon, 3000 + s, h, radius, 1.0 / static_cast<double>(horizon)),
        "acceptance");
    worst = std::max(worst, run_experiment(cfg).regret);
  }
  return {worst <= bound, fmt("worst regret %.4f, c ln T = %.4f (hard limit %.4f)", worst, bound,
                              2 * bound)};
}

// 6. Clipped KRR against the log-determinant bound.
Outcome krr_penalized() {
  double worst_gap = -1e300, worst_ratio = 0.0;
  for (int s = 0; s < 200; ++s) {
    const auto cfg = ExperimentConfig::parse(
        fmt(R"({"kind": "penalized-krr", "T": 200, "seed": %d, "d": 2, "a": 1.0, "sigma": 1.0,
               "B": 1.0})",
            4000 + s),
        "acceptance");
    const auto res = run_experiment(cfg);
    worst_gap = std::max(worst_gap, res.regret - res.report->upper);
    worst_ratio = std::max(worst_ratio, res.regret / res.report->upper);
  }
  return {worst_gap <= 0.0, fmt("worst regret/bound %.4f over 200 label sequences", worst_ratio)};
}

// 7. FLH over clipped KRR on a drifting RKHS target, fixed per-step drift.
Outcome kernel_dynamic() {
  const auto cfg = ExperimentConfig::parse(
      R"({"kind": "dynamic-kernel", "T": 500, "seed": 5000, "d": 2, "a": 1.0, "sigma": 1.0,
          "B": 1.0, "pruning": "aflh",
          "grid": {"T": [500, 1000, 2000], "V_scale": 0.002, "V_exponent": 1.0, "repeats": 20}})",
      "acceptance");
  const auto s = run_sweep(cfg, threads());
  bool pass = true;
  std::string detail;
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    detail += fmt("T=%ld regret=%.4f ", s.rows[i].horizon, s.rows[i].regret);
    if (i > 0) {
      const double growth = s.rows[i].regret / s.rows[i - 1].regret;
      detail += fmt("(x%.3f) ", growth);
      pass = pass && growth <= 1.6;
    }
  }
  return {pass, detail + "per-step drift 0.002"};
}

// 8. Closed-form KRR against independent minimization.
Outcome map_oracle() {
  std::mt19937_64 rng(6000);
  std::uniform_int_distribution<int> len(2, 30);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double fit_err = 0.0, opt_err = 0.0;
  for (int s = 0; s < 20; ++s) {
    const int n = len(rng);
    const auto pts = oracle::separated_points(rng, n, 2, 4.0, 1.0);
    const Matrix k = oracle::gaussian_gram(pts, 1.0);
    Vector y(n);
    for (auto& e : y) e = u(rng);
    const double a = 0.5 + 0.1 * s;
    const Vector alpha = krr_fit(k, y, a);
    fit_err = std::max(fit_err,
                       (alpha - oracle::minimize_ridge_objective(k, y, a)).cwiseAbs().maxCoeff());
    const Matrix reg = k + a * Matrix::Identity(n, n);
    const double closed = a * y.dot(reg.fullPivLu().solve(y));
    const double opt = offline_penalized_optimum(k, y, a);
    opt_err = std::max({opt_err, std::abs(opt - closed),
                        std::abs(opt - oracle::ridge_objective(k, y, a, alpha))});
  }
  return {fit_err <= 1e-6 && opt_err <= 1e-8,
          fmt("max coefficient error %.3g, max optimum error %.3g", fit_err, opt_err)};
}

// 9. Density identity and lower <= upper.
Outcome density_and_bounds() {
  std::mt19937_64 rng(7000);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double identity = 0.0;
  for (int s = 0; s < 20; ++s) {
    const int n = 2 + s;
    const Matrix k = gram_matrix(cube_points(rng, n, 2), 1.0);
    Vector y1(n), y2(n);
    for (auto& e : y1) e = u(rng);
    for (auto& e : y2) e = u(rng);
    identity = std::max(identity, map_density_identity_check(k, 0.2 + 0.5 * s, y1, y2));
  }
  int violations = 0;
  double tightest = 1e300;
  for (const double a : {0.1, 1.0, 10.0}) {
    for (long t = 3; t <= 50; ++t) {
      const Matrix k = gram_matrix(cube_points(rng, static_cast<int>(t), 2), 1.0);
      const double b = lb_noise_level(1.0, a, static_cast<double>(t));
      const double gap = penalized_regret_upper(k, a, b) - penalized_regret_lower(k, a, t);
      tightest = std::min(tightest, gap);
      if (gap < 0.0) ++violations;
    }
  }
  return {identity <= 1e-8 && violations == 0,
          fmt("max identity residual %.3g, %d bound violations, smallest gap %.4f", identity,
              violations, tightest)};
}

// 10. Partition invariants.
Outcome partition_properties() {
  std::mt19937_64 rng(8000);
  std::uniform_int_distribution<int> len(1, 300);
  std::uniform_real_distribution<double> unit;
  const std::array<double, 5> targets{0.05, 0.3, 1.0, 3.0, 10.0};
  long checked = 0, failures = 0;
  for (int s = 0; s < 1000; ++s) {
    const int n = len(rng);
    const int dim = 1 + s % 3;
    const double scale = std::pow(10.0, -2.0 + 2.5 * unit(rng));
    std::vector<Vector> path{uniform_in_ball(rng, dim, 1.0)};
    for (int t = 1; t < n; ++t) {
      // occasional large jumps mixed with small moves
      const double step = unit(rng) < 0.1 ? 10 * scale : scale * unit(rng);
      path.push_back(path.back() + uniform_in_ball(rng, dim, step));
    }
    const auto z = ComparatorSequence::euclidean(std::move(path));
    const double total = path_variation(z);
    for (const double v : targets) {
      const auto bins = partition_by_variation(z, v);
      bool ok = bins.front().start == 1 && bins.back().end == z.size();
      for (std::size_t i = 0; i < bins.size(); ++i) {
        ok = ok && segment_variation(z, bins[i].start, bins[i].end) < v;
        if (i > 0) ok = ok && bins[i].start == bins[i - 1].end + 1;
      }
      ok = ok && static_cast<double>(bins.size() - 1) * v <= total * (1 + 1e-12);
      ++checked;
      if (!ok) ++failures;
    }
  }
  return {failures == 0, fmt("%ld partitions checked, %ld violations", checked, failures)};
}

// 11. Incremental KRR predictions against batch refits.
Outcome incremental_krr() {
  std::mt19937_64 rng(9000);
  std::uniform_int_distribution<int> len(1, 100);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int s = 0; s < 50; ++s) {
    const int n = len(rng);
    const auto pts = cube_points(rng, n, 1 + s % 3);
    KrrLearner krr(1.0, 1.0, 1.0);
    std::vector<Eigen::VectorXd> seen;
    std::vector<double> labels;
    for (const auto& x : pts) {
      double batch = 0.0;
      if (!seen.empty()) {
        const auto m = static_cast<Eigen::Index>(seen.size());
        const Matrix k = oracle::gaussian_gram(seen, 1.0) + Matrix::Identity(m, m);
        Vector y(m), kx(m);
        for (Eigen::Index i = 0; i < m; ++i) {
          y[i] = labels[static_cast<std::size_t>(i)];
          kx[i] = std::exp(-(seen[static_cast<std::size_t>(i)] - x).squaredNorm() / 2.0);
        }
        batch = std::clamp(kx.dot(k.ldlt().solve(y)), -1.0, 1.0);
      }
      worst = std::max(worst, std::abs(krr.predict(x) - batch));
      const double y = u(rng);
      krr.update(x, y);
      seen.push_back(x);
      labels.push_back(y);
    }
  }
  return {worst <= 1e-8, fmt("max discrepancy %.3g over 50 streams", worst)};
}

// 12. Rerunning the smallest scaling cell reproduces its trace byte for byte.
Outcome determinism() {
  const auto cfg = ExperimentConfig::parse(
      fmt(R"({"kind": "dynamic-sc", "T": 1000, "seed": 7, "d": 2, "V_T": %.17g})", std::sqrt(1000.0)),
      "acceptance");
  const auto base = std::filesystem::temp_directory_path() / "oco_acceptance_determinism";
  std::filesystem::remove_all(base);
  write_outputs(cfg, run_experiment(cfg), base / "a");
  write_outputs(cfg, run_experiment(cfg), base / "b");
  const auto a = slurp(base / "a" / cfg.trace_file);
  const auto b = slurp(base / "b" / cfg.trace_file);
  return {!a.empty() && a == b, fmt("%zu bytes, %s", a.size(), a == b ? "identical" : "differ")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"ogd static regret bound", ogd_static_bound},
      {"flh meta-regret envelope", flh_envelope},
      {"flh+ogd dynamic regret scaling", [] { return scaling(sweep("dynamic-sc", 2), 1.15); }},
      {"flh+ogd small variation", small_variation},
      {"flh+ons dynamic regret scaling",
       [] {
         auto a = scaling(sweep("dynamic-ec", 2), 1.15);
         auto b = scaling(sweep("dynamic-ec", 5), 1.15);
         return Outcome{a.pass && b.pass, "d=2: " + a.detail + " | d=5: " + b.detail};
       }},
      {"clipped krr penalized regret", krr_penalized},
      {"flh+krr dynamic regret growth", kernel_dynamic},
      {"krr closed form vs minimizer", map_oracle},
      {"density identity and bound order", density_and_bounds},
      {"variation partition", partition_properties},
      {"incremental vs batch krr", incremental_krr},
      {"deterministic traces", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %2zu %-34s %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
