#include "oco/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include "oco/error.hpp"

namespace oco {

namespace {

using nlohmann::json;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

int line_at(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(offset), '\n'));
}

// Reads keys out of the config, reporting problems with the line they occur on.
class Reader {
 public:
  Reader(const json& j, const std::string& text, const std::string& origin)
      : j_(j), text_(text), origin_(origin) {}

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    const auto pos = text_.find("\"" + key + "\"");
    const int line = pos == std::string::npos ? 1 : line_at(text_, pos);
    throw ConfigError(origin_ + ":" + std::to_string(line) + ": " + msg);
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& require(const std::string& key) const {
    if (!j_.contains(key)) fail(key, "missing required field '" + key + "'");
    return j_.at(key);
  }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number()) fail(key, "field '" + key + "' must be a number");
    return v.get<double>();
  }

  double positive(const std::string& key, double fallback) const {
    const double v = number(key, fallback);
    if (!(v > 0.0)) fail(key, "field '" + key + "' must be > 0");
    return v;
  }

  long integer(const std::string& key, long fallback, long min) const {
    if (!has(key)) return fallback;
    return integer_of(key, j_.at(key), min);
  }

  long integer_of(const std::string& key, const json& v, long min) const {
    if (!v.is_number_integer()) fail(key, "field '" + key + "' must be an integer");
    const long x = v.get<long>();
    if (x < min) fail(key, "field '" + key + "' must be >= " + std::to_string(min));
    return x;
  }

  std::string string(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_string()) fail(key, "field '" + key + "' must be a string");
    return v.get<std::string>();
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) fail(key, "field '" + key + "' must be true or false");
    return v.get<bool>();
  }

 private:
  const json& j_;
  const std::string& text_;
  const std::string& origin_;
};

ExperimentKind parse_kind(const Reader& r, const std::string& s) {
  if (s == "dynamic-sc") return ExperimentKind::kDynamicSc;
  if (s == "dynamic-ec") return ExperimentKind::kDynamicEc;
  if (s == "dynamic-kernel") return ExperimentKind::kDynamicKernel;
  if (s == "penalized-krr") return ExperimentKind::kPenalizedKrr;
  if (s == "bound-report") return ExperimentKind::kBoundReport;
  r.fail("kind", "unknown experiment kind '" + s + "'");
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kDynamicSc: return "dynamic-sc";
    case ExperimentKind::kDynamicEc: return "dynamic-ec";
    case ExperimentKind::kDynamicKernel: return "dynamic-kernel";
    case ExperimentKind::kPenalizedKrr: return "penalized-krr";
    case ExperimentKind::kBoundReport: return "bound-report";
  }
  return "unknown";
}

std::optional<std::uint64_t> seed_from_env() {
  const char* s = std::getenv("OCO_SEED");
  if (!s || !*s) return std::nullopt;
  char* end = nullptr;
  const auto v = std::strtoull(s, &end, 10);
  if (*end != '\0') throw ConfigError("OCO_SEED must be a nonnegative integer");
  return v;
}

ExperimentConfig ExperimentConfig::parse(const std::string& text, const std::string& origin,
                                         std::optional<std::uint64_t> seed_override) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ":" + std::to_string(line_at(text, e.byte > 0 ? e.byte - 1 : 0)) +
                      ": invalid JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError(origin + ":1: config must be a JSON object");
  const Reader r(j, text, origin);

  ExperimentConfig c;
  const auto& kind = r.require("kind");
  if (!kind.is_string()) r.fail("kind", "field 'kind' must be a string");
  c.kind = parse_kind(r, kind.get<std::string>());
  c.horizon = r.integer_of("T", r.require("T"), 1);
  c.seed = static_cast<std::uint64_t>(r.integer_of("seed", r.require("seed"), 0));
  if (seed_override) {
    c.seed = *seed_override;
    j["seed"] = *seed_override;
  }

  c.dim = static_cast<int>(r.integer("d", 2, 1));
  c.curvature = r.positive("H", 1.0);
  c.radius = r.positive("radius", 1.0);
  c.center_radius = r.number("center_radius", -1.0);
  if (c.center_radius > c.radius) r.fail("center_radius", "center_radius exceeds radius");
  c.bandwidth = r.positive("sigma", 1.0);
  c.bound = r.positive("B", 1.0);
  c.ridge = r.positive("a", 1.0);
  c.lambda = r.positive("lambda", 1.0);
  if (r.has("zeta")) c.zeta = r.positive("zeta", 1.0);
  c.target_variation = r.number("V_T", 0.0);
  if (c.target_variation < 0.0) r.fail("V_T", "field 'V_T' must be >= 0");
  const auto drift = r.string("drift", "random-walk");
  if (drift == "random-walk") {
    c.drift = DriftKind::kRandomWalk;
  } else if (drift == "piecewise-constant") {
    c.drift = DriftKind::kPiecewiseConstant;
  } else {
    r.fail("drift", "drift must be 'random-walk' or 'piecewise-constant'");
  }
  c.switches = static_cast<int>(r.integer("switches", 0, 0));
  c.anchors = static_cast<int>(r.integer("anchors", 6, 1));
  c.label_noise = r.number("label_noise", 0.0);
  const auto pruning = r.string("pruning", "none");
  if (pruning == "none") {
    c.pruning = Pruning::kNone;
  } else if (pruning == "aflh") {
    c.pruning = Pruning::kAflh;
  } else {
    r.fail("pruning", "pruning must be 'none' or 'aflh'");
  }

  if (r.has("points")) {
    const auto& pts = j.at("points");
    if (!pts.is_array()) r.fail("points", "field 'points' must be an array of arrays");
    for (const auto& p : pts) {
      if (!p.is_array() || p.empty()) r.fail("points", "each point must be a nonempty array");
      Vector v(static_cast<Eigen::Index>(p.size()));
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (!p[i].is_number()) r.fail("points", "point coordinates must be numbers");
        v[static_cast<Eigen::Index>(i)] = p[i].get<double>();
      }
      if (!c.points.empty() && v.size() != c.points.front().size()) {
        r.fail("points", "all points must have the same dimension");
      }
      c.points.push_back(std::move(v));
    }
  }

  if (r.has("grid")) {
    const auto& g = j.at("grid");
    if (!g.is_object()) r.fail("grid", "field 'grid' must be an object");
    const Reader gr(g, text, origin);
    const auto& ts = gr.require("T");
    if (!ts.is_array() || ts.empty()) gr.fail("T", "grid.T must be a nonempty array");
    for (const auto& t : ts) c.grid_horizons.push_back(gr.integer_of("T", t, 2));
    c.variation_scale = gr.number("V_scale", 1.0);
    c.variation_exponent = gr.number("V_exponent", 0.5);
    c.repeats = static_cast<int>(gr.integer("repeats", 1, 1));
    c.synthetic_regret = gr.boolean("synthetic_regret", false);
  }

  if (r.has("output")) {
    const auto& o = j.at("output");
    if (!o.is_object()) r.fail("output", "field 'output' must be an object");
    const Reader orr(o, text, origin);
    c.trace_file = orr.string("trace", c.trace_file);
    c.metadata_file = orr.string("metadata", c.metadata_file);
    c.report_file = orr.string("report", c.report_file);
    c.summary_file = orr.string("summary", c.summary_file);
  }

  if (c.kind == ExperimentKind::kPenalizedKrr || c.kind == ExperimentKind::kBoundReport) {
    if (c.kind == ExperimentKind::kBoundReport && !c.points.empty() &&
        static_cast<long>(c.points.size()) != c.horizon) {
      r.fail("points", "number of points must equal T");
    }
  }

  c.raw = j;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  c.hash = buf;
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path,
                                        std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ":1: cannot read config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string(), seed_override);
}

// Running -------------------------------------------------------------------

namespace {

double center_radius(const ExperimentConfig& c) {
  return c.center_radius < 0.0 ? c.radius : c.center_radius;
}

// Certificate of the worst quadratic in the stream: center on the boundary
// of the center ball.
CurvatureCertificate quadratic_certificate(const ExperimentConfig& c) {
  Vector worst = Vector::Zero(c.dim);
  worst[0] = center_radius(c);
  return LossFunction::quadratic(worst, c.curvature, Ball{c.radius}).certify();
}

EnvironmentConfig environment_config(const ExperimentConfig& c) {
  EnvironmentConfig e;
  e.kind = c.kind == ExperimentKind::kDynamicKernel ? DriftKind::kKernelRegression : c.drift;
  e.horizon = c.horizon;
  e.dim = c.dim;
  e.target_variation = c.target_variation;
  e.seed = c.seed;
  e.curvature = c.curvature;
  e.domain_radius = c.radius;
  e.center_radius = c.center_radius;
  e.switches = c.switches;
  e.bandwidth = c.bandwidth;
  e.bound = c.bound;
  e.anchors = c.anchors;
  e.label_noise = c.label_noise;
  return e;
}

Flh::Factory factory_for(const ExperimentConfig& c) {
  const Ball ball{c.radius};
  const int dim = c.dim;
  switch (c.kind) {
    case ExperimentKind::kDynamicSc: {
      const double h = c.curvature;
      return [=](long) -> BaseLearner { return OgdLearner(Vector::Zero(dim), h, ball); };
    }
    case ExperimentKind::kDynamicEc: {
      const auto params = OnsLearner::default_params(quadratic_certificate(c));
      return [=](long) -> BaseLearner { return OnsLearner(Vector::Zero(dim), params, ball); };
    }
    case ExperimentKind::kDynamicKernel: {
      const double sigma = c.bandwidth, a = c.ridge, b = c.bound;
      return [=](long) -> BaseLearner { return KrrLearner(sigma, a, b); };
    }
    default:
      throw ConfigError("experiment kind has no FLH learner");
  }
}

std::vector<Vector> uniform_points(long n, int dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> cube(-1.0, 1.0);
  std::vector<Vector> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (long t = 0; t < n; ++t) {
    Vector x(dim);
    for (auto& v : x) v = cube(rng);
    pts.push_back(std::move(x));
  }
  return pts;
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch());
  return std::to_string(secs.count());
}

ExperimentResult run_penalized_krr(const ExperimentConfig& c) {
  std::mt19937_64 rng(c.seed);
  const auto pts = uniform_points(c.horizon, c.dim, rng);
  std::bernoulli_distribution coin(0.5);
  Vector labels(c.horizon);
  for (auto& y : labels) y = coin(rng) ? c.bound : -c.bound;

  KrrLearner learner(c.bandwidth, c.ridge, c.bound);
  ExperimentResult res;
  res.trace.rows.reserve(static_cast<std::size_t>(c.horizon));
  const Matrix gram = gram_matrix(pts, c.bandwidth);
  const Vector fitted = gram * krr_fit(gram, labels, c.ridge);
  for (long t = 0; t < c.horizon; ++t) {
    const double pred = learner.predict(pts[static_cast<std::size_t>(t)]);
    const double y = labels[t];
    res.trace.push((pred - y) * (pred - y), (fitted[t] - y) * (fitted[t] - y));
    res.trace.rows.back().prediction = pred;
    res.trace.rows.back().label = y;
    learner.update(pts[static_cast<std::size_t>(t)], y);
  }
  res.regret = penalized_regret(res.trace, gram, c.ridge);
  res.report = make_bound_report(gram, c.ridge, c.bound, c.lambda);
  res.metadata["penalized_regret"] = res.regret;
  return res;
}

ExperimentResult run_bound_report(const ExperimentConfig& c) {
  std::vector<Vector> pts = c.points;
  if (pts.empty()) {
    std::mt19937_64 rng(c.seed);
    pts = uniform_points(c.horizon, c.dim, rng);
  }
  ExperimentResult res;
  res.report = make_bound_report(gram_matrix(pts, c.bandwidth), c.ridge, c.bound, c.lambda);
  return res;
}

}  // namespace

double default_learning_rate(const ExperimentConfig& c) {
  if (c.zeta) return *c.zeta;
  if (c.kind == ExperimentKind::kDynamicKernel) return 1.0 / (8.0 * c.bound * c.bound);
  return quadratic_certificate(c).exp_concavity;
}

ExperimentResult run_experiment(const ExperimentConfig& c) {
  ExperimentResult res;
  switch (c.kind) {
    case ExperimentKind::kPenalizedKrr:
      res = run_penalized_krr(c);
      break;
    case ExperimentKind::kBoundReport:
      res = run_bound_report(c);
      break;
    default: {
      const auto env = generate_environment(environment_config(c));
      const double zeta = default_learning_rate(c);
      Flh flh(zeta, factory_for(c), c.pruning);
      res.trace = run_flh(flh, env);
      res.regret = dynamic_regret(res.trace);
      res.variation = env.comparators.variation();
      res.metadata["zeta"] = zeta;
      res.metadata["V_T"] = res.variation;
      res.metadata["dynamic_regret"] = res.regret;
      break;
    }
  }
  if (!std::isfinite(res.regret)) throw NumericalError("regret is not finite");
  const char* algo = "none";
  switch (c.kind) {
    case ExperimentKind::kDynamicSc: algo = "flh-ogd"; break;
    case ExperimentKind::kDynamicEc: algo = "flh-ons"; break;
    case ExperimentKind::kDynamicKernel: algo = "flh-krr"; break;
    case ExperimentKind::kPenalizedKrr: algo = "clipped-krr"; break;
    case ExperimentKind::kBoundReport: algo = "none"; break;
  }
  res.trace.algorithm = algo;
  res.trace.seed = c.seed;
  res.trace.config_hash = c.hash;
  res.metadata["algorithm"] = algo;
  res.metadata["kind"] = to_string(c.kind);
  res.metadata["seed"] = c.seed;
  res.metadata["config_hash"] = c.hash;
  res.metadata["T"] = c.horizon;
  res.metadata["pruning"] = c.pruning == Pruning::kAflh ? "aflh" : "none";
  res.metadata["config"] = c.raw;
  return res;
}

void write_outputs(const ExperimentConfig& c, const ExperimentResult& res,
                   const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream out(out_dir / c.trace_file);
    if (!out) throw ConfigError("cannot write " + (out_dir / c.trace_file).string());
    res.trace.write_csv(out);
  }
  {
    auto meta = res.metadata;
    meta["timestamp"] = timestamp();
    std::ofstream out(out_dir / c.metadata_file);
    out << meta.dump(2) << "\n";
  }
  if (res.report) {
    nlohmann::json j = *res.report;
    if (c.kind == ExperimentKind::kPenalizedKrr) j["penalized_regret"] = res.regret;
    std::ofstream out(out_dir / c.report_file);
    out << j.dump(2) << "\n";
  }
}

// Sweeps --------------------------------------------------------------------

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / sxx;
}

SweepSummary run_sweep(const ExperimentConfig& cfg, int threads) {
  if (cfg.grid_horizons.empty()) throw ConfigError("sweep config needs grid.T");
  const std::size_t n = cfg.grid_horizons.size();
  SweepSummary summary;
  summary.rows.resize(n);

  auto run_point = [&](std::size_t i) {
    SweepRow row;
    row.horizon = cfg.grid_horizons[i];
    row.variation =
        cfg.variation_scale * std::pow(static_cast<double>(row.horizon), cfg.variation_exponent);
    row.sqrt_tv = std::sqrt(static_cast<double>(row.horizon) * row.variation);
    if (cfg.synthetic_regret) {
      row.regret = row.sqrt_tv;
    } else {
      double total = 0.0;
      for (int k = 0; k < cfg.repeats; ++k) {
        ExperimentConfig point = cfg;
        point.horizon = row.horizon;
        point.target_variation = row.variation;
        point.seed = cfg.seed + static_cast<std::uint64_t>(k);
        total += run_experiment(point).regret;
      }
      row.regret = total / cfg.repeats;
    }
    row.ratio = row.regret / row.sqrt_tv;
    summary.rows[i] = row;
  };

  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) run_point(i);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    for (std::size_t w = 0; w < std::min(workers, n); ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            run_point(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::vector<double> xs, ys;
  for (const auto& r : summary.rows) {
    xs.push_back(r.sqrt_tv);
    ys.push_back(r.regret);
  }
  summary.slope = loglog_slope(xs, ys);
  return summary;
}

void write_sweep_csv(const SweepSummary& summary, std::ostream& os) {
  os << "T,V_T,regret,sqrt_TV,ratio\n";
  char buf[160];
  for (const auto& r : summary.rows) {
    std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g,%.17g,%.17g\n", r.horizon, r.variation,
                  r.regret, r.sqrt_tv, r.ratio);
    os << buf;
  }
}

}  // namespace oco
