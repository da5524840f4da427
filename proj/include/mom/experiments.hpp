#pragma once

// Experiment runners. Every runner takes an ExperimentSpec read from a flat
// key = value file and returns per-replication records plus a summary that
// can be recomputed from those records alone.
//
// Record columns: `metric` is the runner's headline number and `reference`
// the threshold it is compared against (NaN when there is none):
//
//   corruption_curve, block_compare  metric = test misclassification rate
//   timing                           metric = median per-iteration ms
//   prop1                            metric = |t - t*| / |t*|, reference 1/4
//   prop2                            metric = sqrt(E X^2) |t - t*|, reference sqrt(x/N)/5
//   complexity_check                 metric = fixed point (or the closed-form bound),
//                                    reference = bound + 3 std errors
//   outlier_detect                   metric = largest score of a planted outlier, reference 1

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mom/complexity.hpp"
#include "mom/config.hpp"
#include "mom/datagen.hpp"
#include "mom/diagnostics.hpp"
#include "mom/errors.hpp"
#include "mom/losses.hpp"
#include "mom/model_select.hpp"
#include "mom/parallel.hpp"
#include "mom/solver.hpp"

namespace mom {

enum class ExperimentKind { CorruptionCurve, BlockStrategyCompare, Timing, Prop1, Prop2, ComplexityCheck, OutlierDetect };

inline std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::CorruptionCurve: return "corruption_curve";
    case ExperimentKind::BlockStrategyCompare: return "block_compare";
    case ExperimentKind::Timing: return "timing";
    case ExperimentKind::Prop1: return "prop1";
    case ExperimentKind::Prop2: return "prop2";
    case ExperimentKind::ComplexityCheck: return "complexity_check";
    case ExperimentKind::OutlierDetect: return "outlier_detect";
  }
  return "unknown";
}

inline ExperimentKind parse_experiment_kind(const std::string& name) {
  for (auto k : {ExperimentKind::CorruptionCurve, ExperimentKind::BlockStrategyCompare, ExperimentKind::Timing,
                 ExperimentKind::Prop1, ExperimentKind::Prop2, ExperimentKind::ComplexityCheck,
                 ExperimentKind::OutlierDetect}) {
    if (to_string(k) == name) return k;
  }
  throw ArgumentError("unknown experiment '" + name + "'");
}

// Reads <prefix>k, <prefix>blocks, <prefix>eps, <prefix>max_iter,
// <prefix>step, <prefix>step_constant, <prefix>step_denominator,
// <prefix>criterion and <prefix>seed on top of `base`.
inline SolverConfig read_solver_config(const KeyValueConfig& c, const std::string& prefix, SolverConfig base = {}) {
  base.k = c.get_size(prefix + "k", base.k);
  base.eps = c.get_double(prefix + "eps", base.eps);
  base.max_iter = c.get_size(prefix + "max_iter", base.max_iter);
  base.step_constant = c.get_double(prefix + "step_constant", base.step_constant);
  base.seed = c.get_u64(prefix + "seed", base.seed);
  if (c.has(prefix + "blocks")) {
    const auto& v = c.get(prefix + "blocks");
    if (v == "fixed") {
      base.block_strategy = BlockStrategy::FixedAtStart;
    } else if (v == "resample") {
      base.block_strategy = BlockStrategy::ResampleEachStep;
    } else {
      throw ArgumentError(prefix + "blocks must be 'fixed' or 'resample', got '" + v + "'");
    }
  }
  if (c.has(prefix + "step")) {
    const auto& v = c.get(prefix + "step");
    if (v == "median_block") {
      base.step_rule = StepRule::MedianBlockOpNorm;
    } else if (v == "full_data") {
      base.step_rule = StepRule::FullDataOpNorm;
    } else if (v == "constant") {
      base.step_rule = StepRule::Constant;
    } else {
      throw ArgumentError(prefix + "step must be 'median_block', 'full_data' or 'constant', got '" + v + "'");
    }
  }
  if (c.has(prefix + "step_denominator")) {
    const auto& v = c.get(prefix + "step_denominator");
    if (v == "block") {
      base.step_denominator = StepDenominator::BlockSize;
    } else if (v == "total") {
      base.step_denominator = StepDenominator::TotalN;
    } else {
      throw ArgumentError(prefix + "step_denominator must be 'block' or 'total', got '" + v + "'");
    }
  }
  if (c.has(prefix + "criterion")) {
    const auto& v = c.get(prefix + "criterion");
    if (v == "incremental") {
      base.median_criterion = MedianCriterion::Incremental;
    } else if (v == "plain") {
      base.median_criterion = MedianCriterion::PlainRisk;
    } else {
      throw ArgumentError(prefix + "criterion must be 'incremental' or 'plain', got '" + v + "'");
    }
  }
  return base;
}

inline LossSpec read_loss(const KeyValueConfig& c, const std::string& fallback) {
  return parse_loss(c.get_or("loss", fallback), c.get_double("loss.delta", 1.0), c.get_double("loss.tau", 0.5));
}

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::CorruptionCurve;
  std::string label;  // output file prefix
  std::size_t replications = 1;
  std::uint64_t base_seed = 0;
  std::size_t jobs = 1;
  std::string output_dir;  // empty: nothing is written
  LossSpec loss = LossSpec::logistic();
  SolverConfig solver;  // minmax MOM fits
  SolverConfig erm;     // ERM baseline fits
  std::vector<std::size_t> cv_grid;  // nonempty: K chosen by robust CV per replication
  std::size_t cv_folds = 5;
  KeyValueConfig params;  // generator and runner parameters, read by each runner

  static ExperimentSpec from_config(const KeyValueConfig& c) {
    ExperimentSpec s;
    s.kind = parse_experiment_kind(c.get("name"));
    s.label = c.get_or("label", to_string(s.kind));
    s.replications = c.get_size("replications", 1);
    if (s.replications == 0) throw ArgumentError("replications must be at least 1");
    s.base_seed = c.get_u64("seed", 0);
    s.jobs = c.get_size("jobs", 1);
    s.output_dir = c.get_or("output_dir", "");
    const bool regression = s.kind == ExperimentKind::Prop1 || s.kind == ExperimentKind::Prop2;
    s.loss = read_loss(c, regression ? "l1" : "logistic");
    s.solver = read_solver_config(c, "solver.");
    s.erm = read_solver_config(c, "erm.", s.solver);
    s.erm.k = 1;
    const auto policy = c.get_or("k_policy", "fixed");
    if (policy == "cv") {
      s.cv_grid = c.get_sizes("cv.grid");
      if (s.cv_grid.empty()) throw ArgumentError("k_policy = cv needs cv.grid");
      s.cv_folds = c.get_size("cv.folds", 5);
    } else if (policy != "fixed") {
      throw ArgumentError("k_policy must be 'fixed' or 'cv', got '" + policy + "'");
    }
    s.params = c;
    return s;
  }
};

struct ExperimentRecord {
  std::size_t replication = 0;
  std::string setting;
  std::uint64_t seed = 0;
  std::string estimator;
  std::size_t k = 0;
  double error_l2 = std::numeric_limits<double>::quiet_NaN();
  double test_error = std::numeric_limits<double>::quiet_NaN();
  double runtime_ms = std::numeric_limits<double>::quiet_NaN();
  double metric = std::numeric_limits<double>::quiet_NaN();
  double reference = std::numeric_limits<double>::quiet_NaN();
  std::size_t iterations = 0;
  bool converged = false;
  std::string status = "ok";

  bool ok() const { return status == "ok"; }
};

struct SummaryRow {
  std::string setting;
  std::string estimator;
  std::size_t count = 0;
  std::size_t failures = 0;
  double metric_median = 0.0;
  double metric_q1 = 0.0;
  double metric_q3 = 0.0;
  double exceed_freq = std::numeric_limits<double>::quiet_NaN();  // share with metric >= reference
  double error_l2_median = 0.0;
  double test_error_median = 0.0;
  double runtime_ms_median = 0.0;
};

struct ExperimentResult {
  std::string label;
  ExperimentKind kind = ExperimentKind::CorruptionCurve;
  std::vector<ExperimentRecord> records;
  std::vector<SummaryRow> summary;

  // Summary row for (setting, estimator); throws if absent.
  const SummaryRow& row(const std::string& setting, const std::string& estimator) const {
    for (const auto& r : summary) {
      if (r.setting == setting && r.estimator == estimator) return r;
    }
    throw ArgumentError("no summary row for " + setting + " / " + estimator);
  }
};

namespace detail {

inline double nan() { return std::numeric_limits<double>::quiet_NaN(); }

// Linear-interpolation quantile of the finite entries; NaN if there are none.
inline double quantile(std::vector<double> v, double q) {
  v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return !std::isfinite(x); }), v.end());
  if (v.empty()) return nan();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double median(const std::vector<double>& v) { return quantile(v, 0.5); }

inline double misclassification(const Dataset& test, const Vector& t) {
  const Vector m = test.x * t;
  std::size_t wrong = 0;
  for (Eigen::Index i = 0; i < m.size(); ++i) wrong += sign_of(m[i]) != test.y[i] ? 1 : 0;
  return static_cast<double>(wrong) / static_cast<double>(m.size());
}

inline Vector scaled_ones(std::size_t d, double norm) {
  return Vector::Constant(static_cast<Eigen::Index>(d), norm / std::sqrt(static_cast<double>(d)));
}

inline std::string setting_name(const std::string& key, double v) { return key + "=" + format_double(v); }

// Runs `fn(rep, seed)` for every replication, possibly in parallel, and
// concatenates the records in replication order.
template <class Fn>
std::vector<ExperimentRecord> replicate(const ExperimentSpec& spec, std::size_t jobs, Fn&& fn) {
  std::vector<std::vector<ExperimentRecord>> slots(spec.replications);
  parallel_for(spec.replications, jobs, [&](std::size_t rep) {
    const std::uint64_t seed = derive_seed(spec.base_seed, "replication", rep);
    slots[rep] = fn(rep, seed);
    for (auto& r : slots[rep]) {
      r.replication = rep;
      r.seed = seed;
    }
  });
  std::vector<ExperimentRecord> out;
  for (auto& s : slots) out.insert(out.end(), s.begin(), s.end());
  return out;
}

template <class Fit>
ExperimentRecord timed_fit(const std::string& setting, const std::string& estimator, std::size_t k, Fit&& fit) {
  ExperimentRecord rec;
  rec.setting = setting;
  rec.estimator = estimator;
  rec.k = k;
  const auto start = std::chrono::steady_clock::now();
  try {
    const FitResult res = fit();
    rec.iterations = res.iterations;
    rec.converged = res.converged;
  } catch (const Error& e) {
    rec.status = std::string("failed: ") + e.what();
  }
  rec.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

inline std::size_t choose_k(const ExperimentSpec& spec, const Dataset& data, std::uint64_t seed) {
  if (spec.cv_grid.empty()) return spec.solver.k;
  SolverConfig cfg = spec.solver;
  cfg.seed = derive_seed(seed, "cv");
  return robust_cv_select_k(data, spec.loss, spec.cv_grid, spec.cv_folds, cfg);
}

// Fits ERM and MOM on `train` and scores them against t* and `test`.
inline std::vector<ExperimentRecord> fit_pair(const ExperimentSpec& spec, const std::string& setting,
                                              const Dataset& train, const Dataset* test, const Vector& t_star,
                                              std::uint64_t seed) {
  std::vector<ExperimentRecord> out;
  const auto score = [&](ExperimentRecord& rec, const Vector& t) {
    rec.error_l2 = (t - t_star).norm();
    if (test) rec.test_error = misclassification(*test, t);
    rec.metric = test ? rec.test_error : rec.error_l2 / t_star.norm();
  };
  Vector t;
  SolverConfig erm = spec.erm;
  erm.seed = derive_seed(seed, "fit");
  auto rec = timed_fit(setting, "erm", 1, [&] {
    auto r = erm_fit(train, spec.loss, erm);
    t = r.t_hat;
    return r;
  });
  if (rec.ok()) score(rec, t);
  out.push_back(rec);

  SolverConfig mm = spec.solver;
  mm.seed = erm.seed;
  std::size_t k = mm.k;
  rec = timed_fit(setting, "mom", k, [&] {
    k = choose_k(spec, train, seed);
    mm.k = k;
    auto r = mom_fit(train, spec.loss, mm);
    t = r.t_hat;
    return r;
  });
  rec.k = k;
  if (rec.ok()) score(rec, t);
  out.push_back(rec);
  return out;
}

}  // namespace detail

// Groups records by (setting, estimator) in order of first appearance.
inline std::vector<SummaryRow> summarize(const std::vector<ExperimentRecord>& records) {
  std::vector<std::pair<std::string, std::string>> keys;
  std::map<std::pair<std::string, std::string>, std::vector<const ExperimentRecord*>> groups;
  for (const auto& r : records) {
    const auto key = std::make_pair(r.setting, r.estimator);
    if (!groups.count(key)) keys.push_back(key);
    groups[key].push_back(&r);
  }
  std::vector<SummaryRow> out;
  for (const auto& key : keys) {
    SummaryRow row;
    row.setting = key.first;
    row.estimator = key.second;
    std::vector<double> metric, err, test, runtime;
    std::size_t with_ref = 0, exceed = 0;
    for (const auto* r : groups[key]) {
      ++row.count;
      if (!r->ok()) {
        ++row.failures;
        continue;
      }
      metric.push_back(r->metric);
      err.push_back(r->error_l2);
      test.push_back(r->test_error);
      runtime.push_back(r->runtime_ms);
      if (std::isfinite(r->reference) && std::isfinite(r->metric)) {
        ++with_ref;
        exceed += r->metric >= r->reference ? 1 : 0;
      }
    }
    row.metric_median = detail::median(metric);
    row.metric_q1 = detail::quantile(metric, 0.25);
    row.metric_q3 = detail::quantile(metric, 0.75);
    if (with_ref > 0) row.exceed_freq = static_cast<double>(exceed) / static_cast<double>(with_ref);
    row.error_l2_median = detail::median(err);
    row.test_error_median = detail::median(test);
    row.runtime_ms_median = detail::median(runtime);
    out.push_back(row);
  }
  return out;
}

// Figure 1 analog: logistic Student data with a growing number of outliers.
inline ExperimentResult run_corruption_curve(const ExperimentSpec& spec) {
  const auto& p = spec.params;
  const std::size_t n = p.get_size("data.n", 1000);
  const std::size_t d = p.get_size("data.d", 50);
  const double noise_sd = p.get_double("data.noise_sd", 1.0);
  const std::size_t test_n = p.get_size("data.test_n", 10000);
  const auto levels = p.get_sizes("data.levels", {0, 1, 50});
  const auto scale = p.get_or("data.outlier_scale", "sd") == "variance" ? OutlierScale::Variance5 : OutlierScale::StdDev5;
  const Vector t_star = detail::scaled_ones(d, p.get_double("data.t_star_norm", std::sqrt(static_cast<double>(d))));
  for (auto l : levels) {
    if (l > n) throw ArgumentError("data.levels: " + std::to_string(l) + " outliers exceed data.n");
  }

  ExperimentResult res{spec.label, spec.kind, {}, {}};
  res.records = detail::replicate(spec, spec.jobs, [&](std::size_t, std::uint64_t seed) {
    const auto clean = gen_logistic_student(n, d, t_star, noise_sd, derive_seed(seed, "train"));
    const auto test = gen_logistic_student(test_n, d, t_star, noise_sd, derive_seed(seed, "test"));
    std::vector<ExperimentRecord> out;
    for (auto level : levels) {
      const auto data = corrupt_figure1(clean, level, t_star, derive_seed(seed, "corrupt"), scale);
      auto recs = detail::fit_pair(spec, "n_out=" + std::to_string(level), data, &test, t_star, seed);
      out.insert(out.end(), recs.begin(), recs.end());
    }
    return out;
  });
  res.summary = summarize(res.records);
  return res;
}

// Fixed blocks against blocks redrawn at every step, on clean data.
inline ExperimentResult run_block_strategy_compare(const ExperimentSpec& spec) {
  const auto& p = spec.params;
  const std::size_t n = p.get_size("data.n", 1000);
  const std::size_t d = p.get_size("data.d", 100);
  const double noise_sd = p.get_double("data.noise_sd", 1.0);
  const std::size_t test_n = p.get_size("data.test_n", 10000);
  const Vector t_star = detail::scaled_ones(d, p.get_double("data.t_star_norm", std::sqrt(static_cast<double>(d))));

  ExperimentResult res{spec.label, spec.kind, {}, {}};
  res.records = detail::replicate(spec, spec.jobs, [&](std::size_t, std::uint64_t seed) {
    const auto data = gen_logistic_student(n, d, t_star, noise_sd, derive_seed(seed, "train"));
    const auto test = gen_logistic_student(test_n, d, t_star, noise_sd, derive_seed(seed, "test"));
    std::vector<ExperimentRecord> out;
    for (auto strategy : {BlockStrategy::FixedAtStart, BlockStrategy::ResampleEachStep}) {
      SolverConfig cfg = spec.solver;
      cfg.block_strategy = strategy;
      cfg.seed = derive_seed(seed, "fit");
      Vector t;
      auto rec = detail::timed_fit("clean", strategy == BlockStrategy::FixedAtStart ? "mom_fixed" : "mom_resample",
                                   cfg.k, [&] {
                                     auto r = mom_fit(data, spec.loss, cfg);
                                     t = r.t_hat;
                                     return r;
                                   });
      if (rec.ok()) {
        rec.error_l2 = (t - t_star).norm();
        rec.test_error = detail::misclassification(test, t);
        rec.metric = rec.test_error;
      }
      out.push_back(rec);
    }
    return out;
  });
  res.summary = summarize(res.records);
  return res;
}

// Per-iteration wall clock of ERM and of MOM for each K in timing.k_grid,
// at a matched number of iterations. Always runs serially.
inline ExperimentResult run_timing(const ExperimentSpec& spec) {
  const auto& p = spec.params;
  const std::size_t n = p.get_size("data.n", 10000);
  const std::size_t d = p.get_size("data.d", 100);
  const double noise_sd = p.get_double("data.noise_sd", 1.0);
  const auto k_grid = p.get_sizes("timing.k_grid", {1, 10, 50, 100});
  const std::size_t iters = p.get_size("timing.iterations", 50);
  const Vector t_star = detail::scaled_ones(d, p.get_double("data.t_star_norm", std::sqrt(static_cast<double>(d))));

  const auto per_iter = [&](const std::string& setting, const std::string& est, std::size_t k, const Dataset& data,
                            SolverConfig cfg, bool erm) {
    cfg.k = k;
    cfg.max_iter = iters;
    cfg.eps = std::numeric_limits<double>::min();
    cfg.record_timing = true;
    ExperimentRecord rec;
    rec.setting = setting;
    rec.estimator = est;
    rec.k = k;
    try {
      const auto r = erm ? erm_fit(data, spec.loss, cfg) : mom_fit(data, spec.loss, cfg);
      rec.iterations = r.iterations;
      rec.converged = r.converged;
      rec.runtime_ms = detail::median(r.iteration_ms);
      rec.metric = rec.runtime_ms;
      rec.error_l2 = (r.t_hat - t_star).norm();
    } catch (const Error& e) {
      rec.status = std::string("failed: ") + e.what();
    }
    return rec;
  };

  ExperimentResult res{spec.label, spec.kind, {}, {}};
  res.records = detail::replicate(spec, 1, [&](std::size_t, std::uint64_t seed) {
    const auto data = gen_logistic_student(n, d, t_star, noise_sd, derive_seed(seed, "train"));
    SolverConfig cfg = spec.solver;
    cfg.seed = derive_seed(seed, "fit");
    std::vector<ExperimentRecord> out;
    out.push_back(per_iter("erm", "erm", 1, data, cfg, true));
    for (auto k : k_grid) out.push_back(per_iter("K=" + std::to_string(k), "mom", k, data, cfg, false));
    return out;
  });
  res.summary = summarize(res.records);
  return res;
}

// Single contaminated design row against L1 ERM and MOM.
inline ExperimentResult run_prop1(const ExperimentSpec& spec) {
  const auto& p = spec.params;
  const std::size_t n = p.get_size("data.n", 200);
  const std::size_t d = p.get_size("data.d", 10);
  const double v_scale = p.get_double("data.v_scale", 10.0);
  const Vector t_star = detail::scaled_ones(d, p.get_double("data.t_star_norm", std::sqrt(static_cast<double>(d))));
  ExperimentSpec local = spec;
  if (!p.has("solver.k")) local.solver.k = 2 * ((d + 1) / 2) + 1;

  ExperimentResult res{spec.label, spec.kind, {}, {}};
  res.records = detail::replicate(local, spec.jobs, [&](std::size_t, std::uint64_t seed) {
    const auto data = gen_prop1(n, d, t_star, v_scale, derive_seed(seed, "data"));
    auto recs = detail::fit_pair(local, detail::setting_name("v_scale", v_scale), data, nullptr, t_star, seed);
    for (auto& r : recs) r.reference = 0.25;
    return recs;
  });
  res.summary = summarize(res.records);
  return res;
}

// Heavy-tailed one-dimensional design: exact L1 ERM against MOM.
inline ExperimentResult run_prop2(const ExperimentSpec& spec) {
  const auto& p = spec.params;
  const std::size_t n = p.get_size("data.n", 8000);
  const double x = p.get_double("data.x", 10.0);
  const double t_star = p.get_double("data.t_star", 0.0);
  const bool relax = p.get_bool("data.relax", false);
  const auto c = prop2_constants(n, x);
  const double root_ex2 = std::sqrt(1.0 + 2.0 * c.big_r * c.delta + c.big_r * c.big_r * c.delta);
  const double threshold = std::sqrt(x / static_cast<double>(n)) / 5.0;
  SolverConfig mm = spec.solver;
  if (!p.has("solver.k")) mm.k = static_cast<std::size_t>(std::lround(x));
  const std::string setting = detail::setting_name("x", x);

  ExperimentResult res{spec.label, spec.kind, {}, {}};
  res.records = detail::replicate(spec, spec.jobs, [&](std::size_t, std::uint64_t seed) {
    const auto data = gen_prop2(n, x, t_star, derive_seed(seed, "data"), relax);
    std::vector<ExperimentRecord> out;
    const auto finish = [&](ExperimentRecord& rec, double t) {
      rec.error_l2 = std::abs(t - t_star);
      rec.metric = root_ex2 * rec.error_l2;
      rec.reference = threshold;
    };

    ExperimentRecord erm;
    erm.setting = setting;
    erm.estimator = "erm_exact";
    erm.k = 1;
    const auto start = std::chrono::steady_clock::now();
    try {
      const double t = l1_erm_1d(data);
      erm.converged = true;
      finish(erm, t);
    } catch (const Error& e) {
      erm.status = std::string("failed: ") + e.what();
    }
    erm.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    out.push_back(erm);

    SolverConfig cfg = mm;
    cfg.seed = derive_seed(seed, "fit");
    double t = 0.0;
    auto rec = detail::timed_fit(setting, "mom", cfg.k, [&] {
      auto r = mom_fit(data, spec.loss, cfg);
      t = r.t_hat[0];
      return r;
    });
    if (rec.ok()) finish(rec, t);
    out.push_back(rec);
    return out;
  });
  res.summary = summarize(res.records);
  return res;
}

// Monte Carlo fixed point against the closed-form bound on Gaussian designs
// for every (d, n, rank) in complexity.d x complexity.n x complexity.rank
// (rank 0 means full rank; ranks above d are skipped).
inline ExperimentResult run_complexity_check(const ExperimentSpec& spec) {
  const auto& p = spec.params;
  const auto dims = p.get_sizes("complexity.d", {5, 10});
  const auto sizes = p.get_sizes("complexity.n", {500, 2000});
  const auto ranks = p.get_sizes("complexity.rank", {0});
  const double gamma = p.get_double("complexity.gamma", 0.5);
  const std::size_t n_mc = p.get_size("complexity.n_mc", 2000);

  ExperimentResult res{spec.label, spec.kind, {}, {}};
  res.records = detail::replicate(spec, 1, [&](std::size_t, std::uint64_t seed) {
    std::vector<ExperimentRecord> out;
    for (auto d : dims) {
      for (auto rank : ranks) {
        const std::size_t rk = rank == 0 ? d : rank;
        if (rk > d) continue;
        for (auto n : sizes) {
          const std::string setting = "d=" + std::to_string(d) + " n=" + std::to_string(n) + " rank=" + std::to_string(rk);
          auto rng = make_rng(derive_seed(seed, "design", d * 1000003 + n * 101 + rk));
          Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
          for (Eigen::Index i = 0; i < x.rows(); ++i) {
            for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(rk); ++j) x(i, j) = standard_normal(rng);
          }
          Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
          sigma.topLeftCorner(static_cast<Eigen::Index>(rk), static_cast<Eigen::Index>(rk)).setIdentity();

          ExperimentRecord mc;
          mc.setting = setting;
          mc.estimator = "monte_carlo";
          ExperimentRecord bound = mc;
          bound.estimator = "lemma1";
          const auto start = std::chrono::steady_clock::now();
          try {
            const auto est = fixed_point_linear(x, sigma, gamma, n_mc, derive_seed(seed, "mc"), spec.jobs);
            mc.metric = est.r_fixed;
            mc.error_l2 = est.std_error;
            mc.reference = est.lemma1_bound + 3.0 * est.std_error;
            bound.metric = est.lemma1_bound;
          } catch (const Error& e) {
            mc.status = bound.status = std::string("failed: ") + e.what();
          }
          mc.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
          out.push_back(mc);
          out.push_back(bound);
        }
      }
    }
    return out;
  });
  res.summary = summarize(res.records);
  return res;
}

// Figure 3 analog: constant leverage points planted in logistic Student data,
// scored by how often they sit in the median block after burn-in.
inline ExperimentResult run_outlier_detect(const ExperimentSpec& spec) {
  const auto& p = spec.params;
  const std::size_t n = p.get_size("data.n", 100);
  const std::size_t d = p.get_size("data.d", 10);
  const double noise_sd = p.get_double("data.noise_sd", 1.0);
  const auto rows = p.get_sizes("outliers.rows", {41, 61, 65});
  const double value = p.get_double("outliers.value", 10.0);
  const Vector t_star = detail::scaled_ones(d, p.get_double("data.t_star_norm", std::sqrt(static_cast<double>(d))));
  SolverConfig base = spec.solver;
  if (!p.has("solver.max_iter")) base.max_iter = 5000;
  if (!p.has("solver.k")) base.k = 10;
  // Scores come from the random-block algorithm, which picks the median of the plain risk.
  if (!p.has("solver.criterion")) base.median_criterion = MedianCriterion::PlainRisk;
  const std::size_t burn_in = p.get_size("outliers.burn_in", default_burn_in(base.max_iter));

  ExperimentResult res{spec.label, spec.kind, {}, {}};
  res.records = detail::replicate(spec, spec.jobs, [&](std::size_t, std::uint64_t seed) {
    const auto clean = gen_logistic_student(n, d, t_star, noise_sd, derive_seed(seed, "train"));
    const auto data = plant_constant_outliers(clean, rows, value, t_star);
    SolverConfig cfg = base;
    cfg.seed = derive_seed(seed, "fit");
    cfg.record_trace = true;
    FitResult fit;
    auto rec = detail::timed_fit("planted=" + std::to_string(data.outlier_indices.size()), "mom", cfg.k, [&] {
      fit = mom_fit(data, spec.loss, cfg);
      return fit;
    });
    if (rec.ok()) {
      try {
        const auto s = outlier_scores(fit, burn_in);
        std::size_t worst = 0;
        for (auto i : data.outlier_indices) worst = std::max(worst, s.counts[i]);
        rec.metric = static_cast<double>(worst);
        rec.reference = 1.0;
        rec.error_l2 = (fit.t_hat - t_star).norm();
      } catch (const Error& e) {
        rec.status = std::string("failed: ") + e.what();
      }
    }
    return std::vector<ExperimentRecord>{rec};
  });
  res.summary = summarize(res.records);
  return res;
}

inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
  switch (spec.kind) {
    case ExperimentKind::CorruptionCurve: return run_corruption_curve(spec);
    case ExperimentKind::BlockStrategyCompare: return run_block_strategy_compare(spec);
    case ExperimentKind::Timing: return run_timing(spec);
    case ExperimentKind::Prop1: return run_prop1(spec);
    case ExperimentKind::Prop2: return run_prop2(spec);
    case ExperimentKind::ComplexityCheck: return run_complexity_check(spec);
    case ExperimentKind::OutlierDetect: return run_outlier_detect(spec);
  }
  throw ArgumentError("unknown experiment kind");
}

namespace detail {

inline std::string csv_double(double v) { return std::isnan(v) ? "nan" : format_double(v); }

}  // namespace detail

inline void write_records_csv(const std::vector<ExperimentRecord>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot write '" + path + "'");
  out << "replication,setting,seed,estimator,k,error_l2,test_error,runtime_ms,metric,reference,iterations,converged,status\n";
  for (const auto& r : records) {
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    out << r.replication << ',' << r.setting << ',' << r.seed << ',' << r.estimator << ',' << r.k << ','
        << detail::csv_double(r.error_l2) << ',' << detail::csv_double(r.test_error) << ','
        << detail::csv_double(r.runtime_ms) << ',' << detail::csv_double(r.metric) << ','
        << detail::csv_double(r.reference) << ',' << r.iterations << ',' << (r.converged ? 1 : 0) << ',' << status
        << '\n';
  }
  if (!out) throw ArgumentError("error while writing '" + path + "'");
}

inline void write_summary_csv(const std::vector<SummaryRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot write '" + path + "'");
  out << "setting,estimator,count,failures,metric_median,metric_q1,metric_q3,exceed_freq,error_l2_median,"
         "test_error_median,runtime_ms_median\n";
  for (const auto& r : rows) {
    out << r.setting << ',' << r.estimator << ',' << r.count << ',' << r.failures << ','
        << detail::csv_double(r.metric_median) << ',' << detail::csv_double(r.metric_q1) << ','
        << detail::csv_double(r.metric_q3) << ',' << detail::csv_double(r.exceed_freq) << ','
        << detail::csv_double(r.error_l2_median) << ',' << detail::csv_double(r.test_error_median) << ','
        << detail::csv_double(r.runtime_ms_median) << '\n';
  }
  if (!out) throw ArgumentError("error while writing '" + path + "'");
}

// Writes <dir>/<label>_records.csv and <dir>/<label>_summary.csv.
inline void write_result(const ExperimentResult& res, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const auto base = (std::filesystem::path(dir) / res.label).string();
  write_records_csv(res.records, base + "_records.csv");
  write_summary_csv(res.summary, base + "_summary.csv");
}

}  // namespace mom
