// Command-line front end. Every subcommand reads its settings from an
// optional --config file (flat `key = value`) and lets explicit flags
// override them. Exit codes: 0 success, 1 usage error, 2 runtime failure.

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "mom/bernstein.hpp"
#include "mom/complexity.hpp"
#include "mom/config.hpp"
#include "mom/datagen.hpp"
#include "mom/dataset.hpp"
#include "mom/diagnostics.hpp"
#include "mom/experiments.hpp"
#include "mom/model_select.hpp"
#include "mom/solver.hpp"

namespace {

using namespace mom;

// Effective settings: config file entries overlaid with explicit flags.
class Settings {
 public:
  void bind(CLI::Option* opt, std::string key) { bindings_.emplace_back(opt, std::move(key)); }

  void resolve(const std::string& config_path) {
    if (!config_path.empty()) values_ = KeyValueConfig::load(config_path);
    for (const auto& [opt, key] : bindings_) {
      if (opt->count() == 0) continue;
      const auto res = opt->results();
      std::string joined;
      for (std::size_t i = 0; i < res.size(); ++i) joined += (i ? "," : "") + res[i];
      values_.set(key, opt->get_expected_min() == 0 ? "true" : joined);
      flag_of_[key] = opt->get_name();
    }
  }

  const KeyValueConfig& values() const { return values_; }

  // How to refer to `key` in an error message.
  std::string source(const std::string& key) const {
    auto it = flag_of_.find(key);
    return it != flag_of_.end() ? it->second : "config key '" + key + "'";
  }

  std::string require(const std::string& key) const {
    if (!values_.has(key)) throw ArgumentError("missing required setting " + flag_hint(key));
    return values_.get(key);
  }

 private:
  std::string flag_hint(const std::string& key) const {
    for (const auto& [opt, k] : bindings_) {
      if (k == key) return opt->get_name() + " (config key '" + key + "')";
    }
    return "'" + key + "'";
  }

  std::vector<std::pair<CLI::Option*, std::string>> bindings_;
  KeyValueConfig values_;
  std::map<std::string, std::string> flag_of_;
};

struct Command {
  CLI::App* app = nullptr;
  Settings settings;
  std::string config;
};

CLI::Option* opt(Command& c, const std::string& flag, const std::string& key, const std::string& help) {
  auto* o = c.app->add_option(flag, help);
  c.settings.bind(o, key);
  return o;
}

void add_common(Command& c) {
  c.app->add_option("--config", c.config, "key = value settings file; flags override it")->check(CLI::ExistingFile);
  opt(c, "--seed", "seed", "master seed")->check(CLI::NonNegativeNumber);
  opt(c, "--jobs", "jobs", "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
}

void add_loss_flags(Command& c) {
  opt(c, "--loss", "loss", "logistic | hinge | huber | quantile | l1")
      ->check(CLI::IsMember({"logistic", "hinge", "huber", "quantile", "l1"}));
  opt(c, "--delta", "loss.delta", "Huber threshold")->check(CLI::PositiveNumber);
  opt(c, "--tau", "loss.tau", "quantile level in (0, 1)")->check(CLI::Range(0.0, 1.0));
}

void add_solver_flags(Command& c) {
  opt(c, "--k", "solver.k", "number of blocks")->check(CLI::Range(std::size_t{1}, std::numeric_limits<std::size_t>::max()));
  opt(c, "--blocks", "solver.blocks", "fixed | resample")->check(CLI::IsMember({"fixed", "resample"}));
  opt(c, "--eps", "solver.eps", "stopping tolerance")->check(CLI::PositiveNumber);
  opt(c, "--max-iter", "solver.max_iter", "iteration cap")
      ->check(CLI::Range(std::size_t{1}, std::numeric_limits<std::size_t>::max()));
  opt(c, "--step", "solver.step", "median_block | full_data | constant")
      ->check(CLI::IsMember({"median_block", "full_data", "constant"}));
  opt(c, "--step-constant", "solver.step_constant", "step size for --step constant")->check(CLI::PositiveNumber);
  opt(c, "--criterion", "solver.criterion", "incremental | plain")->check(CLI::IsMember({"incremental", "plain"}));
}

LossSpec loss_from(const Settings& s) {
  const auto& v = s.values();
  return parse_loss(s.require("loss"), v.get_double("loss.delta", 1.0), v.get_double("loss.tau", 0.5));
}

SolverConfig solver_from(const Settings& s, const Dataset& data) {
  SolverConfig cfg = read_solver_config(s.values(), "solver.");
  cfg.seed = s.values().get_u64("seed", 0);
  if (cfg.k == 0) throw ArgumentError(s.source("solver.k") + " must be at least 1");
  if (cfg.k > data.n()) {
    throw ArgumentError(s.source("solver.k") + " = " + std::to_string(cfg.k) + " exceeds the number of observations (" +
                        std::to_string(data.n()) + ")");
  }
  return cfg;
}

Dataset data_from(const Settings& s) { return read_dataset(s.require("data")); }

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot write output file '" + path + "'");
  return out;
}

std::vector<Vector> read_vectors(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open candidate file '" + path + "'");
  std::string line;
  std::vector<Vector> out;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#' || (line_no == 1 && !t.empty() && std::isalpha(static_cast<unsigned char>(t[0])))) {
      continue;
    }
    const auto fields = detail::split(t, ',');
    Vector v(static_cast<Eigen::Index>(fields.size()));
    for (std::size_t j = 0; j < fields.size(); ++j) {
      v[static_cast<Eigen::Index>(j)] = detail::parse_double(fields[j], path + " line " + std::to_string(line_no));
    }
    out.push_back(v);
  }
  if (out.empty()) throw ArgumentError("candidate file '" + path + "' has no vectors");
  return out;
}

// fit: estimate, then `<out>` holds one row per coordinate and `<out>.meta`
// the convergence record.
int run_fit(Command& c, bool erm) {
  const auto& s = c.settings;
  const auto data = data_from(s);
  const auto loss = loss_from(s);
  auto cfg = solver_from(s, data);
  const auto out_path = s.require("out");
  const FitResult res = erm ? erm_fit(data, loss, cfg) : mom_fit(data, loss, cfg);

  auto out = open_out(out_path);
  out << "coordinate,t_hat,t_tilde\n";
  for (Eigen::Index j = 0; j < res.t_hat.size(); ++j) {
    out << j << ',' << detail::format_double(res.t_hat[j]) << ',' << detail::format_double(res.t_tilde[j]) << '\n';
  }
  KeyValueConfig rec;
  rec.set("estimator", erm ? "erm" : "mom");
  rec.set("loss", loss.name());
  rec.set("k", std::to_string(erm ? 1 : cfg.k));
  rec.set("seed", std::to_string(cfg.seed));
  rec.set("iterations", std::to_string(res.iterations));
  rec.set("converged", res.converged ? "true" : "false");
  rec.set("gap", detail::format_double((res.t_hat - res.t_tilde).norm()));
  const auto losses = detail::pointwise_losses(data, loss, res.t_hat);
  rec.set("empirical_risk", detail::format_double(std::accumulate(losses.begin(), losses.end(), 0.0) /
                                                  static_cast<double>(losses.size())));
  auto meta = open_out(metadata_path(out_path));
  meta << rec.to_string();
  std::cerr << (erm ? "erm" : "mom") << ": " << res.iterations << " iterations, "
            << (res.converged ? "converged" : "iteration cap reached") << '\n';
  return 0;
}

int run_cv(Command& c) {
  const auto& s = c.settings;
  const auto data = data_from(s);
  const auto loss = loss_from(s);
  auto cfg = read_solver_config(s.values(), "solver.");
  cfg.seed = s.values().get_u64("seed", 0);
  const auto grid = s.values().get_sizes("cv.grid");
  if (grid.empty()) throw ArgumentError("missing " + s.source("cv.grid"));
  const auto folds = s.values().get_size("cv.folds", 5);
  const auto res = robust_cv(data, loss, grid, folds, cfg);
  auto out = open_out(s.require("out"));
  out << "k,score,selected\n";
  for (const auto& sc : res.scores) {
    out << sc.k << ',' << detail::format_double(sc.score) << ',' << (sc.k == res.selected_k ? 1 : 0) << '\n';
  }
  std::cerr << "selected K = " << res.selected_k << '\n';
  return 0;
}

int run_lepski(Command& c) {
  const auto& s = c.settings;
  const auto data = data_from(s);
  const auto loss = loss_from(s);
  LepskiConfig cfg;
  cfg.k_grid = s.values().get_sizes("lepski.grid");
  if (cfg.k_grid.empty()) throw ArgumentError("missing " + s.source("lepski.grid"));
  const auto thr = s.values().get_doubles("lepski.thresholds");
  if (thr.size() != 1 && thr.size() != cfg.k_grid.size()) {
    throw ArgumentError(s.source("lepski.thresholds") + " needs one value or one per grid entry");
  }
  for (std::size_t i = 0; i < cfg.k_grid.size(); ++i) cfg.thresholds[cfg.k_grid[i]] = thr.size() == 1 ? thr[0] : thr[i];
  cfg.candidates = read_vectors(s.require("lepski.candidates"));
  cfg.seed = s.values().get_u64("seed", 0);
  const auto res = lepski_select(data, loss, cfg);
  auto out = open_out(s.require("out"));
  out << "k,candidate";
  for (Eigen::Index j = 0; j < res.t.size(); ++j) out << ",t" << (j + 1);
  out << '\n' << res.k << ',' << res.candidate;
  for (Eigen::Index j = 0; j < res.t.size(); ++j) out << ',' << detail::format_double(res.t[j]);
  out << '\n';
  std::cerr << "selected K = " << res.k << ", candidate " << res.candidate << '\n';
  return 0;
}

int run_experiment_cmd(Command& c) {
  const auto& s = c.settings;
  auto spec = ExperimentSpec::from_config(s.values());
  if (spec.output_dir.empty()) throw ArgumentError("missing --out-dir (config key 'output_dir')");
  const auto res = run_experiment(spec);
  write_result(res, spec.output_dir);
  std::size_t failures = 0;
  for (const auto& row : res.summary) failures += row.failures;
  std::cerr << res.label << ": " << res.records.size() << " records, " << failures << " failed fits\n";
  return 0;
}

ConditionalModel model_from(const Settings& s) {
  const auto& v = s.values();
  ConditionalModel m;
  const auto design = v.get_or("design", "ones");
  m.design.kind = design == "gaussian" ? DesignKind::Gaussian : design == "rademacher" ? DesignKind::Rademacher : DesignKind::Ones;
  m.design.d = v.get_size("d", 1);
  const auto ts = v.get_doubles("t_star", {0.0});
  if (ts.size() == 1) {
    m.t_star = Vector::Constant(static_cast<Eigen::Index>(m.design.d), ts[0]);
  } else {
    m.t_star = Eigen::Map<const Vector>(ts.data(), static_cast<Eigen::Index>(ts.size()));
  }
  const auto noise = v.get_or("noise", "gaussian");
  if (noise == "gaussian") {
    m.noise = NoiseModel::gaussian(v.get_double("noise.sigma", 1.0));
  } else if (noise == "uniform") {
    m.noise = NoiseModel::uniform(v.get_double("noise.lo", -1.0), v.get_double("noise.hi", 1.0));
  } else {
    m.noise = NoiseModel::logistic_label();
  }
  return m;
}

int run_bernstein(Command& c) {
  const auto& s = c.settings;
  const auto& v = s.values();
  const auto model = model_from(s);
  const auto loss = loss_from(s);
  BernsteinOptions opts;
  opts.eps = v.get_double("bernstein.eps", 2.0);
  opts.c_prime = v.get_double("bernstein.c_prime", 0.0);
  const auto rep = check_local_bernstein(model, loss, v.get_double("bernstein.r", 0.1), v.get_size("bernstein.dirs", 16),
                                         v.get_size("bernstein.n_x", 200), v.get_u64("seed", 0), opts);
  KeyValueConfig out;
  out.set("loss", loss.name());
  out.set("r", detail::format_double(rep.r));
  out.set("directions_tested", std::to_string(rep.directions_tested));
  out.set("min_ratio", detail::format_double(rep.min_ratio));
  out.set("theorem_A", detail::format_double(rep.theorem_A));
  out.set("inverse_A", detail::format_double(1.0 / rep.theorem_A));
  out.set("alpha", detail::format_double(rep.alpha));
  out.set("c_prime", detail::format_double(rep.c_prime));
  out.set("c0", detail::format_double(rep.c0));
  out.set("half_width", detail::format_double(rep.half_width));
  out.set("passed", rep.passed ? "true" : "false");
  open_out(s.require("out")) << out.to_string();
  std::cerr << "bernstein " << loss.name() << ": min ratio " << rep.min_ratio << " vs 1/A = " << 1.0 / rep.theorem_A
            << (rep.passed ? " (pass)\n" : " (fail)\n");
  return 0;
}

int run_complexity_cmd(Command& c) {
  const auto& s = c.settings;
  const auto& v = s.values();
  const auto data = data_from(s);
  const Eigen::MatrixXd x = data.x;
  const auto which = v.get_or("complexity.sigma", "empirical");
  Eigen::MatrixXd sigma;
  if (which == "identity") {
    sigma = Eigen::MatrixXd::Identity(x.cols(), x.cols());
  } else if (which == "empirical") {
    sigma = x.transpose() * x / static_cast<double>(x.rows());
  } else {
    throw ArgumentError(s.source("complexity.sigma") + " must be 'identity' or 'empirical'");
  }
  const double gamma = v.get_double("complexity.gamma", 0.5);
  const auto est = fixed_point_linear(x, sigma, gamma, v.get_size("complexity.n_mc", 2000), v.get_u64("seed", 0),
                                      v.get_size("jobs", 1), v.get_size("complexity.subset", 0));
  KeyValueConfig out;
  out.set("r_fixed", detail::format_double(est.r_fixed));
  out.set("std_error", detail::format_double(est.std_error));
  out.set("lemma1_bound", detail::format_double(est.lemma1_bound));
  out.set("gamma", detail::format_double(est.gamma));
  out.set("rank", std::to_string(est.rank));
  out.set("subset_size", std::to_string(est.subset_size));
  out.set("n_monte_carlo", std::to_string(est.n_monte_carlo));
  open_out(s.require("out")) << out.to_string();
  std::cerr << "fixed point " << est.r_fixed << " +- " << est.std_error << ", closed-form bound " << est.lemma1_bound
            << '\n';
  return 0;
}

int run_detect(Command& c) {
  const auto& s = c.settings;
  const auto data = data_from(s);
  const auto loss = loss_from(s);
  auto cfg = solver_from(s, data);
  if (!s.values().has("solver.criterion")) cfg.median_criterion = MedianCriterion::PlainRisk;
  cfg.record_trace = true;
  const auto fit = mom_fit(data, loss, cfg);
  const std::size_t burn_in = s.values().get_size("burn_in", default_burn_in(fit.iterations));
  if (burn_in >= fit.iterations) {
    throw ArgumentError(s.source("burn_in") + " = " + std::to_string(burn_in) + " is not below the " +
                        std::to_string(fit.iterations) + " iterations run");
  }
  const auto scores = outlier_scores(fit, burn_in);
  const double fraction = s.values().get_double("flag_fraction", 0.05);
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw ArgumentError(s.source("flag_fraction") + " must lie in [0, 1]");
  std::vector<std::size_t> order(data.n());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores.counts[a] < scores.counts[b]; });
  std::vector<char> flagged(data.n(), 0);
  const auto n_flag = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(data.n())));
  for (std::size_t i = 0; i < n_flag; ++i) flagged[order[i]] = 1;
  auto out = open_out(s.require("out"));
  out << "index,score,flagged\n";
  for (std::size_t i = 0; i < data.n(); ++i) out << i << ',' << scores.counts[i] << ',' << int(flagged[i]) << '\n';
  std::cerr << "scored " << scores.iterations_counted << " iterations after a burn-in of " << burn_in << '\n';
  return 0;
}

int run_generate(Command& c) {
  const auto& s = c.settings;
  const auto& v = s.values();
  const auto model = s.require("model");
  const std::uint64_t seed = v.get_u64("seed", 0);
  const std::size_t n = v.get_size("n", 1000);
  const std::size_t d = v.get_size("d", 10);
  const auto t_star_vec = [&] {
    const double norm = v.get_double("t_star_norm", std::sqrt(static_cast<double>(d)));
    return Vector::Constant(static_cast<Eigen::Index>(d), norm / std::sqrt(static_cast<double>(d)));
  };
  Dataset data;
  if (model == "logistic_student" || model == "figure1" || model == "figure3") {
    const Vector t = t_star_vec();
    data = gen_logistic_student(n, d, t, v.get_double("noise_sd", 1.0), seed);
    if (model == "figure1") {
      const auto scale = v.get_or("outlier_scale", "sd") == "variance" ? OutlierScale::Variance5 : OutlierScale::StdDev5;
      data = corrupt_figure1(data, v.get_size("n_out", n / 20), t, seed, scale);
    } else if (model == "figure3") {
      data = plant_constant_outliers(data, v.get_sizes("rows", {41, 61, 65}), v.get_double("value", 10.0), t);
    }
  } else if (model == "prop1") {
    data = gen_prop1(n, d, t_star_vec(), v.get_double("v_scale", 10.0), seed);
  } else if (model == "prop2") {
    data = gen_prop2(n, v.get_double("x", 10.0), v.get_double("t_star", 0.0), seed, v.get_bool("relax", false));
  } else {
    throw ArgumentError(s.source("model") + ": unknown model '" + model +
                        "' (logistic_student, figure1, figure3, prop1, prop2)");
  }
  data.seed = seed;
  write_dataset(data, s.require("out"));
  std::cerr << "wrote " << data.n() << " rows to " << s.require("out") << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"minmax median-of-means estimators"};
  app.require_subcommand(1);

  Command fit, cv, lepski, experiment, bernstein, complexity, detect, generate;
  bool erm = false;

  fit.app = app.add_subcommand("fit", "fit the minmax MOM estimator (or ERM with --erm)");
  add_common(fit);
  opt(fit, "--data", "data", "dataset CSV");
  add_loss_flags(fit);
  add_solver_flags(fit);
  opt(fit, "--out", "out", "estimate CSV; the convergence record goes to <out>.meta");
  fit.app->add_flag("--erm", erm, "plain subgradient descent on the empirical risk");

  cv.app = app.add_subcommand("cv", "choose K by robust cross-validation");
  add_common(cv);
  opt(cv, "--data", "data", "dataset CSV");
  add_loss_flags(cv);
  add_solver_flags(cv);
  opt(cv, "--grid", "cv.grid", "comma-separated block counts");
  opt(cv, "--folds", "cv.folds", "number of folds")->check(CLI::Range(2, 1000000));
  opt(cv, "--out", "out", "scores CSV");

  lepski.app = app.add_subcommand("lepski", "choose K and an estimate by the Lepski rule");
  add_common(lepski);
  opt(lepski, "--data", "data", "dataset CSV");
  add_loss_flags(lepski);
  opt(lepski, "--grid", "lepski.grid", "comma-separated block counts");
  opt(lepski, "--thresholds", "lepski.thresholds", "one threshold, or one per grid value");
  opt(lepski, "--candidates", "lepski.candidates", "CSV with one candidate vector per row");
  opt(lepski, "--out", "out", "selection CSV");

  experiment.app = app.add_subcommand("experiment", "run an experiment described by a spec file");
  add_common(experiment);
  opt(experiment, "--spec", "spec", "experiment spec (same format as --config)")->check(CLI::ExistingFile);
  opt(experiment, "--replications", "replications", "number of replications")->check(CLI::PositiveNumber);
  opt(experiment, "--out-dir", "output_dir", "directory for <label>_records.csv and <label>_summary.csv");

  bernstein.app = app.add_subcommand("bernstein", "check the local Bernstein condition on a synthetic model");
  add_common(bernstein);
  add_loss_flags(bernstein);
  opt(bernstein, "--design", "design", "ones | gaussian | rademacher")->check(CLI::IsMember({"ones", "gaussian", "rademacher"}));
  opt(bernstein, "--d", "d", "dimension")->check(CLI::PositiveNumber);
  opt(bernstein, "--t-star", "t_star", "true parameter (one value is broadcast)");
  opt(bernstein, "--noise", "noise", "gaussian | uniform | logistic")->check(CLI::IsMember({"gaussian", "uniform", "logistic"}));
  opt(bernstein, "--sigma", "noise.sigma", "Gaussian noise scale")->check(CLI::PositiveNumber);
  opt(bernstein, "--lo", "noise.lo", "uniform noise lower end");
  opt(bernstein, "--hi", "noise.hi", "uniform noise upper end");
  opt(bernstein, "--r", "bernstein.r", "sphere radius")->check(CLI::PositiveNumber);
  opt(bernstein, "--dirs", "bernstein.dirs", "number of directions")->check(CLI::PositiveNumber);
  opt(bernstein, "--n-x", "bernstein.n_x", "design draws")->check(CLI::PositiveNumber);
  opt(bernstein, "--moment-eps", "bernstein.eps", "moment exponent excess (2 + eps)")->check(CLI::PositiveNumber);
  opt(bernstein, "--c-prime", "bernstein.c_prime", "norm-equivalence constant (default: empirical)");
  opt(bernstein, "--out", "out", "report file (key = value)");

  complexity.app = app.add_subcommand("complexity", "Monte Carlo complexity fixed point of a linear class");
  add_common(complexity);
  opt(complexity, "--data", "data", "dataset CSV (the design is used)");
  opt(complexity, "--sigma", "complexity.sigma", "identity | empirical")->check(CLI::IsMember({"identity", "empirical"}));
  opt(complexity, "--gamma", "complexity.gamma", "gamma")->check(CLI::PositiveNumber);
  opt(complexity, "--n-mc", "complexity.n_mc", "Monte Carlo draws")->check(CLI::PositiveNumber);
  opt(complexity, "--subset", "complexity.subset", "use the first rows only (0 = all)")->check(CLI::NonNegativeNumber);
  opt(complexity, "--out", "out", "report file (key = value)");

  detect.app = app.add_subcommand("detect-outliers", "score observations by median-block membership");
  add_common(detect);
  opt(detect, "--data", "data", "dataset CSV");
  add_loss_flags(detect);
  add_solver_flags(detect);
  opt(detect, "--burn-in", "burn_in", "iterations ignored at the start (default 20%)")->check(CLI::NonNegativeNumber);
  opt(detect, "--flag-fraction", "flag_fraction", "share of lowest scores flagged")->check(CLI::Range(0.0, 1.0));
  opt(detect, "--out", "out", "scores CSV");

  generate.app = app.add_subcommand("generate", "write a synthetic dataset");
  add_common(generate);
  opt(generate, "--model", "model", "logistic_student | figure1 | figure3 | prop1 | prop2");
  opt(generate, "--n", "n", "rows")->check(CLI::PositiveNumber);
  opt(generate, "--d", "d", "columns")->check(CLI::PositiveNumber);
  opt(generate, "--x", "x", "noise level x (prop2)")->check(CLI::PositiveNumber);
  opt(generate, "--t-star", "t_star", "true parameter (prop2)");
  opt(generate, "--t-star-norm", "t_star_norm", "norm of the all-equal true parameter")->check(CLI::NonNegativeNumber);
  opt(generate, "--noise-sd", "noise_sd", "logit noise scale")->check(CLI::NonNegativeNumber);
  opt(generate, "--n-out", "n_out", "number of outliers (figure1)")->check(CLI::NonNegativeNumber);
  opt(generate, "--outlier-scale", "outlier_scale", "sd | variance")->check(CLI::IsMember({"sd", "variance"}));
  opt(generate, "--v-scale", "v_scale", "contamination size (prop1)")->check(CLI::NonNegativeNumber);
  generate.app->add_flag("--relax", "allow (n, x) outside the construction's hypotheses");
  generate.settings.bind(generate.app->get_option("--relax"), "relax");
  opt(generate, "--out", "out", "dataset CSV (metadata goes to <out>.meta)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    for (Command* c : {&fit, &cv, &lepski, &experiment, &bernstein, &complexity, &detect, &generate}) {
      if (!c->app->parsed()) continue;
      if (c == &experiment) {
        // The spec file is the base layer; --config is not used here.
        const auto* spec = experiment.app->get_option("--spec");
        if (spec->count() == 0 && experiment.config.empty()) throw ArgumentError("missing --spec");
        c->settings.resolve(spec->count() ? spec->as<std::string>() : experiment.config);
      } else {
        c->settings.resolve(c->config);
      }
      if (c == &fit) return run_fit(fit, erm);
      if (c == &cv) return run_cv(cv);
      if (c == &lepski) return run_lepski(lepski);
      if (c == &experiment) return run_experiment_cmd(experiment);
      if (c == &bernstein) return run_bernstein(bernstein);
      if (c == &complexity) return run_complexity_cmd(complexity);
      if (c == &detect) return run_detect(detect);
      if (c == &generate) return run_generate(generate);
    }
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
