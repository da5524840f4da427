#pragma once

// Randomized-block descent-ascent for the minmax MOM estimator, and ERM as
// the one-block special case of the same loop.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mom/dataset.hpp"
#include "mom/errors.hpp"
#include "mom/linalg.hpp"
#include "mom/losses.hpp"
#include "mom/mom_core.hpp"
#include "mom/rng.hpp"

namespace mom {

enum class BlockStrategy { FixedAtStart, ResampleEachStep };
enum class StepRule { MedianBlockOpNorm, FullDataOpNorm, Constant };
enum class StepDenominator { BlockSize, TotalN };

// Incremental ranks blocks by P_B(l_t - l_t~); PlainRisk ranks them by P_B l_t.
enum class MedianCriterion { Incremental, PlainRisk };

struct SolverConfig {
  std::size_t k = 1;
  BlockStrategy block_strategy = BlockStrategy::ResampleEachStep;
  double eps = 1e-6;
  std::size_t max_iter = 10000;
  StepRule step_rule = StepRule::MedianBlockOpNorm;
  double step_constant = 1.0;  // step size 1/eta under StepRule::Constant
  StepDenominator step_denominator = StepDenominator::BlockSize;
  MedianCriterion median_criterion = MedianCriterion::Incremental;
  std::uint64_t seed = 0;
  bool record_trace = false;
  bool record_timing = false;

  void validate() const {
    if (k == 0) throw ArgumentError("solver: k must be at least 1");
    if (!(eps > 0.0)) throw ArgumentError("solver: eps must be positive");
    if (max_iter == 0) throw ArgumentError("solver: max_iter must be at least 1");
    if (step_rule == StepRule::Constant && !(step_constant > 0.0 && std::isfinite(step_constant))) {
      throw ArgumentError("solver: constant step must be positive and finite");
    }
  }
};

struct MedianBlockRecord {
  std::size_t iteration = 0;
  IndexList members;
};

struct FitResult {
  Vector t_hat;
  Vector t_tilde;
  std::size_t iterations = 0;
  bool converged = false;
  std::size_t n_observations = 0;
  // Filled when SolverConfig::record_trace is set; one entry per update.
  std::vector<MedianBlockRecord> median_block_history;
  std::vector<double> objective_history;
  std::vector<Vector> iterate_history;
  std::vector<Vector> tilde_history;
  Vector t_initial;
  Vector t_tilde_initial;
  // Filled when SolverConfig::record_timing is set.
  std::vector<double> iteration_ms;
};

inline Vector block_gradient(const Dataset& data, const IndexList& block, const LossSpec& loss, const Vector& t) {
  if (block.empty()) throw ArgumentError("block_gradient: empty block");
  if (static_cast<std::size_t>(t.size()) != data.d()) {
    throw ArgumentError("block_gradient: parameter dimension does not match the design");
  }
  Vector g = Vector::Zero(t.size());
  for (auto i : block) {
    if (i >= data.n()) throw ArgumentError("block_gradient: index out of range");
    const auto r = static_cast<Eigen::Index>(i);
    const double u = data.x.row(r).dot(t);
    g += loss.subgrad(u, data.y[r]) * data.x.row(r).transpose();
  }
  return g / static_cast<double>(block.size());
}

// Partition used at update `iter`: drawn once for FixedAtStart, redrawn at
// every update for ResampleEachStep.
inline BlockPartition solver_partition(std::size_t n, const SolverConfig& cfg, std::size_t iter) {
  const std::uint64_t block_seed = derive_seed(cfg.seed, "blocks");
  if (cfg.k == 1 || cfg.block_strategy == BlockStrategy::FixedAtStart || iter == 0) {
    return partition(n, cfg.k, block_seed);
  }
  return partition(n, cfg.k, derive_seed(block_seed, iter));
}

namespace detail {

// Block gradient from precomputed predictions u = X t.
inline void block_gradient_from(const Dataset& data, const IndexList& block, const LossSpec& loss,
                                const Vector& u, Vector& g) {
  g.setZero();
  for (auto i : block) {
    const auto r = static_cast<Eigen::Index>(i);
    g += loss.subgrad(u[r], data.y[r]) * data.x.row(r).transpose();
  }
  g /= static_cast<double>(block.size());
}

inline Matrix gather_rows(const Matrix& x, const IndexList& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(rows[r]));
  }
  return out;
}

inline bool all_finite(const Vector& v) { return v.allFinite(); }

enum class Mode { Minmax, Erm };

inline Vector draw_normal(Rng& rng, std::size_t d) {
  Vector v(static_cast<Eigen::Index>(d));
  for (auto& e : v) e = standard_normal(rng);
  return v;
}

inline FitResult run_descent(const Dataset& data, const LossSpec& loss, const SolverConfig& cfg, Mode mode) {
  cfg.validate();
  validate(data);
  const std::size_t n = data.n();
  const std::size_t d = data.d();
  if (d == 0) throw ArgumentError("solver: design has no columns");
  if (cfg.k > n) throw ArgumentError("solver: k exceeds the number of observations");
  if (loss.is_classification() && !labels_are_binary(data)) {
    throw DomainError(loss.name() + " loss requires labels in {-1, +1}");
  }

  auto init_rng = make_rng(derive_seed(cfg.seed, "init"));
  FitResult res;
  res.n_observations = n;
  res.t_hat = draw_normal(init_rng, d);
  res.t_tilde = draw_normal(init_rng, d);
  while (res.t_tilde == res.t_hat) res.t_tilde = draw_normal(init_rng, d);
  res.t_initial = res.t_hat;
  res.t_tilde_initial = res.t_tilde;
  Vector& t = res.t_hat;
  Vector& tt = res.t_tilde;

  const bool minmax = mode == Mode::Minmax;
  const bool single = cfg.k == 1;
  BlockPartition part = solver_partition(n, cfg, 0);

  std::optional<double> full_eta;
  const auto eta_for = [&](const IndexList& block, std::size_t iter) -> double {
    const double denom = static_cast<double>(cfg.step_denominator == StepDenominator::BlockSize ? block.size() : n);
    double op = 0.0;
    if (cfg.step_rule == StepRule::FullDataOpNorm) {
      if (!full_eta) full_eta = operator_norm(data.x);
      op = *full_eta;
    } else if (single) {
      op = operator_norm(data.x);
    } else {
      op = operator_norm(gather_rows(data.x, block));
    }
    if (!(op > 0.0)) throw SolverError("step scale is zero: median block has a zero design", iter);
    return op / (4.0 * denom);
  };

  Vector u(static_cast<Eigen::Index>(n));
  Vector ut(static_cast<Eigen::Index>(n));
  Vector g(static_cast<Eigen::Index>(d));
  Vector gt(static_cast<Eigen::Index>(d));
  std::vector<double> values(n);

  for (std::size_t iter = 0; iter < cfg.max_iter; ++iter) {
    const auto start = std::chrono::steady_clock::now();
    if (minmax && (t - tt).norm() < cfg.eps) {
      res.converged = true;
      break;
    }
    if (!single && cfg.block_strategy == BlockStrategy::ResampleEachStep && iter > 0) {
      part = solver_partition(n, cfg, iter);
    }

    u.noalias() = data.x * t;
    if (minmax) ut.noalias() = data.x * tt;

    std::size_t median = 0;
    double objective = 0.0;
    const bool need_values = !single || (cfg.record_trace && minmax);
    if (need_values) {
      const bool incremental = minmax && cfg.median_criterion == MedianCriterion::Incremental;
      for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        values[i] = loss.value(u[r], data.y[r]);
        if (incremental) values[i] -= loss.value(ut[r], data.y[r]);
      }
      const MomValue mv = median_of_block_means(block_means(values, part));
      median = mv.median_block;
      objective = mv.value;
    }
    const IndexList& block = part.blocks[median];

    const double eta = cfg.step_rule == StepRule::Constant ? 1.0 / cfg.step_constant : eta_for(block, iter);
    block_gradient_from(data, block, loss, u, g);
    if (mode == Mode::Erm && g.norm() < cfg.eps) {
      res.converged = true;
      break;
    }
    t -= g / eta;
    if (minmax) {
      block_gradient_from(data, block, loss, ut, gt);
      tt -= gt / eta;
    } else {
      tt = t;
    }
    if (!all_finite(t) || !all_finite(tt)) throw SolverError("non-finite iterate", iter);

    ++res.iterations;
    if (cfg.record_trace) {
      res.median_block_history.push_back({iter, block});
      if (minmax) res.objective_history.push_back(objective);
      res.iterate_history.push_back(t);
      res.tilde_history.push_back(tt);
    }
    if (cfg.record_timing) {
      const auto stop = std::chrono::steady_clock::now();
      res.iteration_ms.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
    }
  }
  return res;
}

}  // namespace detail

// Minmax MOM estimator. t_hat is the minimizing player, t_tilde the other one.
inline FitResult mom_fit(const Dataset& data, const LossSpec& loss, const SolverConfig& cfg) {
  return detail::run_descent(data, loss, cfg, detail::Mode::Minmax);
}

// Subgradient descent on the full empirical risk. cfg.k is ignored; the run
// is the one-block path of mom_fit with a gradient-norm stopping rule.
inline FitResult erm_fit(const Dataset& data, const LossSpec& loss, const SolverConfig& cfg) {
  SolverConfig one = cfg;
  one.k = 1;
  return detail::run_descent(data, loss, one, detail::Mode::Erm);
}

}  // namespace mom
