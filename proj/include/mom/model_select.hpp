#pragma once

// Choosing the number of blocks K: robust V-fold cross-validation, and a
// Lepski-type rule over a finite candidate set.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <vector>

#include "mom/dataset.hpp"
#include "mom/errors.hpp"
#include "mom/losses.hpp"
#include "mom/mom_core.hpp"
#include "mom/rng.hpp"
#include "mom/solver.hpp"

namespace mom {

struct CvScore {
  std::size_t k = 0;
  double score = 0.0;
  std::vector<double> fold_scores;
};

struct CvResult {
  std::size_t selected_k = 0;
  std::vector<CvScore> scores;  // ascending in k
};

namespace detail {

inline std::vector<std::size_t> sorted_unique(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

inline double lower_median(std::vector<double> v) {
  const std::size_t pos = (v.size() + 1) / 2 - 1;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(pos), v.end());
  return v[pos];
}

inline std::vector<double> pointwise_losses(const Dataset& data, const LossSpec& loss, const Vector& t) {
  const Vector u = data.x * t;
  std::vector<double> out(data.n());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out[i] = loss.value(u[r], data.y[r]);
  }
  return out;
}

}  // namespace detail

// Each fold is held out in turn; the model is fit with K blocks on the rest
// and scored by the MOM of held-out losses over max(1, floor(K |val|/|train|))
// blocks. The K with the smallest median fold score wins, smaller K on ties.
inline CvResult robust_cv(const Dataset& data, const LossSpec& loss, const std::vector<std::size_t>& k_grid,
                          std::size_t v_folds, const SolverConfig& cfg) {
  if (k_grid.empty()) throw ArgumentError("robust_cv: empty k grid");
  if (v_folds < 2) throw ArgumentError("robust_cv: at least two folds are required");
  const std::size_t n = data.n();
  if (v_folds > n) throw ArgumentError("robust_cv: more folds than observations");
  const auto grid = detail::sorted_unique(k_grid);
  if (grid.front() == 0) throw ArgumentError("robust_cv: k must be at least 1");

  IndexList order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = make_rng(derive_seed(cfg.seed, "cv-folds"));
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<Dataset> train(v_folds), val(v_folds);
  for (std::size_t f = 0; f < v_folds; ++f) {
    IndexList tr, va;
    for (std::size_t j = 0; j < n; ++j) (j % v_folds == f ? va : tr).push_back(order[j]);
    std::sort(tr.begin(), tr.end());
    std::sort(va.begin(), va.end());
    train[f] = data.subset(tr);
    val[f] = data.subset(va);
  }

  CvResult res;
  for (auto k : grid) {
    CvScore sc{k, 0.0, {}};
    for (std::size_t f = 0; f < v_folds; ++f) {
      const std::size_t n_tr = train[f].n();
      const std::size_t n_va = val[f].n();
      if (k > n_tr) throw ArgumentError("robust_cv: k = " + std::to_string(k) + " exceeds a training fold");
      const std::size_t k_val = std::max<std::size_t>(1, k * n_va / n_tr);
      if (k_val > n_va) throw ArgumentError("robust_cv: validation fold smaller than its block count");
      SolverConfig fold_cfg = cfg;
      fold_cfg.k = k;
      fold_cfg.record_trace = false;
      fold_cfg.seed = derive_seed(cfg.seed, "cv-fit", f);
      const FitResult fit = mom_fit(train[f], loss, fold_cfg);
      const auto losses = detail::pointwise_losses(val[f], loss, fit.t_hat);
      const auto p = partition(n_va, k_val, derive_seed(cfg.seed, "cv-score", f));
      sc.fold_scores.push_back(mom(losses, p).value);
    }
    sc.score = detail::lower_median(sc.fold_scores);
    res.scores.push_back(std::move(sc));
  }
  const auto best = std::min_element(res.scores.begin(), res.scores.end(),
                                     [](const CvScore& a, const CvScore& b) { return a.score < b.score; });
  res.selected_k = best->k;
  return res;
}

inline std::size_t robust_cv_select_k(const Dataset& data, const LossSpec& loss,
                                      const std::vector<std::size_t>& k_grid, std::size_t v_folds,
                                      const SolverConfig& cfg) {
  return robust_cv(data, loss, k_grid, v_folds, cfg).selected_k;
}

// max over the candidates g' of MOM_K[l_g - l_g'].
inline double lepski_tk(const Vector& g, const Dataset& data, const LossSpec& loss, const BlockPartition& p,
                        const std::vector<Vector>& candidates) {
  if (candidates.empty()) throw ArgumentError("lepski_tk: empty candidate set");
  if (p.n != data.n()) throw ArgumentError("lepski_tk: partition does not match the dataset size");
  const auto lg = detail::pointwise_losses(data, loss, g);
  std::vector<double> diff(lg.size());
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& c : candidates) {
    if (c.size() != g.size()) throw ArgumentError("lepski_tk: candidate dimension mismatch");
    const auto lc = detail::pointwise_losses(data, loss, c);
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = lg[i] - lc[i];
    best = std::max(best, mom(diff, p).value);
  }
  return best;
}

struct LepskiConfig {
  std::vector<std::size_t> k_grid;
  std::map<std::size_t, double> thresholds;
  std::vector<Vector> candidates;
  std::uint64_t seed = 0;
};

struct LepskiResult {
  std::size_t k = 0;
  std::size_t candidate = 0;
  Vector t;
  // tk[j][c]: T_K of candidate c for the j-th grid value (ascending grid).
  std::vector<std::size_t> grid;
  std::vector<std::vector<double>> tk;
};

inline LepskiResult lepski_select(const Dataset& data, const LossSpec& loss, const LepskiConfig& cfg) {
  if (cfg.k_grid.empty()) throw ArgumentError("lepski: empty k grid");
  if (cfg.candidates.empty()) throw ArgumentError("lepski: empty candidate set");
  const auto grid = detail::sorted_unique(cfg.k_grid);
  const std::size_t n = data.n();
  for (auto k : grid) {
    if (k == 0 || k > n) throw ArgumentError("lepski: grid value " + std::to_string(k) + " outside [1, N]");
    auto it = cfg.thresholds.find(k);
    if (it == cfg.thresholds.end()) throw ArgumentError("lepski: no threshold for k = " + std::to_string(k));
    if (std::isnan(it->second)) throw ArgumentError("lepski: threshold is NaN for k = " + std::to_string(k));
  }
  const std::size_t c_count = cfg.candidates.size();
  std::vector<std::vector<double>> losses;
  losses.reserve(c_count);
  for (const auto& c : cfg.candidates) {
    if (static_cast<std::size_t>(c.size()) != data.d()) throw ArgumentError("lepski: candidate dimension mismatch");
    losses.push_back(detail::pointwise_losses(data, loss, c));
  }

  LepskiResult res;
  res.grid = grid;
  res.tk.assign(grid.size(), std::vector<double>(c_count));
  std::vector<double> diff(n);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const auto p = partition(n, grid[j], derive_seed(cfg.seed, "lepski", grid[j]));
    for (std::size_t a = 0; a < c_count; ++a) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t b = 0; b < c_count; ++b) {
        for (std::size_t i = 0; i < n; ++i) diff[i] = losses[a][i] - losses[b][i];
        best = std::max(best, mom(diff, p).value);
      }
      res.tk[j][a] = best;
    }
  }

  // Walk the grid downwards keeping the running tail intersection.
  std::vector<char> alive(c_count, 1);
  std::optional<std::size_t> chosen;
  for (std::size_t j = grid.size(); j-- > 0;) {
    const double thr = cfg.thresholds.at(grid[j]);
    bool any = false;
    for (std::size_t a = 0; a < c_count; ++a) {
      if (alive[a] && !(res.tk[j][a] <= thr)) alive[a] = 0;
      any = any || alive[a];
    }
    if (!any) break;
    chosen = j;
  }
  if (!chosen) throw SelectionError("lepski: no block count has a nonempty tail intersection; thresholds too tight");

  // Recompute the intersection for the chosen K to pick its lowest member.
  for (std::size_t a = 0; a < c_count; ++a) {
    bool ok = true;
    for (std::size_t j = *chosen; j < grid.size() && ok; ++j) ok = res.tk[j][a] <= cfg.thresholds.at(grid[j]);
    if (ok) {
      res.k = grid[*chosen];
      res.candidate = a;
      res.t = cfg.candidates[a];
      return res;
    }
  }
  throw SelectionError("lepski: internal inconsistency in tail intersection");
}

}  // namespace mom
