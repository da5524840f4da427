#pragma once

// Seeded synthetic datasets and the exact one-dimensional L1 minimizer.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "mom/config.hpp"
#include "mom/dataset.hpp"
#include "mom/errors.hpp"
#include "mom/rng.hpp"

namespace mom {

// Student t with `dof` degrees of freedom as Z / sqrt(chi2 / dof), the
// chi-square being a sum of squared standard normals.
inline double student_t(Rng& rng, int dof) {
  const double z = standard_normal(rng);
  double chi2 = 0.0;
  for (int k = 0; k < dof; ++k) {
    const double g = standard_normal(rng);
    chi2 += g * g;
  }
  return z / std::sqrt(chi2 / dof);
}

inline double sign_of(double v) { return v >= 0.0 ? 1.0 : -1.0; }

// Rows with i.i.d. t(5) coordinates and labels drawn from
// log(P(Y=1|X) / P(Y=-1|X)) = <X, t*> + eps, eps ~ N(0, noise_sd^2).
inline Dataset gen_logistic_student(std::size_t n, std::size_t d, const Vector& t_star, double noise_sd,
                                    std::uint64_t seed) {
  if (n == 0 || d == 0) throw ArgumentError("gen_logistic_student: n and d must be at least 1");
  if (static_cast<std::size_t>(t_star.size()) != d) throw ArgumentError("gen_logistic_student: t_star must have d entries");
  if (!(noise_sd >= 0.0)) throw ArgumentError("gen_logistic_student: noise_sd must be nonnegative");
  auto rng = make_rng(derive_seed(seed, "logistic-student"));
  Dataset data;
  data.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  data.y.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.x.cols(); ++j) data.x(i, j) = student_t(rng, 5);
    const double logit = data.x.row(i).dot(t_star) + noise_sd * standard_normal(rng);
    const double p = 1.0 / (1.0 + std::exp(-logit));
    data.y[i] = uniform01(rng) < p ? 1.0 : -1.0;
  }
  data.t_star = t_star;
  data.seed = seed;
  data.generator = "logistic_student";
  data.params["noise_sd"] = detail::format_double(noise_sd);
  return data;
}

// How to read the "N(0, 5)" outlier design: standard deviation 5 or variance 5.
enum class OutlierScale { StdDev5, Variance5 };

// Overwrites the first n_out rows with X ~ N(0, s^2 I) and
// Y = -sign(<X, t*> + eps), eps ~ N(0, 1).
inline Dataset corrupt_figure1(const Dataset& data, std::size_t n_out, const Vector& t_star, std::uint64_t seed,
                               OutlierScale scale = OutlierScale::StdDev5) {
  if (n_out > data.n()) throw ArgumentError("corrupt_figure1: more outliers than observations");
  if (static_cast<std::size_t>(t_star.size()) != data.d()) throw ArgumentError("corrupt_figure1: t_star dimension mismatch");
  Dataset out = data;
  const double sd = scale == OutlierScale::StdDev5 ? 5.0 : std::sqrt(5.0);
  auto rng = make_rng(derive_seed(seed, "figure1-outliers"));
  for (std::size_t i = 0; i < n_out; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (Eigen::Index j = 0; j < out.x.cols(); ++j) out.x(r, j) = sd * standard_normal(rng);
    out.y[r] = -sign_of(out.x.row(r).dot(t_star) + standard_normal(rng));
  }
  out.outlier_indices.resize(n_out);
  std::iota(out.outlier_indices.begin(), out.outlier_indices.end(), std::size_t{0});
  out.params["n_out"] = std::to_string(n_out);
  out.params["outlier_sd"] = detail::format_double(sd);
  return out;
}

// Outliers at the given rows with X = (value, ..., value) and Y = -sign(<X, t>).
inline Dataset plant_constant_outliers(const Dataset& data, const IndexList& rows, double value, const Vector& t) {
  if (static_cast<std::size_t>(t.size()) != data.d()) throw ArgumentError("plant_constant_outliers: dimension mismatch");
  Dataset out = data;
  for (auto i : rows) {
    if (i >= data.n()) throw ArgumentError("plant_constant_outliers: row out of range");
    const auto r = static_cast<Eigen::Index>(i);
    out.x.row(r).setConstant(value);
    out.y[r] = -sign_of(out.x.row(r).dot(t));
  }
  out.outlier_indices = rows;
  std::sort(out.outlier_indices.begin(), out.outlier_indices.end());
  out.outlier_indices.erase(std::unique(out.outlier_indices.begin(), out.outlier_indices.end()),
                            out.outlier_indices.end());
  return out;
}

// Gaussian design, noiseless outputs Y = <X, t*>, then X_1 += v with v
// parallel to t* and ||v|| = v_scale * n.
inline Dataset gen_prop1(std::size_t n, std::size_t d, const Vector& t_star, double v_scale, std::uint64_t seed) {
  if (n == 0 || d == 0) throw ArgumentError("gen_prop1: n and d must be at least 1");
  if (static_cast<std::size_t>(t_star.size()) != d) throw ArgumentError("gen_prop1: t_star must have d entries");
  const double norm = t_star.norm();
  if (!(norm > 0.0)) throw ArgumentError("gen_prop1: t_star must be nonzero");
  if (!(v_scale >= 0.0)) throw ArgumentError("gen_prop1: v_scale must be nonnegative");
  auto rng = make_rng(derive_seed(seed, "prop1"));
  Dataset data;
  data.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.x.cols(); ++j) data.x(i, j) = standard_normal(rng);
  }
  data.y = data.x * t_star;
  if (v_scale > 0.0) {
    const Vector v = (v_scale * static_cast<double>(n) / norm) * t_star;
    data.x.row(0) += v.transpose();
    data.outlier_indices = {0};
  }
  data.t_star = t_star;
  data.seed = seed;
  data.generator = "prop1";
  data.params["v_scale"] = detail::format_double(v_scale);
  return data;
}

struct Prop2Constants {
  double delta_prime = 0.0;  // half-width of the central noise piece
  double big_r = 0.0;        // size of the rare design spike
  double delta = 0.0;        // spike probability
};

inline Prop2Constants prop2_constants(std::size_t n, double x_level) {
  const double nn = static_cast<double>(n);
  return {std::sqrt(x_level / (2.0 * nn)) / 8.0, 4.0 * std::sqrt(x_level * nn), 1.0 / (x_level * nn)};
}

// One-dimensional heavy-tailed design X = eps (1 + R eta) and noise zeta
// uniform on [-x-1/2+d', -x] U [-d', d'] U [x, x+1/2-d'].
inline Dataset gen_prop2(std::size_t n, double x_level, double t_star, std::uint64_t seed, bool relax = false) {
  if (!relax && (n < 8000 || x_level < 10.0 || x_level > static_cast<double>(n) / 800.0)) {
    throw ArgumentError("gen_prop2: requires n >= 8000 and 10 <= x <= n/800 (pass relax to override)");
  }
  if (n == 0 || !(x_level > 0.0)) throw ArgumentError("gen_prop2: n and x must be positive");
  const auto c = prop2_constants(n, x_level);
  if (!(c.delta_prime < x_level) || !(c.delta_prime < 0.5)) {
    throw ArgumentError("gen_prop2: noise pieces overlap for this (n, x)");
  }
  const double side = 0.5 - c.delta_prime;  // length of each outer piece
  const double mid = 2.0 * c.delta_prime;   // length of the central piece; total length is 1

  auto rng = make_rng(derive_seed(seed, "prop2"));
  Dataset data;
  data.x.resize(static_cast<Eigen::Index>(n), 1);
  data.y.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
    const double w = uniform01(rng);  // position along the concatenated pieces
    double zeta = 0.0;
    if (w < side) {
      zeta = -x_level - side + w;
    } else if (w < side + mid) {
      zeta = -c.delta_prime + (w - side);
    } else {
      zeta = x_level + (w - side - mid);
    }
    const double eps = rademacher(rng);
    const double eta = uniform01(rng) < c.delta ? 1.0 : 0.0;
    const double xi = eps * (1.0 + c.big_r * eta);
    data.x(i, 0) = xi;
    data.y[i] = xi * t_star + zeta;
  }
  data.t_star = Vector::Constant(1, t_star);
  data.seed = seed;
  data.generator = "prop2";
  data.params["x_level"] = detail::format_double(x_level);
  data.params["delta_prime"] = detail::format_double(c.delta_prime);
  data.params["R"] = detail::format_double(c.big_r);
  data.params["delta"] = detail::format_double(c.delta);
  return data;
}

// Smallest input value v with total weight of {values <= v} at least half of
// the total: the lower end of the minimizer set of t -> sum w_i |values_i - t|.
inline double weighted_median(const std::vector<double>& values, const std::vector<double>& weights) {
  if (values.size() != weights.size()) throw ArgumentError("weighted_median: values and weights differ in length");
  if (values.empty()) throw ArgumentError("weighted_median: empty input");
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw ArgumentError("weighted_median: weights must be positive and finite");
  }
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  // Summed in sorted order so that the running sum ends exactly at the total.
  double total = 0.0;
  for (auto k : order) total += weights[k];
  double acc = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    acc += weights[order[k]];
    // Equal values are taken together before comparing.
    if (k + 1 < order.size() && values[order[k + 1]] == values[order[k]]) continue;
    if (2.0 * acc >= total) return values[order[k]];
  }
  return values[order.back()];
}

// Exact L1 regression through the origin in one dimension:
// argmin_t sum |Y_i - X_i t| = weighted median of Y_i / X_i with weights |X_i|.
// Rows with X_i = 0 do not depend on t and are skipped.
inline double l1_erm_1d(const Dataset& data) {
  if (data.d() != 1) throw ArgumentError("l1_erm_1d: design must have one column");
  std::vector<double> v, w;
  for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
    const double xi = data.x(i, 0);
    if (xi == 0.0) continue;
    v.push_back(data.y[i] / xi);
    w.push_back(std::abs(xi));
  }
  if (v.empty()) throw ArgumentError("l1_erm_1d: design is identically zero");
  return weighted_median(v, w);
}

}  // namespace mom
