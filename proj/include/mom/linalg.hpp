#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>

#include "mom/dataset.hpp"
#include "mom/rng.hpp"

namespace mom {

struct PowerIterationOptions {
  double rel_tol = 1e-8;
  int max_iter = 1000;
  std::uint64_t seed = 0x6f70'6e6f'726dULL;
};

// Largest eigenvalue of m^T m, i.e. the squared spectral norm of m. Power
// iteration runs on whichever of m^T m and m m^T is smaller; both share the
// same nonzero spectrum.
template <class Derived>
double operator_norm(const Eigen::MatrixBase<Derived>& m, const PowerIterationOptions& opts = {}) {
  const Eigen::Index rows = m.rows();
  const Eigen::Index cols = m.cols();
  if (rows == 0 || cols == 0) return 0.0;
  const Eigen::Index s = std::min(rows, cols);

  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(s, s);
  if (rows >= cols) {
    gram.selfadjointView<Eigen::Lower>().rankUpdate(m.transpose());
  } else {
    gram.selfadjointView<Eigen::Lower>().rankUpdate(m);
  }
  if (s == 1) return gram(0, 0);

  auto rng = make_rng(opts.seed);
  Eigen::VectorXd v(s);
  for (Eigen::Index i = 0; i < s; ++i) v[i] = standard_normal(rng);
  v.normalize();

  Eigen::VectorXd w(s);
  double lambda = 0.0;
  for (int it = 0; it < opts.max_iter; ++it) {
    w.noalias() = gram.selfadjointView<Eigen::Lower>() * v;
    const double next = v.dot(w);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    if (it > 0 && std::abs(next - lambda) <= opts.rel_tol * std::abs(next)) return next;
    lambda = next;
  }
  return lambda;
}

}  // namespace mom
