#pragma once

// Rademacher fixed point of a linear class localized on the ellipsoid
// {t : t^T Sigma t <= r^2}, where the supremum has a closed form:
//   sup_t sum_i s_i <t, X_i> = r * || Sigma^{+1/2} sum_i s_i X_i ||.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <vector>

#include "mom/dataset.hpp"
#include "mom/errors.hpp"
#include "mom/parallel.hpp"
#include "mom/rng.hpp"

namespace mom {

struct ComplexityEstimate {
  double r_fixed = 0.0;
  double gamma = 0.0;
  std::size_t n_monte_carlo = 0;
  double std_error = 0.0;
  double lemma1_bound = 0.0;
  std::size_t rank = 0;
  std::size_t subset_size = 0;
};

namespace detail {

struct RangeBasis {
  Eigen::MatrixXd whiten;  // rank x d, rows v_j^T / sqrt(lambda_j)
  Eigen::MatrixXd null;    // (d - rank) x d, orthonormal complement
  std::size_t rank = 0;
};

inline Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> checked_eigen(const Eigen::MatrixXd& sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() == 0) throw ArgumentError("covariance must be square and nonempty");
  if (!sigma.allFinite()) throw DomainError("covariance has non-finite entries");
  if (!sigma.isApprox(sigma.transpose(), 1e-10) && (sigma - sigma.transpose()).norm() > 1e-12) {
    throw DomainError("covariance is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
  if (es.info() != Eigen::Success) throw NumericError("eigendecomposition of the covariance failed");
  const auto& ev = es.eigenvalues();
  const double scale = ev.cwiseAbs().maxCoeff();
  if (scale > 0.0 && ev.minCoeff() < -1e-8 * scale) throw DomainError("covariance is not positive semidefinite");
  return es;
}

inline std::size_t numeric_rank(const Eigen::VectorXd& ev) {
  const double lmax = ev.maxCoeff();
  if (!(lmax > 0.0)) return 0;
  std::size_t r = 0;
  for (double e : ev) r += e > 1e-10 * lmax ? 1 : 0;
  return r;
}

inline RangeBasis range_basis(const Eigen::MatrixXd& sigma) {
  const auto es = checked_eigen(sigma);
  const auto& ev = es.eigenvalues();
  const auto& vecs = es.eigenvectors();
  const double lmax = ev.maxCoeff();
  RangeBasis b;
  b.rank = numeric_rank(ev);
  const auto d = sigma.rows();
  b.whiten.resize(static_cast<Eigen::Index>(b.rank), d);
  b.null.resize(d - static_cast<Eigen::Index>(b.rank), d);
  Eigen::Index wi = 0, ni = 0;
  for (Eigen::Index j = 0; j < d; ++j) {
    if (lmax > 0.0 && ev[j] > 1e-10 * lmax) {
      b.whiten.row(wi++) = vecs.col(j).transpose() / std::sqrt(ev[j]);
    } else {
      b.null.row(ni++) = vecs.col(j).transpose();
    }
  }
  return b;
}

struct McScalar {
  double mean = 0.0;
  double std_error = 0.0;
};

// Monte Carlo mean of || Sigma^{+1/2} sum_i s_i X_i || over Rademacher signs.
template <class Derived>
McScalar rademacher_norm_mc(const Eigen::MatrixBase<Derived>& x_rows, const Eigen::MatrixXd& sigma,
                            std::size_t n_mc, std::uint64_t seed, std::size_t jobs) {
  if (n_mc == 0) throw ArgumentError("rademacher: n_mc must be at least 1");
  if (x_rows.cols() != sigma.rows()) throw ArgumentError("rademacher: design and covariance dimensions differ");
  const RangeBasis basis = range_basis(sigma);
  for (Eigen::Index i = 0; i < x_rows.rows(); ++i) {
    const double norm = x_rows.row(i).norm();
    if (basis.null.rows() > 0 && (basis.null * x_rows.row(i).transpose()).norm() > 1e-8 * std::max(1.0, norm)) {
      throw DomainError("design row " + std::to_string(i) + " is outside the range of the covariance");
    }
  }
  // Whitened rows: the draw only needs || sum_i s_i W X_i ||.
  const Eigen::MatrixXd w = x_rows * basis.whiten.transpose();
  std::vector<double> draws(n_mc);
  parallel_for(n_mc, jobs, [&](std::size_t m) {
    auto rng = make_rng(derive_seed(seed, "rademacher", m));
    Eigen::VectorXd s = Eigen::VectorXd::Zero(w.cols());
    for (Eigen::Index i = 0; i < w.rows(); ++i) s += rademacher(rng) * w.row(i).transpose();
    draws[m] = s.norm();
  });
  McScalar out;
  for (double v : draws) out.mean += v;
  out.mean /= static_cast<double>(n_mc);
  if (n_mc > 1) {
    double ss = 0.0;
    for (double v : draws) ss += (v - out.mean) * (v - out.mean);
    out.std_error = std::sqrt(ss / static_cast<double>(n_mc - 1) / static_cast<double>(n_mc));
  }
  return out;
}

}  // namespace detail

template <class Derived>
double rademacher_sup_linear(const Eigen::MatrixBase<Derived>& x_rows, const Eigen::MatrixXd& sigma_cov, double r,
                             std::size_t n_mc, std::uint64_t seed, std::size_t jobs = 1) {
  if (!(r >= 0.0)) throw ArgumentError("rademacher: radius must be nonnegative");
  return r * detail::rademacher_norm_mc(x_rows, sigma_cov, n_mc, seed, jobs).mean;
}

// sqrt(rank(Sigma) / (2 gamma^2 n)).
inline double lemma1_bound(const Eigen::MatrixXd& sigma_cov, double gamma, std::size_t n) {
  if (!(gamma > 0.0)) throw ArgumentError("lemma1_bound: gamma must be positive");
  if (n == 0) throw ArgumentError("lemma1_bound: n must be at least 1");
  const auto es = detail::checked_eigen(sigma_cov);
  const auto rank = detail::numeric_rank(es.eigenvalues());
  return std::sqrt(static_cast<double>(rank) / (2.0 * gamma * gamma * static_cast<double>(n)));
}

// The map r -> E sup / (r^2 |J| gamma) is c / (r |J| gamma) for this class,
// so the fixed point is c / (|J| gamma) with c the Monte Carlo scalar. J is
// the first `subset_size` rows (all rows when 0).
template <class Derived>
ComplexityEstimate fixed_point_linear(const Eigen::MatrixBase<Derived>& x_rows, const Eigen::MatrixXd& sigma_cov,
                                      double gamma, std::size_t n_mc, std::uint64_t seed, std::size_t jobs = 1,
                                      std::size_t subset_size = 0) {
  if (!(gamma > 0.0)) throw ArgumentError("fixed_point: gamma must be positive");
  const auto n = static_cast<std::size_t>(x_rows.rows());
  if (n == 0) throw ArgumentError("fixed_point: empty design");
  const std::size_t j = subset_size == 0 ? n : subset_size;
  if (j > n) throw ArgumentError("fixed_point: subset larger than the design");
  const auto mc = detail::rademacher_norm_mc(x_rows.topRows(static_cast<Eigen::Index>(j)), sigma_cov, n_mc, seed, jobs);
  ComplexityEstimate est;
  const double scale = static_cast<double>(j) * gamma;
  est.r_fixed = mc.mean / scale;
  est.std_error = mc.std_error / scale;
  est.gamma = gamma;
  est.n_monte_carlo = n_mc;
  est.lemma1_bound = lemma1_bound(sigma_cov, gamma, n);
  est.rank = detail::numeric_rank(detail::checked_eigen(sigma_cov).eigenvalues());
  est.subset_size = j;
  return est;
}

}  // namespace mom
