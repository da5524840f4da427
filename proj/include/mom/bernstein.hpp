#pragma once

// Numerical check of the local Bernstein condition
//   ||f - f*||_{L2}^2 <= A * P L_f   on the sphere ||f - f*||_{L2} = r
// for linear models whose conditional output law is known, together with
// the constants A predicted for each loss family.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "mom/dataset.hpp"
#include "mom/errors.hpp"
#include "mom/losses.hpp"
#include "mom/rng.hpp"

namespace mom {

enum class DesignKind { Ones, Gaussian, Rademacher };

struct DesignModel {
  DesignKind kind = DesignKind::Gaussian;
  std::size_t d = 1;

  Vector sample(Rng& rng) const {
    Vector x(static_cast<Eigen::Index>(d));
    for (auto& v : x) {
      switch (kind) {
        case DesignKind::Ones: v = 1.0; break;
        case DesignKind::Gaussian: v = standard_normal(rng); break;
        case DesignKind::Rademacher: v = rademacher(rng); break;
      }
    }
    return x;
  }
};

enum class NoiseKind { Gaussian, Uniform, LogisticLabel };

// Law of Y given X = x. For Gaussian and Uniform, Y = <x, t*> + zeta with
// zeta drawn from the stated law; for LogisticLabel, Y is a +-1 label with
// P(Y = 1 | x) = sigmoid(<x, t*>).
struct NoiseModel {
  NoiseKind kind = NoiseKind::Gaussian;
  double sigma = 1.0;
  double lo = -1.0;
  double hi = 1.0;

  static NoiseModel gaussian(double sigma) {
    if (!(sigma > 0.0)) throw ArgumentError("gaussian noise requires sigma > 0");
    return {NoiseKind::Gaussian, sigma, 0.0, 0.0};
  }
  static NoiseModel uniform(double lo, double hi) {
    if (!(hi > lo)) throw ArgumentError("uniform noise requires lo < hi");
    return {NoiseKind::Uniform, 0.0, lo, hi};
  }
  static NoiseModel logistic_label() { return {NoiseKind::LogisticLabel, 0.0, 0.0, 0.0}; }

  bool continuous() const noexcept { return kind != NoiseKind::LogisticLabel; }

  double density(double z) const {
    switch (kind) {
      case NoiseKind::Gaussian: {
        const double s = z / sigma;
        return std::exp(-0.5 * s * s) / (sigma * std::sqrt(2.0 * std::numbers::pi));
      }
      case NoiseKind::Uniform: return (z >= lo && z <= hi) ? 1.0 / (hi - lo) : 0.0;
      case NoiseKind::LogisticLabel: break;
    }
    throw ArgumentError("label noise has no density");
  }

  double cdf(double z) const {
    switch (kind) {
      case NoiseKind::Gaussian: return 0.5 * std::erfc(-z / (sigma * std::numbers::sqrt2));
      case NoiseKind::Uniform: return std::clamp((z - lo) / (hi - lo), 0.0, 1.0);
      case NoiseKind::LogisticLabel: break;
    }
    throw ArgumentError("label noise has no cdf");
  }

  // Integration range; the Gaussian is cut at 12 sigma.
  std::pair<double, double> support() const {
    if (kind == NoiseKind::Gaussian) return {-12.0 * sigma, 12.0 * sigma};
    return {lo, hi};
  }
};

inline double sigmoid(double z) { return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

struct ConditionalModel {
  DesignModel design;
  Vector t_star;
  NoiseModel noise;

  void validate() const {
    if (static_cast<std::size_t>(t_star.size()) != design.d) {
      throw ArgumentError("conditional model: t_star dimension does not match the design");
    }
    if (!t_star.allFinite()) throw ArgumentError("conditional model: t_star must be finite");
  }

  Matrix sample_design(std::size_t n_x, std::uint64_t seed) const {
    auto rng = make_rng(derive_seed(seed, "design"));
    Matrix xs(static_cast<Eigen::Index>(n_x), static_cast<Eigen::Index>(design.d));
    for (std::size_t i = 0; i < n_x; ++i) xs.row(static_cast<Eigen::Index>(i)) = design.sample(rng).transpose();
    return xs;
  }
};

namespace detail {

inline constexpr double kQuadratureAbsTol = 1e-8;

// E[l(a, Y) - l(b, Y)] for Y = b + zeta, integrating piecewise between the
// kinks of the integrand so that each piece is smooth.
inline void check_loss_matches_noise(const NoiseModel& noise, const LossSpec& loss) {
  if (!noise.continuous() && !loss.is_classification()) throw ArgumentError("label noise needs a classification loss");
  if (noise.continuous() && loss.is_classification()) throw ArgumentError(loss.name() + " loss needs label noise");
}

inline double conditional_excess(const NoiseModel& noise, const LossSpec& loss, double a, double b) {
  check_loss_matches_noise(noise, loss);
  if (a == b) return 0.0;
  if (!noise.continuous()) {
    const double eta = sigmoid(b);
    return eta * (loss.value(a, 1.0) - loss.value(b, 1.0)) + (1.0 - eta) * (loss.value(a, -1.0) - loss.value(b, -1.0));
  }
  const auto [lo, hi] = noise.support();
  std::vector<double> cuts{lo, hi};
  const double s = a - b;  // kinks in zeta where y - a or y - b hits a loss breakpoint
  std::vector<double> kinks{s, 0.0};
  if (loss.family() == LossFamily::Huber) {
    const double dl = loss.delta();
    kinks = {s - dl, s + dl, -dl, dl};
  }
  for (double k : kinks) {
    if (k > lo && k < hi) cuts.push_back(k);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  const auto integrand = [&](double z) { return (loss.value(a, b + z) - loss.value(b, b + z)) * noise.density(z); };
  double total = 0.0;
  double total_err = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double err = 0.0;
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, cuts[i], cuts[i + 1], 15, 1e-12,
                                                                           &err);
    total_err += err;
  }
  if (!(total_err <= kQuadratureAbsTol) || !std::isfinite(total)) {
    throw NumericError("quadrature did not reach the absolute tolerance (error estimate " + std::to_string(total_err) +
                       ")");
  }
  return total;
}

inline double excess_risk_on(const ConditionalModel& model, const LossSpec& loss, const Vector& t, const Matrix& xs) {
  const Vector a = xs * t;
  const Vector b = xs * model.t_star;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < xs.rows(); ++i) sum += conditional_excess(model.noise, loss, a[i], b[i]);
  return sum / static_cast<double>(xs.rows());
}

}  // namespace detail

// Monte Carlo over n_x design draws of the conditional excess risk, each
// computed by quadrature (continuous noise) or exactly (label noise).
inline double excess_risk_numeric(const ConditionalModel& model, const LossSpec& loss, const Vector& t, std::size_t n_x,
                                  std::uint64_t seed) {
  model.validate();
  if (n_x == 0) throw ArgumentError("excess_risk: n_x must be at least 1");
  if (static_cast<std::size_t>(t.size()) != model.design.d) throw ArgumentError("excess_risk: dimension mismatch");
  detail::check_loss_matches_noise(model.noise, loss);
  return detail::excess_risk_on(model, loss, t, model.sample_design(n_x, seed));
}

struct TheoremParams {
  double alpha = 0.0;    // quantile, Huber, hinge
  double c0 = 0.0;       // logistic
  double c_prime = 1.0;  // logistic
  double eps = 2.0;      // logistic
  double r = 0.0;        // logistic
};

// A such that ||f - f*||^2 <= A P L_f: 4/alpha (quantile, Huber), 2/alpha
// (hinge), and for logistic 2 (1 + e^m)^2 e^m with m = c0 + r (2C')^{(2+eps)/eps}.
inline double theorem_constant(LossFamily family, const TheoremParams& p) {
  switch (family) {
    case LossFamily::Quantile:
    case LossFamily::Huber:
    case LossFamily::Hinge:
      if (!(p.alpha > 0.0)) throw ArgumentError("theorem_constant: alpha must be positive");
      return (family == LossFamily::Hinge ? 2.0 : 4.0) / p.alpha;
    case LossFamily::Logistic: {
      if (!(p.eps > 0.0) || !(p.c_prime > 0.0) || p.r < 0.0 || p.c0 < 0.0) {
        throw ArgumentError("theorem_constant: logistic needs eps > 0, C' > 0, r >= 0, c0 >= 0");
      }
      const double m = p.c0 + p.r * std::pow(2.0 * p.c_prime, (2.0 + p.eps) / p.eps);
      const double em = std::exp(m);
      return 2.0 * (1.0 + em) * (1.0 + em) * em;
    }
  }
  throw ArgumentError("theorem_constant: unknown loss family");
}

struct BernsteinOptions {
  double eps = 2.0;
  double c_prime = 0.0;  // 0: empirical L_{2+eps}/L2 ratio over the tested directions
  double tolerance = 0.05;
  std::size_t alpha_grid = 2001;
};

struct BernsteinReport {
  LossSpec loss = LossSpec::logistic();
  double r = 0.0;
  std::size_t directions_tested = 0;
  double min_ratio = 0.0;
  double theorem_A = 0.0;
  bool passed = false;
  double alpha = 0.0;
  double c_prime = 0.0;
  double c0 = 0.0;
  double half_width = 0.0;
  std::vector<double> ratios;
};

namespace detail {

inline double empirical_norm(const Vector& proj, double p) {
  double s = 0.0;
  for (double v : proj) s += std::pow(std::abs(v), p);
  return std::pow(s / static_cast<double>(proj.size()), 1.0 / p);
}

// Smallest value of g on a uniform grid over [-h, h].
template <class G>
double grid_min(G&& g, double h, std::size_t points) {
  if (h == 0.0 || points < 2) return g(0.0);
  double best = g(0.0);
  for (std::size_t i = 0; i < points; ++i) {
    best = std::min(best, g(-h + 2.0 * h * static_cast<double>(i) / static_cast<double>(points - 1)));
  }
  return best;
}

inline double empirical_quantile(std::vector<double> v, double level) {
  std::sort(v.begin(), v.end());
  const double pos = std::clamp(level, 0.0, 1.0) * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace detail

inline BernsteinReport check_local_bernstein(const ConditionalModel& model, const LossSpec& loss, double r,
                                             std::size_t n_dirs, std::size_t n_x, std::uint64_t seed,
                                             const BernsteinOptions& opts = {}) {
  model.validate();
  if (!(r > 0.0)) throw ArgumentError("bernstein: r must be positive");
  if (n_dirs == 0) throw ArgumentError("bernstein: n_dirs must be at least 1");
  if (n_x == 0) throw ArgumentError("bernstein: n_x must be at least 1");
  if (!(opts.eps > 0.0)) throw ArgumentError("bernstein: eps must be positive");

  const Matrix xs = model.sample_design(n_x, seed);
  const std::size_t d = model.design.d;

  std::vector<Vector> dirs;
  double c_emp = 0.0;
  for (std::size_t k = 0; k < n_dirs; ++k) {
    auto rng = make_rng(derive_seed(seed, "direction", k));
    int failures = 0;
    while (true) {
      Vector u(static_cast<Eigen::Index>(d));
      for (auto& v : u) v = standard_normal(rng);
      const Vector proj = xs * u;
      const double l2 = detail::empirical_norm(proj, 2.0);
      if (l2 > 0.0 && std::isfinite(l2)) {
        c_emp = std::max(c_emp, detail::empirical_norm(proj, 2.0 + opts.eps) / l2);
        dirs.push_back(u / l2);
        break;
      }
      if (++failures >= 100) throw NumericError("bernstein: could not draw a direction with nonzero L2 norm");
    }
  }

  BernsteinReport rep;
  rep.loss = loss;
  rep.r = r;
  rep.c_prime = opts.c_prime > 0.0 ? opts.c_prime : c_emp;
  const double power = (2.0 + opts.eps) / opts.eps;
  rep.half_width = r * std::pow(std::numbers::sqrt2 * rep.c_prime, power);

  TheoremParams tp;
  switch (loss.family()) {
    case LossFamily::Quantile:
      if (!model.noise.continuous()) throw ArgumentError("bernstein: quantile loss needs continuous noise");
      rep.alpha = detail::grid_min([&](double w) { return model.noise.density(w); }, rep.half_width, opts.alpha_grid);
      break;
    case LossFamily::Huber: {
      if (!model.noise.continuous()) throw ArgumentError("bernstein: Huber loss needs continuous noise");
      const double dl = loss.delta();
      rep.alpha = detail::grid_min([&](double w) { return model.noise.cdf(w + dl) - model.noise.cdf(w - dl); },
                                   rep.half_width, opts.alpha_grid);
      break;
    }
    case LossFamily::Hinge: {
      if (model.noise.continuous()) throw ArgumentError("bernstein: hinge loss needs label noise");
      const Vector b = xs * model.t_star;
      double a = 1.0;
      for (double v : b) {
        const double eta = sigmoid(v);
        a = std::min({a, eta, 1.0 - eta, std::abs(1.0 - 2.0 * eta)});
      }
      rep.alpha = a;
      break;
    }
    case LossFamily::Logistic: {
      if (model.noise.continuous()) throw ArgumentError("bernstein: logistic loss needs label noise");
      const Vector b = xs * model.t_star;
      std::vector<double> abs_b(b.size());
      for (Eigen::Index i = 0; i < b.size(); ++i) abs_b[static_cast<std::size_t>(i)] = std::abs(b[i]);
      const double level = 1.0 - std::pow(2.0 * rep.c_prime, -(4.0 + 2.0 * opts.eps) / opts.eps);
      rep.c0 = detail::empirical_quantile(abs_b, level);
      tp.c0 = rep.c0;
      tp.c_prime = rep.c_prime;
      tp.eps = opts.eps;
      tp.r = r;
      break;
    }
  }
  tp.alpha = rep.alpha;
  rep.theorem_A = theorem_constant(loss.family(), tp);

  rep.min_ratio = std::numeric_limits<double>::infinity();
  for (const auto& u : dirs) {
    const Vector t = model.t_star + r * u;
    const double excess = detail::excess_risk_on(model, loss, t, xs);
    const double dist2 = std::pow(detail::empirical_norm(xs * (t - model.t_star), 2.0), 2.0);
    const double ratio = excess / dist2;
    rep.ratios.push_back(ratio);
    rep.min_ratio = std::min(rep.min_ratio, ratio);
  }
  rep.directions_tested = dirs.size();
  rep.passed = rep.min_ratio >= (1.0 - opts.tolerance) / rep.theorem_A;
  return rep;
}

}  // namespace mom
