#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "mom/complexity.hpp"
#include "mom/rng.hpp"

using namespace mom;

namespace {

// Mean of a chi variable with k degrees of freedom.
double chi_mean(int k) {
  return std::sqrt(2.0) * std::exp(std::lgamma((k + 1) / 2.0) - std::lgamma(k / 2.0));
}

Eigen::MatrixXd gaussian_rows(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  auto rng = make_rng(seed);
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = standard_normal(rng);
  return x;
}

// Rows confined to the span of the first `rank` coordinates.
Eigen::MatrixXd low_rank_rows(Eigen::Index n, Eigen::Index d, Eigen::Index rank, std::uint64_t seed) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, d);
  x.leftCols(rank) = gaussian_rows(n, rank, seed);
  return x;
}

}  // namespace

TEST(Lemma1Bound, ReferenceValues) {
  EXPECT_NEAR(lemma1_bound(Eigen::MatrixXd::Identity(10, 10), 0.1, 1000), std::sqrt(0.5), 1e-12);
  EXPECT_EQ(lemma1_bound(Eigen::MatrixXd::Zero(4, 4), 1.0, 10), 0.0);
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(2, 2);
  s(0, 0) = 1.0;
  EXPECT_DOUBLE_EQ(lemma1_bound(s, 1.0, 2), 0.5);
}

TEST(Lemma1Bound, Errors) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(2, 2);
  s(1, 1) = -0.5;
  EXPECT_THROW(lemma1_bound(s, 1.0, 10), DomainError);
  EXPECT_THROW(lemma1_bound(Eigen::MatrixXd::Identity(2, 2), 0.0, 10), ArgumentError);
  EXPECT_THROW(lemma1_bound(Eigen::MatrixXd::Identity(2, 2), 1.0, 0), ArgumentError);
  Eigen::MatrixXd asym = Eigen::MatrixXd::Identity(2, 2);
  asym(0, 1) = 1.0;
  EXPECT_THROW(lemma1_bound(asym, 1.0, 10), DomainError);
}

TEST(RademacherSup, ZeroRadiusAndLinearity) {
  const auto x = gaussian_rows(30, 4, 1);
  const Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(4, 4);
  EXPECT_EQ(rademacher_sup_linear(x, sigma, 0.0, 100, 3), 0.0);
  const double one = rademacher_sup_linear(x, sigma, 1.0, 200, 3);
  EXPECT_DOUBLE_EQ(rademacher_sup_linear(x, sigma, 2.0, 200, 3), 2.0 * one);
  EXPECT_GT(one, 0.0);
}

TEST(RademacherSup, AgreesWithExplicitEllipsoidSupremum) {
  // Oracle: sup_{t' Sigma t <= 1} <t, s> = sqrt(s' Sigma^-1 s) for invertible
  // Sigma, enumerated over all 2^12 sign vectors.
  const auto x = gaussian_rows(12, 3, 5);
  Eigen::MatrixXd a = gaussian_rows(3, 3, 6);
  const Eigen::MatrixXd sigma = a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(3, 3);
  double exact_mean = 0.0;
  const Eigen::MatrixXd inv = sigma.inverse();
  for (unsigned mask = 0; mask < (1u << 12); ++mask) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(3);
    for (int i = 0; i < 12; ++i) s += ((mask >> i) & 1u ? 1.0 : -1.0) * x.row(i).transpose();
    exact_mean += std::sqrt(s.dot(inv * s));
  }
  exact_mean /= static_cast<double>(1u << 12);
  const auto est = fixed_point_linear(x, sigma, 1.0, 4000, 9);
  EXPECT_NEAR(est.r_fixed * 12.0, exact_mean, 4.0 * est.std_error * 12.0);
  EXPECT_DOUBLE_EQ(rademacher_sup_linear(x, sigma, 1.0, 4000, 9), est.r_fixed * 12.0);
}

TEST(RademacherSup, IdentityCovarianceScaling) {
  const Eigen::Index j = 200, d = 6;
  const auto x = gaussian_rows(j, d, 7);
  const auto est = fixed_point_linear(x, Eigen::MatrixXd::Identity(d, d), 1.0, 2000, 8);
  // c = r_fixed * |J| * gamma is E sup / r.
  const double c = est.r_fixed * static_cast<double>(j);
  const double se = est.std_error * static_cast<double>(j);
  EXPECT_LE(c, std::sqrt(static_cast<double>(j * d)) * (1.0 + 3.0 * se / c));
}

TEST(RademacherSup, RowOutsideTheRangeIsADomainError) {
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(3, 3);
  sigma(0, 0) = sigma(1, 1) = 1.0;
  Eigen::MatrixXd x = low_rank_rows(10, 3, 2, 1);
  EXPECT_NO_THROW(rademacher_sup_linear(x, sigma, 1.0, 10, 1));
  x(4, 2) = 0.3;
  EXPECT_THROW(rademacher_sup_linear(x, sigma, 1.0, 10, 1), DomainError);
}

TEST(FixedPoint, GammaScalingAndDeterminism) {
  const auto x = gaussian_rows(100, 5, 2);
  const Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(5, 5);
  const auto a = fixed_point_linear(x, sigma, 0.5, 300, 4);
  const auto b = fixed_point_linear(x, sigma, 1.0, 300, 4);
  EXPECT_NEAR(b.r_fixed, a.r_fixed / 2.0, 1e-15 * a.r_fixed);
  EXPECT_EQ(fixed_point_linear(x, sigma, 0.5, 300, 4).r_fixed, a.r_fixed);
  EXPECT_NE(fixed_point_linear(x, sigma, 0.5, 300, 5).r_fixed, a.r_fixed);
  EXPECT_EQ(a.rank, 5u);
  EXPECT_EQ(a.subset_size, 100u);
  EXPECT_EQ(a.n_monte_carlo, 300u);
  EXPECT_THROW(fixed_point_linear(x, sigma, 0.0, 10, 1), ArgumentError);
  EXPECT_THROW(fixed_point_linear(x, sigma, 1.0, 10, 1, 1, 101), ArgumentError);
}

TEST(FixedPoint, ParallelMatchesSerial) {
  const auto x = gaussian_rows(80, 4, 3);
  const Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(4, 4);
  const auto a = fixed_point_linear(x, sigma, 1.0, 257, 6, 1);
  const auto b = fixed_point_linear(x, sigma, 1.0, 257, 6, 3);
  EXPECT_DOUBLE_EQ(a.r_fixed, b.r_fixed);
  EXPECT_DOUBLE_EQ(a.std_error, b.std_error);
}

TEST(FixedPoint, StdErrorShrinksLikeInverseRootMc) {
  const auto x = gaussian_rows(200, 5, 9);
  const Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(5, 5);
  const auto a = fixed_point_linear(x, sigma, 1.0, 500, 10);
  const auto b = fixed_point_linear(x, sigma, 1.0, 2000, 10);
  const double ratio = a.std_error / b.std_error;
  EXPECT_GE(ratio, 1.5);
  EXPECT_LE(ratio, 2.7);
}

TEST(FixedPoint, DecreasingTargetInRadius) {
  // E(r) / r^2 = c / r.
  const auto x = gaussian_rows(50, 3, 2);
  const Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(3, 3);
  double prev = std::numeric_limits<double>::infinity();
  for (double r : {0.1, 0.2, 0.5, 1.0, 3.0}) {
    const double v = rademacher_sup_linear(x, sigma, r, 100, 1) / (r * r);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(FixedPoint, RankDeficientCovarianceTracksTheRank) {
  const Eigen::Index n = 1000, d = 10;
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(d, d);
  sigma.topLeftCorner(3, 3).setIdentity();
  const auto x = low_rank_rows(n, d, 3, 12);
  const auto est = fixed_point_linear(x, sigma, 1.0, 2000, 13);
  EXPECT_EQ(est.rank, 3u);
  // sum sigma_i W_i / sqrt(n) is close to a standard Gaussian in the range,
  // so r_fixed ~ E chi_rank / sqrt(n).
  const double target3 = chi_mean(3) / std::sqrt(static_cast<double>(n));
  const double target10 = chi_mean(10) / std::sqrt(static_cast<double>(n));
  EXPECT_NEAR(est.r_fixed, target3, 0.05 * target3 + 3.0 * est.std_error);
  EXPECT_LT(est.r_fixed, 0.7 * target10);
}

TEST(FixedPoint, Lemma1ExampleValue) {
  const auto x = gaussian_rows(500, 5, 21);
  const auto est = fixed_point_linear(x, Eigen::MatrixXd::Identity(5, 5), 0.5, 2000, 22);
  EXPECT_NEAR(est.lemma1_bound, std::sqrt(5.0 / (2.0 * 0.25 * 500.0)), 1e-12);
  // The Monte Carlo fixed point is about E chi_5 / (sqrt(N) gamma), well above
  // the bound; see the acceptance suite.
  EXPECT_NEAR(est.r_fixed, chi_mean(5) / std::sqrt(500.0) / 0.5, 0.03 * est.r_fixed + 3.0 * est.std_error);
}
