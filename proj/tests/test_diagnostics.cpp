#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "mom/datagen.hpp"
#include "mom/diagnostics.hpp"
#include "test_util.hpp"

using namespace mom;

namespace {

FitResult trace_of(const std::vector<IndexList>& blocks, std::size_t n) {
  FitResult r;
  r.n_observations = n;
  for (std::size_t k = 0; k < blocks.size(); ++k) r.median_block_history.push_back({k, blocks[k]});
  r.iterations = blocks.size();
  return r;
}

}  // namespace

TEST(OutlierScores, ReferenceTallies) {
  const IndexList b0{0, 1}, b1{2, 3};
  const auto r = trace_of({b0, b1, b0, b0}, 4);
  const auto s = outlier_scores(r, 1);
  EXPECT_EQ(s.counts, (std::vector<std::size_t>{2, 2, 1, 1}));
  EXPECT_EQ(s.iterations_counted, 3u);
  EXPECT_EQ(outlier_scores(r, 3).counts, (std::vector<std::size_t>{1, 1, 0, 0}));
  const auto last = trace_of({b0, b0, b1}, 4);
  EXPECT_EQ(outlier_scores(last, 2).counts, (std::vector<std::size_t>{0, 0, 1, 1}));
}

TEST(OutlierScores, Errors) {
  FitResult empty;
  empty.n_observations = 4;
  EXPECT_THROW(outlier_scores(empty, 0), ArgumentError);
  const auto r = trace_of({{0, 1}}, 4);
  EXPECT_THROW(outlier_scores(r, 1), ArgumentError);
  const auto bad = trace_of({{0, 9}}, 4);
  EXPECT_THROW(outlier_scores(bad, 0), ArgumentError);
  EXPECT_EQ(default_burn_in(5000), 1000u);
}

TEST(OutlierScores, TotalsMatchBlockSizesOnARealFit) {
  const auto data = fixtures::gaussian_classification(103, 4, 2);
  SolverConfig cfg;
  cfg.k = 10;
  cfg.max_iter = 200;
  cfg.eps = 1e-300;
  cfg.record_trace = true;
  const auto fit = mom_fit(data, LossSpec::logistic(), cfg);
  const auto s = outlier_scores(fit, 50);
  std::size_t expected = 0;
  for (std::size_t k = 50; k < fit.median_block_history.size(); ++k) expected += fit.median_block_history[k].members.size();
  EXPECT_EQ(std::accumulate(s.counts.begin(), s.counts.end(), std::size_t{0}), expected);
  EXPECT_EQ(expected, s.iterations_counted * 10u);
  for (auto c : s.counts) EXPECT_LE(c, s.iterations_counted);
}

TEST(OutlierScores, RowPermutationPermutesCounts) {
  // Reversing the rows and relabelling every recorded block gives the
  // reversed counts.
  const auto data = fixtures::gaussian_classification(40, 3, 8);
  SolverConfig cfg;
  cfg.k = 4;
  cfg.max_iter = 60;
  cfg.eps = 1e-300;
  cfg.record_trace = true;
  const auto fit = mom_fit(data, LossSpec::logistic(), cfg);
  std::vector<IndexList> mirrored;
  for (const auto& rec : fit.median_block_history) {
    IndexList m;
    for (auto i : rec.members) m.push_back(39 - i);
    mirrored.push_back(m);
  }
  const auto a = outlier_scores(fit, 10).counts;
  auto b = outlier_scores(trace_of(mirrored, 40), 10).counts;
  std::reverse(b.begin(), b.end());
  EXPECT_EQ(a, b);
}

TEST(OutlierScores, PlantedLeveragePointsAreNeverSelected) {
  const Vector t = Vector::Ones(10);
  const auto clean = gen_logistic_student(100, 10, t, 1.0, 3);
  const auto data = plant_constant_outliers(clean, {41, 61, 65}, 10.0, t);
  SolverConfig cfg;
  cfg.k = 10;
  cfg.max_iter = 5000;
  cfg.eps = 1e-300;
  cfg.seed = 3;
  cfg.median_criterion = MedianCriterion::PlainRisk;
  cfg.record_trace = true;
  const auto fit = mom_fit(data, LossSpec::logistic(), cfg);
  const auto s = outlier_scores(fit, 1000);
  for (auto i : data.outlier_indices) EXPECT_EQ(s.counts[i], 0u) << "row " << i;
}
