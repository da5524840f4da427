#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mom/experiments.hpp"

using namespace mom;

namespace {

ExperimentSpec spec_from(const std::string& text) { return ExperimentSpec::from_config(KeyValueConfig::parse(text)); }

// Records compared on everything except wall-clock time.
void expect_same_records(const std::vector<ExperimentRecord>& a, const std::vector<ExperimentRecord>& b) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].replication, b[i].replication);
    EXPECT_EQ(a[i].setting, b[i].setting);
    EXPECT_EQ(a[i].seed, b[i].seed);
    EXPECT_EQ(a[i].estimator, b[i].estimator);
    EXPECT_EQ(a[i].k, b[i].k);
    EXPECT_EQ(a[i].error_l2, b[i].error_l2);
    EXPECT_EQ(a[i].test_error, b[i].test_error);
    EXPECT_EQ(a[i].iterations, b[i].iterations);
    EXPECT_EQ(a[i].status, b[i].status);
  }
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

const std::string kSmallCurve =
    "name = corruption_curve\n"
    "replications = 3\n"
    "seed = 17\n"
    "data.n = 200\n"
    "data.d = 5\n"
    "data.test_n = 500\n"
    "data.levels = 0, 1, 10\n"
    "solver.k = 11\n"
    "solver.max_iter = 200\n";

}  // namespace

TEST(ExperimentSpec, ParsesNamesAndDefaults) {
  for (auto kind : {ExperimentKind::CorruptionCurve, ExperimentKind::BlockStrategyCompare, ExperimentKind::Timing,
                    ExperimentKind::Prop1, ExperimentKind::Prop2, ExperimentKind::ComplexityCheck,
                    ExperimentKind::OutlierDetect}) {
    EXPECT_EQ(parse_experiment_kind(to_string(kind)), kind);
  }
  const auto s = spec_from("name = prop1\nsolver.k = 7\nsolver.blocks = fixed\n");
  EXPECT_EQ(s.label, "prop1");
  EXPECT_EQ(s.loss.family(), LossFamily::Quantile);
  EXPECT_EQ(s.solver.k, 7u);
  EXPECT_EQ(s.solver.block_strategy, BlockStrategy::FixedAtStart);
  EXPECT_EQ(s.erm.k, 1u);
  EXPECT_EQ(s.erm.block_strategy, BlockStrategy::FixedAtStart);
  EXPECT_EQ(spec_from("name = timing\n").loss.family(), LossFamily::Logistic);
}

TEST(ExperimentSpec, RejectsBadInput) {
  EXPECT_THROW(spec_from("replications = 2\n"), ArgumentError);
  EXPECT_THROW(spec_from("name = figure9\n"), ArgumentError);
  EXPECT_THROW(spec_from("name = prop1\nreplications = 0\n"), ArgumentError);
  EXPECT_THROW(spec_from("name = prop1\nk_policy = lepski\n"), ArgumentError);
  EXPECT_THROW(spec_from("name = prop1\nk_policy = cv\n"), ArgumentError);
  EXPECT_THROW(spec_from("name = prop1\nsolver.blocks = sometimes\n"), ArgumentError);
  EXPECT_THROW(spec_from("name = prop1\nsolver.k = two\n"), ArgumentError);
}

TEST(CorruptionCurve, RecordCountAndOrderInvariance) {
  auto spec = spec_from(kSmallCurve);
  const auto serial = run_experiment(spec);
  EXPECT_EQ(serial.records.size(), 3u * 3u * 2u);  // replications x levels x estimators
  EXPECT_EQ(serial.summary.size(), 3u * 2u);
  for (const auto& r : serial.records) {
    EXPECT_TRUE(r.ok()) << r.status;
    EXPECT_GE(r.test_error, 0.0);
    EXPECT_LE(r.test_error, 1.0);
    EXPECT_EQ(r.metric, r.test_error);
  }
  spec.jobs = 2;
  expect_same_records(serial.records, run_experiment(spec).records);
}

TEST(CorruptionCurve, SummaryIsRecomputableFromRecords) {
  const auto res = run_experiment(spec_from(kSmallCurve));
  for (const auto& row : res.summary) {
    std::vector<double> metric;
    for (const auto& r : res.records) {
      if (r.setting == row.setting && r.estimator == row.estimator) metric.push_back(r.metric);
    }
    ASSERT_EQ(metric.size(), row.count);
    std::sort(metric.begin(), metric.end());
    EXPECT_DOUBLE_EQ(row.metric_median, metric[1]);  // three replications
    EXPECT_DOUBLE_EQ(row.metric_q1, 0.5 * (metric[0] + metric[1]));
    EXPECT_DOUBLE_EQ(row.metric_q3, 0.5 * (metric[1] + metric[2]));
    EXPECT_TRUE(std::isnan(row.exceed_freq));
  }
}

TEST(CorruptionCurve, CrossValidatedKIsRecorded) {
  auto spec = spec_from(kSmallCurve + "k_policy = cv\ncv.grid = 1, 5, 11\ncv.folds = 3\nreplications = 1\n");
  const auto res = run_experiment(spec);
  for (const auto& r : res.records) {
    if (r.estimator == "mom") EXPECT_TRUE(r.k == 1 || r.k == 5 || r.k == 11) << r.k;
    if (r.estimator == "erm") EXPECT_EQ(r.k, 1u);
  }
}

TEST(CorruptionCurve, TooManyOutliersIsAnArgumentError) {
  EXPECT_THROW(run_experiment(spec_from(kSmallCurve + "data.levels = 0, 201\n")), ArgumentError);
}

TEST(BlockStrategyCompare, BothStrategiesPerReplication) {
  const auto res = run_experiment(spec_from(
      "name = block_compare\nreplications = 2\ndata.n = 200\ndata.d = 5\ndata.test_n = 200\nsolver.k = 10\n"
      "solver.max_iter = 100\n"));
  ASSERT_EQ(res.records.size(), 4u);
  EXPECT_NO_THROW(res.row("clean", "mom_fixed"));
  EXPECT_NO_THROW(res.row("clean", "mom_resample"));
}

TEST(Prop1Runner, CleanDataErmIsAccurate) {
  // v_scale = 0: noiseless, uncontaminated design.
  const auto res = run_experiment(spec_from(
      "name = prop1\nreplications = 3\ndata.v_scale = 0\nerm.step = constant\nerm.step_constant = 0.01\n"
      "erm.max_iter = 20000\nerm.eps = 1e-12\n"));
  for (const auto& r : res.records) {
    EXPECT_TRUE(r.ok()) << r.status;
    EXPECT_DOUBLE_EQ(r.reference, 0.25);
    if (r.estimator == "erm") EXPECT_LE(r.metric, 0.1);
  }
}

TEST(Prop1Runner, DefaultBlockCountIsOddAndNearD) {
  const auto res = run_experiment(spec_from("name = prop1\nreplications = 1\ndata.d = 10\nsolver.max_iter = 10\n"));
  for (const auto& r : res.records) {
    if (r.estimator == "mom") EXPECT_EQ(r.k, 11u);
  }
  const auto odd = run_experiment(spec_from("name = prop1\nreplications = 1\ndata.d = 7\nsolver.max_iter = 10\n"));
  for (const auto& r : odd.records) {
    if (r.estimator == "mom") EXPECT_EQ(r.k, 9u);
  }
}

TEST(Prop2Runner, ErmErrorIsShiftInvariant) {
  const std::string base = "name = prop2\nreplications = 4\ndata.n = 500\ndata.relax = true\nseed = 3\nsolver.max_iter = 50\n";
  const auto a = run_experiment(spec_from(base + "data.t_star = 0\n"));
  const auto b = run_experiment(spec_from(base + "data.t_star = 3.5\n"));
  ASSERT_EQ(a.records.size(), 8u);
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    if (a.records[i].estimator != "erm_exact") continue;
    EXPECT_NEAR(a.records[i].error_l2, b.records[i].error_l2, 1e-9);
    EXPECT_DOUBLE_EQ(a.records[i].reference, std::sqrt(10.0 / 500.0) / 5.0);
  }
  const auto& row = a.row("x=10", "erm_exact");
  EXPECT_EQ(row.count, 4u);
  EXPECT_FALSE(std::isnan(row.exceed_freq));
}

TEST(Timing, OneBlockCostsTheSameAsErm) {
  const auto res = run_experiment(spec_from(
      "name = timing\nreplications = 3\ndata.n = 2000\ndata.d = 20\ntiming.k_grid = 1, 20\ntiming.iterations = 30\n"));
  ASSERT_EQ(res.records.size(), 3u * 3u);
  const double erm = res.row("erm", "erm").runtime_ms_median;
  const double one = res.row("K=1", "mom").runtime_ms_median;
  EXPECT_GT(erm, 0.0);
  EXPECT_GE(one / erm, 0.5);
  EXPECT_LE(one / erm, 2.0);
  for (const auto& r : res.records) EXPECT_EQ(r.iterations, 30u);
}

TEST(ComplexityCheck, BoundRowsMatchTheClosedForm) {
  const auto res = run_experiment(spec_from(
      "name = complexity_check\ncomplexity.d = 4\ncomplexity.n = 100, 400\ncomplexity.rank = 0, 2, 9\n"
      "complexity.gamma = 0.5\ncomplexity.n_mc = 200\n"));
  // rank 9 exceeds d and is skipped.
  ASSERT_EQ(res.records.size(), 2u * 2u * 2u);
  const auto& r = res.row("d=4 n=400 rank=2", "lemma1");
  EXPECT_NEAR(r.metric_median, std::sqrt(2.0 / (2.0 * 0.25 * 400.0)), 1e-12);
  EXPECT_GT(res.row("d=4 n=100 rank=4", "monte_carlo").metric_median, 0.0);
}

TEST(OutlierDetect, ReportsTheWorstPlantedScore) {
  const auto res = run_experiment(
      spec_from("name = outlier_detect\nreplications = 2\nsolver.max_iter = 300\noutliers.burn_in = 100\n"));
  ASSERT_EQ(res.records.size(), 2u);
  for (const auto& r : res.records) {
    EXPECT_TRUE(r.ok()) << r.status;
    EXPECT_EQ(r.setting, "planted=3");
    EXPECT_GE(r.metric, 0.0);
    EXPECT_LE(r.metric, 200.0);
    EXPECT_EQ(r.reference, 1.0);
  }
}

TEST(WriteResult, CsvRoundTripsTheSummary) {
  const auto dir = std::filesystem::temp_directory_path() / "mom_experiment_csv";
  std::filesystem::remove_all(dir);
  auto spec = spec_from(kSmallCurve + "label = small\n");
  const auto res = run_experiment(spec);
  write_result(res, dir.string());
  const auto records = read_csv((dir / "small_records.csv").string());
  const auto summary = read_csv((dir / "small_summary.csv").string());
  ASSERT_EQ(records.size(), res.records.size() + 1);
  ASSERT_EQ(summary.size(), res.summary.size() + 1);
  EXPECT_EQ(records[0][0], "replication");
  for (std::size_t i = 1; i < records.size(); ++i) EXPECT_EQ(records[i].size(), records[0].size());
  for (std::size_t i = 1; i < summary.size(); ++i) {
    ASSERT_EQ(summary[i].size(), summary[0].size());
    // Median of the metric column recomputed from the records file.
    std::vector<double> metric;
    for (std::size_t j = 1; j < records.size(); ++j) {
      if (records[j][1] == summary[i][0] && records[j][3] == summary[i][1]) metric.push_back(std::stod(records[j][8]));
    }
    std::sort(metric.begin(), metric.end());
    EXPECT_NEAR(std::stod(summary[i][4]), metric[metric.size() / 2], 1e-12);
    EXPECT_EQ(summary[i][7], "nan");
  }
  std::filesystem::remove_all(dir);
}
