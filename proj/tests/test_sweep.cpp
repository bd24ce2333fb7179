#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "seqsel/results.hpp"
#include "seqsel/stats.hpp"
#include "seqsel/sweep.hpp"
#include "test_support.hpp"

using namespace seqsel;

namespace {

RunConfig tiny() {
  RunConfig c;
  c.spans = 2;
  c.n = 64;
  c.num_sequences = 3;
  c.nt_list = {1, 4};
  c.nst_list = {1, 2};
  c.ideal_steps_per_span = 10;
  c.channel_steps_per_span = 10;
  c.training_sequences = 1;
  c.essfm_taps = 3;
  validate(c);
  return c;
}

const std::vector<SweepRecord>& tiny_records() {
  static const auto r = run_sweep(tiny());
  return r;
}

}  // namespace

TEST(ParallelFor, VisitsEveryIndexOnce) {
  for (int workers : {1, 3, 8}) {
    std::vector<std::atomic<int>> hits(100);
    parallel_for(hits.size(), workers, [&](std::size_t i) { hits[i]++; });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
  parallel_for(0, 4, [](std::size_t) { FAIL(); });
}

TEST(ParallelFor, RethrowsLowestIndexFailure) {
  for (int workers : {1, 4}) {
    try {
      parallel_for(50, workers, [](std::size_t i) {
        if (i == 7 || i == 30) throw std::runtime_error("job " + std::to_string(i));
      });
      FAIL();
    } catch (const std::runtime_error& e) {
      EXPECT_STREQ(e.what(), "job 7");
    }
  }
}

TEST(ResolveWorkers, EnvironmentOverridesConfig) {
  EXPECT_EQ(resolve_workers(3), 3);
  EXPECT_GE(resolve_workers(0), 1);
  setenv("SEQSEL_WORKERS", "5", 1);
  EXPECT_EQ(resolve_workers(2), 5);
  unsetenv("SEQSEL_WORKERS");
}

TEST(Stats, SpearmanMatchesOracleWithTies) {
  const std::vector<double> a{3, 1, 4, 1, 5, 9, 2, 6, 5, 3};
  const std::vector<double> b{2, 7, 1, 8, 2, 8, 1, 8, 2, 8};
  EXPECT_NEAR(spearman(a, b), oracle::spearman_oracle(a, b), 1e-12);
  EXPECT_NEAR(spearman(a, a), 1.0, 1e-12);
  EXPECT_NEAR(pearson(a, a), 1.0, 1e-12);
  EXPECT_EQ(standard_error(std::vector<double>{4.0}), 0.0);
  EXPECT_NEAR(standard_error(std::vector<double>{1, 2, 3, 4}), std::sqrt(5.0 / 3.0 / 4.0), 1e-12);
}

TEST(Sweep, GridOrderAndCount) {
  const auto& r = tiny_records();
  ASSERT_EQ(r.size(), 6u);
  const std::vector<std::pair<int, int>> expect{{1, 1}, {4, 1}, {1, 2}, {4, 2}, {1, 20}, {4, 20}};
  for (std::size_t i = 0; i < r.size(); ++i) {
    EXPECT_EQ(r[i].n_tested, expect[i].first);
    EXPECT_EQ(r[i].n_steps, expect[i].second);
    EXPECT_EQ(r[i].ideal, i >= 4);
    EXPECT_EQ(r[i].sequence_se.size(), 3u);
    EXPECT_TRUE(std::isfinite(r[i].se));
    EXPECT_GT(r[i].mean_metric, 0.0);
  }
}

TEST(Sweep, CostAndLossColumnsFollowClosedForms) {
  const auto cfg = tiny();
  for (const auto& r : tiny_records()) {
    EXPECT_DOUBLE_EQ(r.cost, cost_rm_per_2d({double(r.n_tested), cfg.n_sxs, 72.0, double(r.n_steps), 1.0}));
    EXPECT_DOUBLE_EQ(r.pilot_loss, std::log2(r.n_tested) / cfg.n);  // log2 N_t pilot bits per sequence
    EXPECT_EQ(r.bound_loss, 0.0);
    EXPECT_EQ(r.seed, cfg.master_seed);
  }
}

TEST(Sweep, SingleCandidateTransmissionIgnoresMetricEngine) {
  const auto& r = tiny_records();
  EXPECT_EQ(r[0].sequence_se, r[2].sequence_se);
  EXPECT_EQ(r[0].sequence_se, r[4].sequence_se);
}

TEST(Sweep, ReproducibleAcrossRunsAndWorkers) {
  const auto cfg = tiny();
  SweepOptions opt;
  opt.workers = 3;
  const auto again = run_sweep(cfg, opt);
  EXPECT_EQ(records_to_csv(again, false), records_to_csv(tiny_records(), false));
  auto other = cfg;
  other.master_seed = 2;
  EXPECT_NE(records_to_csv(run_sweep(other), false), records_to_csv(tiny_records(), false));
}

TEST(Sweep, GridPointsAreIndependentOfTheirNeighbours) {
  auto cfg = tiny();
  cfg.nt_list = {4};
  cfg.nst_list = {2};
  cfg.ideal_ssfm = false;
  const auto alone = run_sweep(cfg);
  ASSERT_EQ(alone.size(), 1u);
  EXPECT_EQ(alone[0].sequence_se, tiny_records()[3].sequence_se);
  EXPECT_EQ(alone[0].sequence_metric, tiny_records()[3].sequence_metric);
}

TEST(Sweep, BoundModeChargesRateLoss) {
  auto cfg = tiny();
  cfg.mode = SelectionMode::bound;
  cfg.nt_list = {1, 3};
  cfg.nst_list = {1};
  cfg.ideal_ssfm = false;
  const auto r = run_sweep(cfg);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].bound_loss, 0.0);
  EXPECT_NEAR(r[1].bound_loss, std::log2(3.0) / cfg.n, 1e-15);
  EXPECT_EQ(r[1].pilot_loss, 0.0);
  EXPECT_LE(r[1].mean_metric, r[0].mean_metric);  // population member 0 is shared
}

TEST(Sweep, ReportsFailingGridPoint) {
  auto cfg = tiny();
  cfg.fit = false;
  cfg.coeff_cache.clear();
  SweepOptions opt;
  opt.on_record = [](const SweepRecord& r) {
    if (r.n_tested == 4) throw std::runtime_error("observer");
  };
  EXPECT_THROW(run_sweep(cfg, opt), std::runtime_error);
}

TEST(Results, CsvLayoutAndRoundTrip) {
  const auto csv = records_to_csv(tiny_records(), false);
  std::istringstream in(csv);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  EXPECT_EQ(lines, 7);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kCsvHeader);
  EXPECT_NE(csv.find("\n1,ideal,bs,"), std::string::npos);

  const auto back = parse_csv(csv);
  ASSERT_EQ(back.size(), tiny_records().size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    const auto& a = tiny_records()[i];
    EXPECT_EQ(back[i].n_tested, a.n_tested);
    EXPECT_EQ(back[i].ideal, a.ideal);
    EXPECT_NEAR(back[i].se, a.se, 1e-11 * std::abs(a.se));
    EXPECT_NEAR(back[i].cost, a.cost, 1e-11 * a.cost);
    EXPECT_NEAR(back[i].mean_metric, a.mean_metric, 1e-11 * a.mean_metric);
    EXPECT_EQ(back[i].wall_time_s, 0.0);
  }
  EXPECT_THROW(parse_csv("bogus\n"), ParameterError);
  EXPECT_THROW(parse_csv(std::string(kCsvHeader) + "\n1,2\n"), ParameterError);
}

TEST(Results, TimingColumnOnlyWhenRequested) {
  auto r = tiny_records();
  r[0].wall_time_s = 1.5;
  EXPECT_EQ(parse_csv(records_to_csv(r, true))[0].wall_time_s, 1.5);
  EXPECT_EQ(parse_csv(records_to_csv(r, false))[0].wall_time_s, 0.0);
}

TEST(Results, ManifestEchoesConfigAndRecords) {
  const auto cfg = tiny();
  const auto now = std::chrono::system_clock::now();
  const auto j = manifest_json(cfg, tiny_records(), {now, now}, 2);
  EXPECT_EQ(j["config"], config_to_json(cfg));
  EXPECT_EQ(j["records"].size(), 6u);
  EXPECT_EQ(j["records"][4]["N_st"], "ideal");
  EXPECT_EQ(j["workers"], 2);
  EXPECT_TRUE(j.contains("version"));
  EXPECT_EQ(j["started_utc"].get<std::string>().size(), 20u);
}

TEST(Results, EmitWritesBothFilesAndReportsBadPath) {
  const auto dir = ::testing::TempDir();
  const auto cfg = tiny();
  const auto now = std::chrono::system_clock::now();
  emit_results(tiny_records(), dir + "r.csv", dir + "m.json", cfg, {now, now}, 1);
  std::ifstream csv(dir + "r.csv");
  std::stringstream ss;
  ss << csv.rdbuf();
  EXPECT_EQ(ss.str(), records_to_csv(tiny_records(), false));
  EXPECT_TRUE(nlohmann::json::parse(std::ifstream(dir + "m.json")).is_object());
  EXPECT_THROW(emit_results(tiny_records(), "/nonexistent/dir/r.csv", dir + "m.json", cfg, {now, now}, 1),
               std::runtime_error);
  EXPECT_THROW(emit_results({}, dir + "r.csv", dir + "m.json", cfg, {now, now}, 1), ParameterError);
}
