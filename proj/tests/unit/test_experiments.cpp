#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "raf/errors.hpp"
#include "raf/experiments.hpp"

namespace {

namespace ex = raf::experiments;

TEST(ModeCoverage, Examples) {
  const std::vector<double> modes{0.0, 4.0};
  const std::vector<double> zeros(10, 0.0);
  EXPECT_EQ(ex::mode_coverage(zeros, modes, 0.5), (std::vector<double>{1.0, 0.0}));
  std::vector<double> split(10, 0.0);
  for (std::size_t i = 5; i < 10; ++i) split[i] = 4.0;
  EXPECT_EQ(ex::mode_coverage(split, modes, 0.5), (std::vector<double>{0.5, 0.5}));
  EXPECT_THROW(ex::mode_coverage(split, modes, 0.0), raf::ContractViolation);
}

TEST(ModeCoverage, UniformMonteCarlo) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 5.0);
  std::vector<double> s(200000);
  for (double& v : s) v = u(rng);
  const auto c = ex::mode_coverage(s, std::vector<double>{0.0, 4.0}, 0.5);
  // Binomial standard error is about 8e-4.
  EXPECT_NEAR(c[0], 1.0 / 6.0, 5e-3);
  EXPECT_NEAR(c[1], 1.0 / 6.0, 5e-3);
}

TEST(StepsToBimodality, NeedsSustainedCoverage) {
  ex::TrainTrace t;
  const std::vector<std::vector<double>> cov{{0.9, 0.0}, {0.5, 0.3}, {0.5, 0.1}, {0.4, 0.3},
                                             {0.4, 0.25}, {0.5, 0.5}};
  for (std::size_t i = 0; i < cov.size(); ++i) {
    ex::ToyTraceRow r;
    r.step = static_cast<long>(i * 25);
    r.coverage = cov[i];
    t.rows.push_back(r);
  }
  EXPECT_EQ(ex::steps_to_bimodality(t, 0.2, 3), 75);
  EXPECT_EQ(ex::steps_to_bimodality(t, 0.2, 1), 25);
  EXPECT_EQ(ex::steps_to_bimodality(t, 0.6, 1), std::nullopt);
}

ex::ToyConfig small_toy() {
  ex::ToyConfig c;
  c.steps = 120;
  c.batch = 32;
  c.eval_samples = 64;
  c.log_every = 20;
  return c;
}

TEST(Toy1d, ZeroStepsKeepsInitialSnapshot) {
  ex::ToyConfig c = small_toy();
  c.steps = 0;
  const auto t = ex::run_toy1d(c);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0].step, 0);
  EXPECT_EQ(t.rows[0].samples.size(), c.eval_samples);
  for (double v : t.rows[0].samples) EXPECT_TRUE(std::isfinite(v));
  EXPECT_FALSE(t.diverged);
}

TEST(Toy1d, DeterministicAndMonotoneSnapshots) {
  const ex::ToyConfig c = small_toy();
  const auto a = ex::run_toy1d(c), b = ex::run_toy1d(c);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].samples, b.rows[i].samples);
    EXPECT_EQ(a.rows[i].disc_loss, b.rows[i].disc_loss);
    if (i > 0) EXPECT_GT(a.rows[i].step, a.rows[i - 1].step);
  }
  EXPECT_EQ(a.rows.back().step, c.steps);
}

TEST(Toy1d, SoftplusGapsNonNegativeIdentityMayNot) {
  ex::ToyConfig c = small_toy();
  for (const auto& r : ex::run_toy1d(c).rows) {
    EXPECT_GE(r.gap_min, 0.0);
    EXPECT_TRUE(std::isfinite(r.disc_loss) && std::isfinite(r.gen_loss));
  }
  c.transform = raf::objectives::GapTransform::kIdentity;
  const auto t = ex::run_toy1d(c);
  EXPECT_FALSE(t.diverged);
  double lowest = 0.0;
  for (std::size_t i = 1; i < t.rows.size(); ++i) lowest = std::min(lowest, t.rows[i].gap_min);
  EXPECT_LT(lowest, 0.0);
}

TEST(Toy1d, EveryObjectiveRuns) {
  for (ex::Objective o : ex::all_objectives()) {
    ex::ToyConfig c = small_toy();
    c.objective = o;
    c.steps = 30;
    const auto t = ex::run_toy1d(c);
    EXPECT_FALSE(t.diverged) << ex::objective_name(o);
    EXPECT_TRUE(std::isfinite(ex::toy_final_quality(t, c))) << ex::objective_name(o);
    EXPECT_EQ(ex::parse_objective(ex::objective_name(o)), o);
  }
  EXPECT_THROW(ex::parse_objective("wgan"), raf::ConfigError);
}

TEST(Toy1d, InvalidConfigs) {
  ex::ToyConfig c = small_toy();
  c.modes = {1.0, 1.0};
  EXPECT_THROW(ex::run_toy1d(c), raf::ConfigError);
  c = small_toy();
  c.gp_interval = 0;
  EXPECT_THROW(ex::run_toy1d(c), raf::ConfigError);
}

ex::SegmentStudyConfig small_study() {
  ex::SegmentStudyConfig c;
  c.full_length = 8192;
  c.segment_sizes = {2048, 4096};
  c.corpus_pairs = 2;
  c.segments_per_size = 2;
  return c;
}

TEST(SegmentStudy, IdenticalPairsGiveZeroError) {
  ex::SegmentStudyConfig c = small_study();
  c.identical_pairs = true;
  const auto r = ex::run_segment_size_study(c);
  ASSERT_EQ(r.errors.size(), 2u);
  for (const auto& row : r.errors)
    for (double e : row) EXPECT_EQ(e, 0.0);
}

TEST(SegmentStudy, FullLengthSegmentHasNoError) {
  ex::SegmentStudyConfig c = small_study();
  c.segment_sizes = {c.full_length};
  const auto r = ex::run_segment_size_study(c);
  for (double e : r.errors[0]) EXPECT_NEAR(e, 0.0, 1e-12);
}

TEST(SegmentStudy, OversizedSegmentRejected) {
  ex::SegmentStudyConfig c = small_study();
  c.segment_sizes = {4096, 16384};
  EXPECT_THROW(ex::run_segment_size_study(c), raf::ContractViolation);
}

TEST(SegmentStudy, ThreadCountDoesNotChangeResults) {
  ex::SegmentStudyConfig c = small_study();
  const auto a = ex::run_segment_size_study(c);
  c.threads = 3;
  const auto b = ex::run_segment_size_study(c);
  EXPECT_EQ(a.errors, b.errors);
}

ex::WaveToyConfig small_wave() {
  ex::WaveToyConfig c;
  c.steps = 0;
  c.segment_size = 2048;
  c.train_examples = 4;
  c.heldout_examples = 4;
  c.batch = 2;
  c.log_every = 5;
  return c;
}

TEST(WaveToy, ZeroStepsKeepsQuality) {
  const auto r = ex::run_wave_toy(small_wave());
  ASSERT_EQ(r.component_ids.size(), 3u);
  EXPECT_EQ(r.final_quality, r.initial_quality);
  for (double q : r.initial_quality) EXPECT_GT(q, 0.0);
  EXPECT_GE(r.heldout_disc_loss, 0.0);
}

TEST(WaveToy, ShortRunIsDeterministic) {
  ex::WaveToyConfig c = small_wave();
  c.steps = 15;
  const auto a = ex::run_wave_toy(c), b = ex::run_wave_toy(c);
  EXPECT_FALSE(a.diverged);
  EXPECT_EQ(a.final_quality, b.final_quality);
  EXPECT_EQ(a.gap_quality_correlation, b.gap_quality_correlation);
  EXPECT_GE(a.heldout_disc_loss, 0.0);
  ASSERT_FALSE(a.trace.empty());
  for (const auto& row : a.trace) EXPECT_GE(row.gap_min, 0.0);
}

TEST(Compare, SingleCellGivesOneRow) {
  ex::CompareConfig c;
  c.objectives = {ex::Objective::kRaf};
  c.long_settings = {false};
  c.gp_settings = {true};
  c.seeds = {0, 1};
  c.toy = small_toy();
  const auto rows = ex::run_objective_comparison(c);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].runs, 2u);
  EXPECT_TRUE(std::isfinite(rows[0].median_final_quality));
}

TEST(Compare, GpSwitchAndThreadsAreStable) {
  ex::CompareConfig c;
  c.objectives = {ex::Objective::kRaf};
  c.long_settings = {false};
  c.gp_settings = {false, true};
  c.seeds = {0, 1, 2};
  c.toy = small_toy();
  const auto a = ex::run_objective_comparison(c);
  c.threads = 4;
  const auto b = ex::run_objective_comparison(c);
  ASSERT_EQ(a.size(), 2u);
  ASSERT_EQ(b.size(), 2u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].gp, b[i].gp);
    EXPECT_EQ(a[i].diverged, 0u);
    EXPECT_TRUE(std::isfinite(a[i].median_final_quality));
    EXPECT_EQ(a[i].median_final_quality, b[i].median_final_quality);
    EXPECT_EQ(a[i].bimodal_runs, b[i].bimodal_runs);
  }
  EXPECT_NE(a[0].gp, a[1].gp);
}

TEST(Compare, EmptyListsRejected) {
  ex::CompareConfig c;
  c.objectives.clear();
  EXPECT_THROW(ex::run_objective_comparison(c), raf::ConfigError);
}

TEST(ParallelFor, CoversEveryIndexOnce) {
  std::vector<int> hits(100, 0);
  ex::parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(ex::parallel_for(10, 3,
                                [](std::size_t i) {
                                  if (i == 7) throw raf::Error("boom");
                                }),
               raf::Error);
}

}  // namespace
