#include <gtest/gtest.h>

#include "fixtures.h"
#include "lenbias/audit.h"
#include "lenbias/error.h"
#include "lenbias/synth.h"

namespace lenbias {
namespace {

using testing::class_clips;
using testing::make_clip;
using testing::make_manifest;

Manifest lengths_manifest(const std::vector<std::int64_t>& lengths) {
  return make_manifest(class_clips("c", 0, 0, lengths));
}

TEST(ClassFrameStats, AveragesAndDiscrepancy) {
  auto train = make_manifest({make_clip("a", {0}, {0}, 100), make_clip("b", {0}, {0}, 200),
                              make_clip("c", {1}, {1}, 50)});
  auto test = make_manifest({make_clip("t", {0}, {0}, 300, 0, 1, SplitTag::kTest)});
  const auto stats = class_frame_stats(train, test);
  ASSERT_EQ(stats.size(), 2u);
  EXPECT_EQ(stats[0].class_key, (ClassKey{0, 0}));
  EXPECT_EQ(*stats[0].train_avg_len, 150.0);
  EXPECT_EQ(*stats[0].test_avg_len, 300.0);
  EXPECT_EQ(*stats[0].discrepancy, 150.0);
  EXPECT_TRUE(stats[0].is_common());

  EXPECT_EQ(stats[1].class_key, (ClassKey{1, 1}));
  EXPECT_EQ(stats[1].test_count, 0);
  EXPECT_FALSE(stats[1].discrepancy.has_value());
  EXPECT_FALSE(stats[1].is_common());
}

TEST(ClassFrameStats, MultiLabelClipCountsForEveryPair) {
  auto train = make_manifest({make_clip("a", {0, 1}, {2}, 90)});
  const auto idx = index_stats(class_frame_stats(train, Manifest{}));
  EXPECT_EQ(idx.at({0, 2}).train_count, 1);
  EXPECT_EQ(idx.at({1, 2}).train_count, 1);
}

TEST(ClassFrameStats, InjectedShiftRecoveredOnSynthData) {
  // Per-class gaps are noisy (about 38 frames of spread with 20 + 6 clips), so
  // the shift is checked on the mean over all 50 classes.
  GenConfig cfg;
  cfg.bias_shift = 120.0;
  cfg.seed = 4;
  const auto data = generate(cfg);
  int common = 0;
  double sum = 0.0;
  for (const auto& s : class_frame_stats(data.train, data.test)) {
    if (!s.is_common()) continue;
    ++common;
    sum += *s.discrepancy;
  }
  ASSERT_EQ(common, cfg.pairs_per_split);
  EXPECT_NEAR(sum / common, 120.0, 20.0);
}

std::vector<ClassStats> stats_with(const std::vector<double>& discrepancies) {
  std::vector<ClassStats> out;
  int k = 0;
  for (double d : discrepancies) {
    ClassStats s;
    s.class_key = {k++, 0};
    s.train_count = s.test_count = 1;
    s.train_avg_len = 100.0;
    s.test_avg_len = 100.0 + d;
    s.discrepancy = d;
    out.push_back(s);
  }
  return out;
}

TEST(DiscrepancySeries, SortedWithExceedCounts) {
  const auto series = discrepancy_series(stats_with({10, -300, 70}));
  EXPECT_EQ(series.values, (std::vector<double>{300, 70, 10}));
  EXPECT_EQ(series.thresholds, (std::vector<double>{60, 200}));
  EXPECT_EQ(series.exceed_counts, (std::vector<std::int64_t>{2, 1}));
}

TEST(DiscrepancySeries, AllZeroExceedsNothing) {
  const auto series = discrepancy_series(stats_with({0, 0, 0}));
  EXPECT_EQ(series.exceed_counts, (std::vector<std::int64_t>{0, 0}));
}

TEST(DistributionSummary, QuartilesOfOneToEight) {
  const auto s = distribution_summary(lengths_manifest({8, 1, 2, 3, 4, 5, 6, 7}));
  EXPECT_EQ(s.min, 1);
  EXPECT_EQ(s.q1, 2.5);
  EXPECT_EQ(s.median, 4.5);
  EXPECT_EQ(s.q3, 6.5);
  EXPECT_EQ(s.max, 8);
  EXPECT_EQ(s.mean, 4.5);
  EXPECT_TRUE(s.outlier_ids.empty());
}

TEST(DistributionSummary, OddCountExcludesMedianFromHalves) {
  const auto s = distribution_summary(lengths_manifest({1, 2, 3, 4, 5, 6, 7}));
  EXPECT_EQ(s.q1, 2);
  EXPECT_EQ(s.median, 4);
  EXPECT_EQ(s.q3, 6);
}

TEST(DistributionSummary, SingleClip) {
  const auto s = distribution_summary(lengths_manifest({50}));
  for (double v : {s.min, s.q1, s.median, s.q3, s.max}) EXPECT_EQ(v, 50);
  EXPECT_TRUE(s.outlier_ids.empty());
}

TEST(DistributionSummary, IqrOutlier) {
  const auto s = distribution_summary(
      lengths_manifest({10, 10, 10, 10, 10, 10, 10, 10, 10, 1000}));
  EXPECT_EQ(s.outlier_ids, (std::vector<std::string>{"c9"}));
}

TEST(DistributionSummary, EmptyRejected) {
  EXPECT_THROW(distribution_summary(Manifest{}), InvalidArgument);
}

TEST(QueryDiagnostics, RankAndTopAverage) {
  auto m = make_manifest({make_clip("a", {0}, {0}, 10), make_clip("b", {0}, {0}, 20),
                          make_clip("c", {0}, {0}, 60)});
  SimilarityMatrix s;
  s.scores.resize(3, 3);
  s.scores << 0.1, 0.9, 0.5,  //
      0.2, 0.8, 0.2,          //
      0.7, 0.7, 0.1;
  const auto d = query_diagnostics(s, m, m, 2);
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d[0].gt_rank, 3);
  EXPECT_EQ(d[0].top_avg_len, 40.0);  // b, c
  EXPECT_EQ(d[1].gt_rank, 1);
  EXPECT_EQ(d[2].gt_rank, 3);
  EXPECT_EQ(d[2].top_avg_len, 15.0);  // a, b tie broken by index
  EXPECT_THROW(query_diagnostics(s, m, m, 0), InvalidArgument);
}

// Class (0,0) with 12 training clips, and the hand-set averages of a typical
// failure case: top retrievals near the training average, far from the test
// average.
struct SuspectFixture {
  Manifest train = make_manifest(class_clips("tr", 0, 0, std::vector<std::int64_t>(12, 177)));
  std::map<ClassKey, ClassStats> stats;

  SuspectFixture() {
    ClassStats s;
    s.class_key = {0, 0};
    s.train_count = 12;
    s.test_count = 3;
    s.train_avg_len = 177.1;
    s.test_avg_len = 305.5;
    s.discrepancy = 305.5 - 177.1;
    stats[s.class_key] = s;
  }

  QueryDiagnostic query(std::int64_t rank, double top_avg) const {
    return {"q", {{0}, {0}}, rank, top_avg};
  }
};

TEST(SuspectedBiasCases, TypicalFailureKept) {
  SuspectFixture f;
  EXPECT_EQ(suspected_bias_cases({f.query(169, 147.4)}, f.train, f.stats),
            (std::vector<std::string>{"q"}));
}

TEST(SuspectedBiasCases, GoodRankExcluded) {
  SuspectFixture f;
  EXPECT_TRUE(suspected_bias_cases({f.query(3, 147.4)}, f.train, f.stats).empty());
}

TEST(SuspectedBiasCases, SmallDiscrepancyExcluded) {
  SuspectFixture f;
  f.stats[{0, 0}].test_avg_len = 197.1;
  f.stats[{0, 0}].discrepancy = 20.0;
  EXPECT_TRUE(suspected_bias_cases({f.query(169, 147.4)}, f.train, f.stats).empty());
  SuspectFilter off;
  off.require_disc = false;
  EXPECT_EQ(suspected_bias_cases({f.query(169, 147.4)}, f.train, f.stats, off).size(), 1u);
}

TEST(SuspectedBiasCases, TailClassExcluded) {
  SuspectFixture f;
  SuspectFilter filter;
  filter.tail_threshold = 13;  // 12 training clips is now the tail
  EXPECT_TRUE(suspected_bias_cases({f.query(169, 147.4)}, f.train, f.stats, filter).empty());
}

TEST(SuspectedBiasCases, TopCloserToTestExcluded) {
  SuspectFixture f;
  EXPECT_TRUE(suspected_bias_cases({f.query(169, 290.0)}, f.train, f.stats).empty());
}

TEST(SuspectedBiasCases, UnknownClassRejected) {
  SuspectFixture f;
  QueryDiagnostic q{"q", {{5}, {5}}, 100, 10.0};
  EXPECT_THROW(suspected_bias_cases({q}, f.train, f.stats), InvalidArgument);
}

TEST(AuditReport, WritesFiles) {
  testing::TempDir dir;
  const auto m = lengths_manifest({1, 2, 3});
  const auto stats = stats_with({5, 80});
  write_audit_report(stats, distribution_summary(m), distribution_summary(m),
                     discrepancy_series(stats), dir / "out");
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "report.json"));
  const auto csv = testing::read_file(dir / "out" / "series.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "rank,abs_discrepancy");
}

}  // namespace
}  // namespace lenbias
