#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.h"
#include "lenbias/error.h"
#include "lenbias/metrics.h"
#include "lenbias/random.h"
#include "oracles.h"

namespace lenbias {
namespace {

SimilarityMatrix sim(const oracle::Grid& g) {
  SimilarityMatrix s;
  s.scores.resize(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(g[0].size()));
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = 0; j < g[i].size(); ++j) s.scores(i, j) = g[i][j];
  }
  return s;
}

RelevancyMatrix rel(const oracle::Grid& g) { return {sim(g).scores}; }

Eigen::RowVectorXd row(std::initializer_list<double> v) {
  Eigen::RowVectorXd r(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) r(i++) = x;
  return r;
}

TEST(RankedOrder, TiesByGalleryIndex) {
  const auto order = ranked_order(row({0.5, 0.9, 0.5, 0.1, 0.9}));
  EXPECT_EQ(order, (std::vector<Eigen::Index>{1, 4, 0, 2, 3}));
}

TEST(RankStats, PerfectRetrieval) {
  const auto s = sim({{3, 1, 0}, {0, 5, 1}, {1, 2, 9}});
  const auto rs = rank_stats(s, {0, 1, 2});
  EXPECT_EQ(rs.r1, 100.0);
  EXPECT_EQ(rs.median_rank, 1);
  EXPECT_EQ(rs.mean_rank, 1.0);
  EXPECT_EQ(rs.rsum, 300.0);
}

TEST(RankStats, LowerMedianForEvenCount) {
  // ranks 1, 2, 3, 4 -> lower median 2
  const auto s = sim({{4, 3, 2, 1}, {4, 3, 2, 1}, {4, 3, 2, 1}, {4, 3, 2, 1}});
  const auto rs = rank_stats(s, {0, 1, 2, 3});
  EXPECT_EQ(rs.ranks, (std::vector<std::int64_t>{1, 2, 3, 4}));
  EXPECT_EQ(rs.median_rank, 2);
  EXPECT_DOUBLE_EQ(rs.mean_rank, 2.5);
  EXPECT_DOUBLE_EQ(rs.r1, 25.0);
  EXPECT_DOUBLE_EQ(rs.r5, 100.0);
}

TEST(RankStats, RandomSixBySixMatchesSortOracle) {
  Rng rng(5);
  oracle::Grid g(6, oracle::Row(6));
  for (auto& r : g) {
    for (auto& x : r) x = static_cast<double>(rng.below(4));  // plenty of ties
  }
  std::vector<std::size_t> gt{0, 1, 2, 3, 4, 5};
  const auto rs = rank_stats(sim(g), {0, 1, 2, 3, 4, 5});
  for (std::size_t q = 0; q < 6; ++q) EXPECT_EQ(rs.ranks[q], oracle::position(g[q], gt[q]));
}

TEST(AveragePrecision, HandCases) {
  EXPECT_EQ(average_precision(row({0.9, 0.1, 0.2}), {0}), 1.0);
  EXPECT_EQ(average_precision(row({0.1, 0.2, 0.9}), {1}), 0.5);
  EXPECT_DOUBLE_EQ(average_precision(row({0.1, 0.9, 0.2}), {0}), 1.0 / 3.0);
  // ranking 0, 3, 1, 2: relevant items at ranks 1 and 3, then 1 and 4
  EXPECT_DOUBLE_EQ(average_precision(row({0.9, 0.5, 0.1, 0.7}), {1, 0}), 5.0 / 6.0);
  EXPECT_DOUBLE_EQ(average_precision(row({0.9, 0.5, 0.1, 0.7}), {2, 0}), 0.75);
}

TEST(Ndcg, IdealOrderingIsExactlyOne) {
  const auto s = sim({{3, 2, 1, 0}});
  const auto r = rel({{1, 0.5, 0.5, 0}});
  EXPECT_EQ(ndcg(s, r), 1.0);
}

TEST(Ndcg, ReversedThreeItemHandCase) {
  const auto s = sim({{0, 1, 2}});
  const auto r = rel({{1, 0.5, 0}});
  const double dcg = 0.0 + 0.5 / std::log2(3.0) + 1.0 / 2.0;
  const double idcg = 1.0 + 0.5 / std::log2(3.0);
  EXPECT_NEAR(ndcg(s, r), dcg / idcg, 1e-15);
  EXPECT_NEAR(ndcg(s, r), 0.6199, 5e-5);
}

TEST(Ndcg, AllZeroRelevancyIsVacuouslyOne) {
  EXPECT_EQ(ndcg(sim({{0.3, 0.1}}), rel({{0, 0}})), 1.0);
}

TEST(Ndcg, CutoffCountsOnlyTopItems) {
  const auto s = sim({{0, 1, 2}});
  const auto r = rel({{1, 0.5, 0}});
  // top-1 holds relevancy 0
  EXPECT_EQ(ndcg(s, r, 1), 0.0);
}

TEST(Map, QueryWithoutRelevantItemRejected) {
  EXPECT_THROW(mean_average_precision(sim({{1, 2}}), rel({{0.5, 0}}), 1.0), InvalidArgument);
}

oracle::Grid random_grid(Rng& rng, std::size_t rows, std::size_t cols, bool ties) {
  oracle::Grid g(rows, oracle::Row(cols));
  for (auto& r : g) {
    for (auto& x : r) x = ties ? static_cast<double>(rng.below(5)) : rng.normal();
  }
  return g;
}

// Relevancy of random class sets, with each query's own item fully relevant.
oracle::Grid random_relevancy(Rng& rng, std::size_t n) {
  std::vector<ClassSets> items(n);
  for (auto& s : items) {
    s = {{static_cast<int>(rng.below(4))}, {static_cast<int>(rng.below(3))}};
    if (rng.uniform() < 0.3) s.nouns.push_back(3);
  }
  const auto r = relevancy_matrix(items, items);
  oracle::Grid g(n, oracle::Row(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) g[i][j] = r.values(i, j);
  }
  return g;
}

TEST(Metrics, FiftyRandomInstancesMatchBruteForce) {
  Rng rng(2024);
  for (int inst = 0; inst < 50; ++inst) {
    const std::size_t n = 2 + rng.below(31);
    const auto scores = random_grid(rng, n, n, inst % 2 == 0);
    const auto relevancy = random_relevancy(rng, n);
    const std::size_t cutoff = inst % 3 == 0 ? 0 : 1 + rng.below(n);
    const auto s = sim(scores);
    const auto r = rel(relevancy);

    EXPECT_NEAR(ndcg(s, r, static_cast<Eigen::Index>(cutoff)),
                oracle::ndcg(scores, relevancy, cutoff), 1e-12);
    EXPECT_NEAR(mean_average_precision(s, r, 1.0), oracle::mean_ap(scores, relevancy, 1.0),
                1e-12);

    std::vector<std::size_t> gt(n);
    std::vector<Eigen::Index> gt_idx(n);
    for (std::size_t q = 0; q < n; ++q) gt[q] = gt_idx[q] = static_cast<Eigen::Index>(q);
    const auto want = oracle::ranks(scores, gt);
    const auto got = rank_stats(s, gt_idx);
    EXPECT_NEAR(got.r1, want.r1, 1e-12);
    EXPECT_NEAR(got.r5, want.r5, 1e-12);
    EXPECT_NEAR(got.r10, want.r10, 1e-12);
    EXPECT_EQ(got.median_rank, want.medr);
    EXPECT_NEAR(got.mean_rank, want.mnr, 1e-12);
    EXPECT_NEAR(got.rsum, want.rsum, 1e-12);

    const auto report = evaluate(s, r, {static_cast<Eigen::Index>(cutoff), 1.0});
    const auto st = oracle::transpose(scores);
    const auto rt = oracle::transpose(relevancy);
    EXPECT_NEAR(report.v2t.ndcg, oracle::ndcg(st, rt, cutoff), 1e-12);
    EXPECT_NEAR(report.v2t.map, oracle::mean_ap(st, rt, 1.0), 1e-12);
    EXPECT_EQ(report.v2t.median_rank, oracle::ranks(st, gt).medr);
    EXPECT_NEAR(report.avg_ndcg, 0.5 * (report.t2v.ndcg + report.v2t.ndcg), 1e-15);
  }
}

TEST(Metrics, FlattenScalesNdcgAndMap) {
  MetricsReport r;
  r.t2v.ndcg = 0.5;
  r.avg_map = 0.25;
  const auto rows = flatten(r);
  ASSERT_EQ(rows.size(), 18u);
  EXPECT_EQ(rows[0].direction, "T2V");
  EXPECT_EQ(rows[0].metric, "ndcg");
  EXPECT_EQ(rows[0].value, 50.0);
  EXPECT_EQ(rows.back().direction, "AVG");
  EXPECT_EQ(rows.back().value, 25.0);
}

}  // namespace
}  // namespace lenbias
