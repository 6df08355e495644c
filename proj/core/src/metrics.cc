#include "lenbias/metrics.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "lenbias/error.h"

namespace lenbias {

namespace {

void check_shapes(const SimilarityMatrix& s, const RelevancyMatrix& r) {
  if (s.scores.rows() != r.values.rows() || s.scores.cols() != r.values.cols()) {
    throw InvalidArgument("similarity and relevancy matrices differ in shape");
  }
}

double dcg(const std::vector<double>& gains, Eigen::Index cutoff) {
  double sum = 0.0;
  const auto n = std::min<Eigen::Index>(cutoff, static_cast<Eigen::Index>(gains.size()));
  for (Eigen::Index j = 0; j < n; ++j) {
    sum += gains[static_cast<std::size_t>(j)] / std::log2(static_cast<double>(j) + 2.0);
  }
  return sum;
}

DirectionMetrics direction_metrics(const SimilarityMatrix& s,
                                   const RelevancyMatrix& r,
                                   const EvalOptions& options) {
  std::vector<Eigen::Index> gt(static_cast<std::size_t>(s.n_queries()));
  std::iota(gt.begin(), gt.end(), Eigen::Index{0});
  const RankStats rs = rank_stats(s, gt);
  DirectionMetrics m;
  m.ndcg = ndcg(s, r, options.ndcg_cutoff);
  m.map = mean_average_precision(s, r, options.map_threshold);
  m.r1 = rs.r1;
  m.r5 = rs.r5;
  m.r10 = rs.r10;
  m.median_rank = rs.median_rank;
  m.mean_rank = rs.mean_rank;
  m.rsum = rs.rsum;
  return m;
}

}  // namespace

std::vector<Eigen::Index> ranked_order(
    const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(row.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return row(a) > row(b); });
  return order;
}

RankStats rank_stats(const SimilarityMatrix& s,
                     const std::vector<Eigen::Index>& gt) {
  if (static_cast<Eigen::Index>(gt.size()) != s.n_queries()) {
    throw InvalidArgument("rank_stats: one ground-truth index per query required");
  }
  if (gt.empty()) throw InvalidArgument("rank_stats: no queries");
  RankStats out;
  out.ranks.reserve(gt.size());
  for (Eigen::Index q = 0; q < s.n_queries(); ++q) {
    const Eigen::Index target = gt[static_cast<std::size_t>(q)];
    if (target < 0 || target >= s.n_gallery()) {
      throw InvalidArgument("rank_stats: ground-truth index out of range");
    }
    const auto order = ranked_order(s.scores.row(q));
    const auto pos = std::find(order.begin(), order.end(), target) - order.begin();
    out.ranks.push_back(static_cast<std::int64_t>(pos) + 1);
  }
  const double n = static_cast<double>(out.ranks.size());
  auto pct_within = [&](std::int64_t k) {
    const auto hits = std::count_if(out.ranks.begin(), out.ranks.end(),
                                    [k](std::int64_t r) { return r <= k; });
    return 100.0 * static_cast<double>(hits) / n;
  };
  out.r1 = pct_within(1);
  out.r5 = pct_within(5);
  out.r10 = pct_within(10);
  out.rsum = out.r1 + out.r5 + out.r10;
  std::vector<std::int64_t> sorted = out.ranks;
  std::sort(sorted.begin(), sorted.end());
  out.median_rank = sorted[(sorted.size() - 1) / 2];
  out.mean_rank =
      static_cast<double>(std::accumulate(sorted.begin(), sorted.end(), std::int64_t{0})) / n;
  return out;
}

double average_precision(const Eigen::Ref<const Eigen::RowVectorXd>& row,
                         const std::vector<Eigen::Index>& relevant) {
  if (relevant.empty()) throw InvalidArgument("average_precision: empty relevant set");
  std::vector<char> is_rel(static_cast<std::size_t>(row.size()), 0);
  for (Eigen::Index j : relevant) {
    if (j < 0 || j >= row.size()) {
      throw InvalidArgument("average_precision: relevant index out of range");
    }
    is_rel[static_cast<std::size_t>(j)] = 1;
  }
  const auto n_rel = std::count(is_rel.begin(), is_rel.end(), 1);
  const auto order = ranked_order(row);
  double sum = 0.0;
  std::int64_t hits = 0;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    if (is_rel[static_cast<std::size_t>(order[pos])]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(pos + 1);
    }
  }
  return sum / static_cast<double>(n_rel);
}

double mean_average_precision(const SimilarityMatrix& s,
                              const RelevancyMatrix& r, double threshold) {
  check_shapes(s, r);
  if (s.n_queries() == 0) throw InvalidArgument("mAP: no queries");
  double sum = 0.0;
  std::vector<Eigen::Index> relevant;
  for (Eigen::Index q = 0; q < s.n_queries(); ++q) {
    relevant.clear();
    for (Eigen::Index j = 0; j < s.n_gallery(); ++j) {
      if (r.values(q, j) >= threshold) relevant.push_back(j);
    }
    sum += average_precision(s.scores.row(q), relevant);
  }
  return sum / static_cast<double>(s.n_queries());
}

std::vector<double> ndcg_per_query(const SimilarityMatrix& s,
                                   const RelevancyMatrix& r,
                                   Eigen::Index cutoff) {
  check_shapes(s, r);
  if (cutoff < 0 || cutoff > s.n_gallery()) {
    throw InvalidArgument("ndcg: cutoff exceeds gallery size");
  }
  if (cutoff == 0) cutoff = s.n_gallery();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(s.n_queries()));
  std::vector<double> gains(static_cast<std::size_t>(s.n_gallery()));
  for (Eigen::Index q = 0; q < s.n_queries(); ++q) {
    const auto order = ranked_order(s.scores.row(q));
    for (std::size_t j = 0; j < order.size(); ++j) gains[j] = r.values(q, order[j]);
    const double actual = dcg(gains, cutoff);
    std::sort(gains.begin(), gains.end(), std::greater<>());
    const double ideal = dcg(gains, cutoff);
    out.push_back(ideal > 0.0 ? actual / ideal : 1.0);
  }
  return out;
}

double ndcg(const SimilarityMatrix& s, const RelevancyMatrix& r,
            Eigen::Index cutoff) {
  const auto per_query = ndcg_per_query(s, r, cutoff);
  if (per_query.empty()) throw InvalidArgument("ndcg: no queries");
  return std::accumulate(per_query.begin(), per_query.end(), 0.0) /
         static_cast<double>(per_query.size());
}

MetricsReport evaluate(const SimilarityMatrix& t2v,
                       const RelevancyMatrix& relevancy,
                       const EvalOptions& options) {
  if (t2v.orientation != Orientation::kT2V) {
    throw InvalidArgument("evaluate expects a T2V similarity matrix");
  }
  if (t2v.n_queries() != t2v.n_gallery()) {
    throw InvalidArgument("evaluate expects paired queries and gallery (square matrix)");
  }
  MetricsReport out;
  out.t2v = direction_metrics(t2v, relevancy, options);
  RelevancyMatrix rt;
  rt.values = relevancy.values.transpose();
  out.v2t = direction_metrics(t2v.transposed(), rt, options);
  out.avg_ndcg = 0.5 * (out.t2v.ndcg + out.v2t.ndcg);
  out.avg_map = 0.5 * (out.t2v.map + out.v2t.map);
  return out;
}

std::vector<MetricRow> flatten(const MetricsReport& report) {
  std::vector<MetricRow> rows;
  auto add = [&](const char* dir, const DirectionMetrics& m) {
    rows.push_back({dir, "ndcg", 100.0 * m.ndcg});
    rows.push_back({dir, "map", 100.0 * m.map});
    rows.push_back({dir, "r1", m.r1});
    rows.push_back({dir, "r5", m.r5});
    rows.push_back({dir, "r10", m.r10});
    rows.push_back({dir, "medr", static_cast<double>(m.median_rank)});
    rows.push_back({dir, "mnr", m.mean_rank});
    rows.push_back({dir, "rsum", m.rsum});
  };
  add("T2V", report.t2v);
  add("V2T", report.v2t);
  rows.push_back({"AVG", "ndcg", 100.0 * report.avg_ndcg});
  rows.push_back({"AVG", "map", 100.0 * report.avg_map});
  return rows;
}

}  // namespace lenbias
