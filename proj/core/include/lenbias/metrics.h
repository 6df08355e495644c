#ifndef LENBIAS_METRICS_H_
#define LENBIAS_METRICS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "lenbias/matrix.h"
#include "lenbias/relevance.h"

namespace lenbias {

// Ranks are 1-based. Every ranking in this module orders gallery items by
// descending score, ties broken by ascending gallery index.

// Gallery indices of one score row in ranked order.
std::vector<Eigen::Index> ranked_order(const Eigen::Ref<const Eigen::RowVectorXd>& row);

struct RankStats {
  std::vector<std::int64_t> ranks;  // rank of the ground truth, per query
  double r1 = 0.0;                  // percentages
  double r5 = 0.0;
  double r10 = 0.0;
  std::int64_t median_rank = 0;     // lower median for even counts
  double mean_rank = 0.0;
  double rsum = 0.0;
};

// gt[q] is the gallery index of query q's single ground-truth item.
RankStats rank_stats(const SimilarityMatrix& s,
                     const std::vector<Eigen::Index>& gt);

// AP of one score row; `relevant` holds gallery indices (need not be sorted).
double average_precision(const Eigen::Ref<const Eigen::RowVectorXd>& row,
                         const std::vector<Eigen::Index>& relevant);

// Mean AP over queries; relevant set of q = { j : R(q,j) >= threshold }.
// Queries without any relevant item raise InvalidArgument.
double mean_average_precision(const SimilarityMatrix& s,
                              const RelevancyMatrix& r,
                              double threshold = 1.0);

// Per-query nDCG over the first `cutoff` ranked items (0 = whole gallery).
// A query whose ideal DCG is zero scores 1.
std::vector<double> ndcg_per_query(const SimilarityMatrix& s,
                                   const RelevancyMatrix& r,
                                   Eigen::Index cutoff = 0);
double ndcg(const SimilarityMatrix& s, const RelevancyMatrix& r,
            Eigen::Index cutoff = 0);

struct DirectionMetrics {
  double ndcg = 0.0;  // [0, 1]
  double map = 0.0;   // [0, 1]
  double r1 = 0.0;
  double r5 = 0.0;
  double r10 = 0.0;
  std::int64_t median_rank = 0;
  double mean_rank = 0.0;
  double rsum = 0.0;
};

struct MetricsReport {
  DirectionMetrics t2v;
  DirectionMetrics v2t;
  double avg_ndcg = 0.0;
  double avg_map = 0.0;
};

struct EvalOptions {
  Eigen::Index ndcg_cutoff = 0;
  double map_threshold = 1.0;
};

// Evaluates a T2V matrix whose query q's ground truth is gallery item q
// (query and gallery drawn from the same clip list), in both directions.
// `relevancy` is the caption-by-video relevancy in T2V orientation.
MetricsReport evaluate(const SimilarityMatrix& t2v,
                       const RelevancyMatrix& relevancy,
                       const EvalOptions& options = {});

// Flattened (direction, metric, value) rows with ndcg/map scaled by 100.
struct MetricRow {
  std::string direction;
  std::string metric;
  double value;
};
std::vector<MetricRow> flatten(const MetricsReport& report);

}  // namespace lenbias

#endif  // LENBIAS_METRICS_H_
