#ifndef LENBIAS_TESTS_SUPPORT_ORACLES_H_
#define LENBIAS_TESTS_SUPPORT_ORACLES_H_

#include <cstdint>
#include <vector>

// Deliberately naive reference implementations over plain vectors. They share
// no code with the library: positions come from pairwise comparison counts
// instead of sorting.
namespace lenbias::oracle {

using Row = std::vector<double>;
using Grid = std::vector<Row>;

// 1-based position of item j: one plus the number of items that beat it
// (higher score, or equal score and a smaller index).
std::int64_t position(const Row& scores, std::size_t j);

double set_iou(const std::vector<int>& a, const std::vector<int>& b);

// Ranked nDCG of one row, first `cutoff` positions (0 = all).
double ndcg_row(const Row& scores, const Row& relevancy, std::size_t cutoff = 0);
double ndcg(const Grid& scores, const Grid& relevancy, std::size_t cutoff = 0);

// AP with binary relevance rel[j] >= threshold.
double ap_row(const Row& scores, const Row& relevancy, double threshold);
double mean_ap(const Grid& scores, const Grid& relevancy, double threshold);

struct Ranks {
  double r1 = 0, r5 = 0, r10 = 0;
  std::int64_t medr = 0;
  double mnr = 0;
  double rsum = 0;
};

// Ground truth of query q is gallery item gt[q].
Ranks ranks(const Grid& scores, const std::vector<std::size_t>& gt);

Grid transpose(const Grid& g);

}  // namespace lenbias::oracle

#endif  // LENBIAS_TESTS_SUPPORT_ORACLES_H_
