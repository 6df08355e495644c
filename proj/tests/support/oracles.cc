#include "oracles.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

namespace lenbias::oracle {

std::int64_t position(const Row& scores, std::size_t j) {
  std::int64_t ahead = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] > scores[j] || (scores[i] == scores[j] && i < j)) ++ahead;
  }
  return ahead + 1;
}

double set_iou(const std::vector<int>& a, const std::vector<int>& b) {
  std::set<int> sa(a.begin(), a.end());
  std::set<int> sb(b.begin(), b.end());
  std::set<int> uni = sa;
  uni.insert(sb.begin(), sb.end());
  double inter = 0;
  for (int x : sa) inter += sb.count(x);
  return inter / static_cast<double>(uni.size());
}

double ndcg_row(const Row& scores, const Row& relevancy, std::size_t cutoff) {
  const std::size_t n = scores.size();
  const std::size_t k = cutoff == 0 ? n : std::min(cutoff, n);
  double dcg = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const auto p = static_cast<std::size_t>(position(scores, j));
    if (p <= k) dcg += relevancy[j] / std::log2(static_cast<double>(p) + 1.0);
  }
  Row ideal = relevancy;
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  double idcg = 0;
  for (std::size_t p = 1; p <= k; ++p) {
    idcg += ideal[p - 1] / std::log2(static_cast<double>(p) + 1.0);
  }
  return idcg == 0 ? 1.0 : dcg / idcg;
}

double ndcg(const Grid& scores, const Grid& relevancy, std::size_t cutoff) {
  double sum = 0;
  for (std::size_t q = 0; q < scores.size(); ++q) {
    sum += ndcg_row(scores[q], relevancy[q], cutoff);
  }
  return sum / static_cast<double>(scores.size());
}

double ap_row(const Row& scores, const Row& relevancy, double threshold) {
  std::vector<std::int64_t> rel_pos;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (relevancy[j] >= threshold) rel_pos.push_back(position(scores, j));
  }
  double sum = 0;
  for (auto p : rel_pos) {
    double hits = 0;
    for (auto p2 : rel_pos) hits += p2 <= p ? 1 : 0;
    sum += hits / static_cast<double>(p);
  }
  return sum / static_cast<double>(rel_pos.size());
}

double mean_ap(const Grid& scores, const Grid& relevancy, double threshold) {
  double sum = 0;
  for (std::size_t q = 0; q < scores.size(); ++q) {
    sum += ap_row(scores[q], relevancy[q], threshold);
  }
  return sum / static_cast<double>(scores.size());
}

Ranks ranks(const Grid& scores, const std::vector<std::size_t>& gt) {
  std::vector<std::int64_t> r;
  for (std::size_t q = 0; q < scores.size(); ++q) r.push_back(position(scores[q], gt[q]));
  Ranks out;
  const double n = static_cast<double>(r.size());
  double h1 = 0, h5 = 0, h10 = 0, total = 0;
  for (auto x : r) {
    h1 += x <= 1;
    h5 += x <= 5;
    h10 += x <= 10;
    total += static_cast<double>(x);
  }
  out.r1 = 100.0 * h1 / n;
  out.r5 = 100.0 * h5 / n;
  out.r10 = 100.0 * h10 / n;
  out.mnr = total / n;
  std::vector<std::int64_t> sorted = r;
  std::sort(sorted.begin(), sorted.end());
  out.medr = sorted[(sorted.size() - 1) / 2];
  out.rsum = out.r1 + out.r5 + out.r10;
  return out;
}

Grid transpose(const Grid& g) {
  Grid t(g.empty() ? 0 : g[0].size(), Row(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = 0; j < g[i].size(); ++j) t[j][i] = g[i][j];
  }
  return t;
}

}  // namespace lenbias::oracle
