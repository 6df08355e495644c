#include "lenbias/relevance.h"

#include <algorithm>
#include <iterator>

#include "lenbias/error.h"

namespace lenbias {

ClassSets ClassSets::of(const Clip& clip) {
  return {clip.verb_classes, clip.noun_classes};
}

double set_iou(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(common));
  const std::size_t inter = common.size();
  const std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double relevancy(const ClassSets& query, const ClassSets& item) {
  if (query.verbs.empty() || query.nouns.empty() || item.verbs.empty() ||
      item.nouns.empty()) {
    throw InvalidArgument("relevancy: empty verb or noun class set");
  }
  return 0.5 * (set_iou(query.verbs, item.verbs) +
                set_iou(query.nouns, item.nouns));
}

RelevancyMatrix relevancy_matrix(const std::vector<ClassSets>& queries,
                                 const std::vector<ClassSets>& gallery) {
  if (queries.empty() || gallery.empty()) {
    throw InvalidArgument("relevancy_matrix: empty query or gallery list");
  }
  RelevancyMatrix r;
  r.values.resize(static_cast<Eigen::Index>(queries.size()),
                  static_cast<Eigen::Index>(gallery.size()));
  for (std::size_t i = 0; i < queries.size(); ++i) {
    for (std::size_t j = 0; j < gallery.size(); ++j) {
      r.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          relevancy(queries[i], gallery[j]);
    }
  }
  return r;
}

RelevancyMatrix relevancy_matrix(const Manifest& queries,
                                 const Manifest& gallery) {
  std::vector<ClassSets> q;
  std::vector<ClassSets> g;
  q.reserve(queries.clips.size());
  g.reserve(gallery.clips.size());
  for (const auto& c : queries.clips) q.push_back(ClassSets::of(c));
  for (const auto& c : gallery.clips) g.push_back(ClassSets::of(c));
  return relevancy_matrix(q, g);
}

}  // namespace lenbias
