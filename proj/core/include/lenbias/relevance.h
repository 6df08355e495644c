#ifndef LENBIAS_RELEVANCE_H_
#define LENBIAS_RELEVANCE_H_

#include <vector>

#include "lenbias/manifest.h"
#include "lenbias/matrix.h"

namespace lenbias {

// Verb and noun class sets of a caption or clip, sorted and unique.
struct ClassSets {
  std::vector<int> verbs;
  std::vector<int> nouns;

  static ClassSets of(const Clip& clip);
  bool operator==(const ClassSets&) const = default;
};

// Mean of verb-set IoU and noun-set IoU, in [0, 1].
// Throws InvalidArgument if any of the four sets is empty.
double relevancy(const ClassSets& query, const ClassSets& item);

// Intersection-over-union of two sorted unique id lists.
double set_iou(const std::vector<int>& a, const std::vector<int>& b);

struct RelevancyMatrix {
  RowMatrix values;  // n_queries x n_gallery

  Eigen::Index n_queries() const { return values.rows(); }
  Eigen::Index n_gallery() const { return values.cols(); }
};

RelevancyMatrix relevancy_matrix(const std::vector<ClassSets>& queries,
                                 const std::vector<ClassSets>& gallery);
RelevancyMatrix relevancy_matrix(const Manifest& queries,
                                 const Manifest& gallery);

}  // namespace lenbias

#endif  // LENBIAS_RELEVANCE_H_
