#ifndef LENBIAS_SPLITTER_H_
#define LENBIAS_SPLITTER_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lenbias/manifest.h"

namespace lenbias {

enum class SplitMethod { kEqual, kAdjusted, kThreshold };

const char* to_string(SplitMethod m);
SplitMethod parse_split_method(const std::string& s);

// Length-ordered partition of a training set. Every method sorts clips by
// ascending frame length (ties by clip_id) and cuts the sorted list into
// contiguous parts.
struct SplitPlan {
  SplitMethod method = SplitMethod::kEqual;
  std::vector<std::vector<std::string>> parts;
  std::vector<std::int64_t> sizes;
  // Frame-length cut points: boundaries[k] is the longest clip in part k, for
  // every part but the last.
  std::vector<double> boundaries;

  std::int64_t total() const;
  // Empirical P(L_k) = sizes[k] / total.
  std::vector<double> proportions() const;
};

// M contiguous chunks; the first N mod M chunks hold one extra clip.
SplitPlan equal_splits(const Manifest& train, std::int64_t m);

// Repeatedly peel off the first half (floor) of the remaining sorted clips
// until two parts remain, then cut the remainder at floor(th * remaining).
SplitPlan adjusted_splits(const Manifest& train, std::int64_t m, double th);

// Part 1: frame_length <= cut; part 2: the rest. Both must be non-empty.
SplitPlan threshold_split(const Manifest& train, double cut);

// Fraction of training clips whose frame length is <= cut, nudged half a clip
// up so that floor(th * N) recovers the count exactly.
double threshold_fraction(const Manifest& train, double cut);

// th for adjusted_splits(train, m, th) that puts the final cut at `cut`
// frames: the nudged fraction of the clips left after peeling that are no
// longer than `cut`, clamped so that both final parts keep at least one clip.
// Equals threshold_fraction for m = 2 whenever the cut falls inside the data.
double adjusted_threshold_fraction(const Manifest& train, std::int64_t m, double cut);

// Manifests for each part, in plan order.
std::vector<Manifest> materialize(const SplitPlan& plan, const Manifest& train);

void write_plan(const SplitPlan& plan, const std::filesystem::path& path);

}  // namespace lenbias

#endif  // LENBIAS_SPLITTER_H_
