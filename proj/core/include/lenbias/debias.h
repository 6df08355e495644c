#ifndef LENBIAS_DEBIAS_H_
#define LENBIAS_DEBIAS_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lenbias/manifest.h"

namespace lenbias {

enum class RemovalDirection { kShortest, kLongest, kRandom };

const char* to_string(RemovalDirection d);

struct RemovalEntry {
  std::optional<ClassKey> class_key;  // empty for random removal
  RemovalDirection direction = RemovalDirection::kShortest;
  std::vector<std::string> removed_ids;  // in removal order
  std::optional<double> before_avg;      // training AFLC before / after
  std::optional<double> after_avg;
  std::optional<double> test_avg;
};

struct RemovalLog {
  std::vector<RemovalEntry> entries;  // only entries that removed something
  std::int64_t total_removed = 0;
  std::int64_t classes_touched = 0;
  std::int64_t classes_processed = 0;
};

struct DebiasResult {
  Manifest manifest;
  RemovalLog log;
};

// Pruning thresholds. `delta` is the tolerated gap in frames between the test
// and training class averages; `alpha` is the minimum number of training clips
// a class is pruned down to. At least one clip always remains.
struct PruneParams {
  double delta = 10.0;
  std::int64_t alpha = 60;
};

// Prunes one class: while the test average exceeds the training average by at
// least delta, drop the class's shortest training clip; mirrored (drop the
// longest) when the training average is the larger one. Stops once the gap
// closes, or right after a deletion that leaves at most alpha clips. Throws InvalidArgument if the
// class is missing from either split.
DebiasResult rmv_one(const Manifest& train, const Manifest& test,
                     const ClassKey& class_key, const PruneParams& params = {});

// rmv_one over every common class in ascending key order. A clip shared by
// several classes is removed at most once, and later classes see the reduced
// set.
DebiasResult rmv_all(const Manifest& train, const Manifest& test,
                     const PruneParams& params = {});

// Removes n training clips uniformly without replacement.
DebiasResult rmv_rand(const Manifest& train, std::int64_t n, std::uint64_t seed);

void write_removal_log(const RemovalLog& log, const std::filesystem::path& path);

}  // namespace lenbias

#endif  // LENBIAS_DEBIAS_H_
