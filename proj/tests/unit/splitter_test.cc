#include <gtest/gtest.h>

#include <set>

#include "fixtures.h"
#include "lenbias/error.h"
#include "lenbias/splitter.h"
#include "lenbias/synth.h"

namespace lenbias {
namespace {

using testing::class_clips;
using testing::make_manifest;

Manifest with_lengths(const std::vector<std::int64_t>& lengths) {
  return make_manifest(class_clips("c", 0, 0, lengths));
}

Manifest n_clips(int n) {
  std::vector<std::int64_t> lengths;
  for (int i = 0; i < n; ++i) lengths.push_back(1 + (i * 37) % 101);
  return with_lengths(lengths);
}

// Disjoint, covering, and every clip of part k no longer than any of part k+1.
void expect_valid_partition(const SplitPlan& plan, const Manifest& train) {
  std::map<std::string, std::int64_t> len;
  for (const auto& c : train.clips) len[c.clip_id] = c.frame_length;
  std::set<std::string> seen;
  std::int64_t prev_max = 0;
  ASSERT_EQ(plan.parts.size(), plan.sizes.size());
  for (std::size_t k = 0; k < plan.parts.size(); ++k) {
    ASSERT_EQ(static_cast<std::int64_t>(plan.parts[k].size()), plan.sizes[k]);
    ASSERT_FALSE(plan.parts[k].empty());
    std::int64_t lo = INT64_MAX, hi = 0;
    for (const auto& id : plan.parts[k]) {
      ASSERT_TRUE(len.contains(id)) << id;
      EXPECT_TRUE(seen.insert(id).second) << "duplicate " << id;
      lo = std::min(lo, len[id]);
      hi = std::max(hi, len[id]);
    }
    EXPECT_GE(lo, prev_max);
    prev_max = hi;
  }
  EXPECT_EQ(seen.size(), train.clips.size());
  EXPECT_EQ(plan.total(), static_cast<std::int64_t>(train.clips.size()));
}

TEST(EqualSplits, Sizes) {
  EXPECT_EQ(equal_splits(n_clips(10), 2).sizes, (std::vector<std::int64_t>{5, 5}));
  EXPECT_EQ(equal_splits(n_clips(10), 3).sizes, (std::vector<std::int64_t>{4, 3, 3}));
}

TEST(EqualSplits, SinglePartIsWholeSet) {
  const auto train = n_clips(7);
  const auto plan = equal_splits(train, 1);
  ASSERT_EQ(plan.parts.size(), 1u);
  EXPECT_EQ(plan.sizes[0], 7);
  expect_valid_partition(plan, train);
  EXPECT_TRUE(plan.boundaries.empty());
}

TEST(EqualSplits, RejectsBadM) {
  EXPECT_THROW(equal_splits(n_clips(3), 0), InvalidArgument);
  EXPECT_THROW(equal_splits(n_clips(3), 4), InvalidArgument);
}

TEST(AdjustedSplits, EightClipsThreeParts) {
  EXPECT_EQ(adjusted_splits(n_clips(8), 3, 0.5).sizes, (std::vector<std::int64_t>{4, 2, 2}));
}

TEST(AdjustedSplits, LargeFixtureWithTestMeanThreshold) {
  // 8000 clips at or below a test mean of 300 frames, 2337 above it.
  std::vector<std::int64_t> lengths;
  for (int i = 0; i < 10337; ++i) lengths.push_back(i < 8000 ? 50 + i % 250 : 301 + i % 700);
  const auto train = with_lengths(lengths);
  const double th = threshold_fraction(train, 300.0);
  const auto plan = adjusted_splits(train, 2, th);
  EXPECT_EQ(plan.sizes, (std::vector<std::int64_t>{8000, 2337}));
  expect_valid_partition(plan, train);
  EXPECT_EQ(plan.boundaries, (std::vector<double>{299.0}));
}

TEST(AdjustedSplits, ThresholdFractionSurvivesFloor) {
  // k / N alone truncates to k - 1 for 15 of 22.
  std::vector<std::int64_t> lengths;
  for (int i = 0; i < 22; ++i) lengths.push_back(i < 15 ? 10 : 20);
  const auto train = with_lengths(lengths);
  EXPECT_EQ(adjusted_splits(train, 2, threshold_fraction(train, 10)).sizes[0], 15);
}

TEST(AdjustedSplits, RejectsBadArguments) {
  EXPECT_THROW(adjusted_splits(n_clips(8), 1, 0.5), InvalidArgument);
  EXPECT_THROW(adjusted_splits(n_clips(8), 2, 0.0), InvalidArgument);
  EXPECT_THROW(adjusted_splits(n_clips(8), 2, 1.0), InvalidArgument);
  EXPECT_THROW(adjusted_splits(n_clips(2), 2, 0.1), InvalidArgument);  // empty part
}

TEST(AdjustedThresholdFraction, LastCutLandsOnTheTestMean) {
  // 16 clips of lengths 1..16, M = 3: peel 8, then cut the remaining 9..16 at 12.
  std::vector<std::int64_t> lengths;
  for (int i = 1; i <= 16; ++i) lengths.push_back(i);
  const auto train = with_lengths(lengths);
  const auto plan = adjusted_splits(train, 3, adjusted_threshold_fraction(train, 3, 12.0));
  EXPECT_EQ(plan.sizes, (std::vector<std::int64_t>{8, 4, 4}));
  EXPECT_EQ(adjusted_threshold_fraction(train, 2, 12.0), threshold_fraction(train, 12.0));
  // A cut below every remaining clip is clamped so both parts stay non-empty.
  EXPECT_EQ(adjusted_splits(train, 3, adjusted_threshold_fraction(train, 3, 2.0)).sizes,
            (std::vector<std::int64_t>{8, 1, 7}));
}

TEST(ThresholdSplit, Basics) {
  const auto train = with_lengths({10, 20, 30, 400});
  const auto plan = threshold_split(train, 35);
  EXPECT_EQ(plan.sizes, (std::vector<std::int64_t>{3, 1}));
  EXPECT_EQ(plan.boundaries, (std::vector<double>{35}));
  EXPECT_THROW(threshold_split(train, 400), InvalidArgument);
  EXPECT_THROW(threshold_split(train, 5), InvalidArgument);
}

TEST(ThresholdSplit, SynthTestMean) {
  GenConfig cfg;
  cfg.seed = 12;
  const auto data = generate(cfg);
  const double cut = mean_frame_length(data.test);
  std::int64_t below = 0;
  for (const auto& c : data.train.clips) below += static_cast<double>(c.frame_length) <= cut;
  const auto plan = threshold_split(data.train, cut);
  EXPECT_EQ(plan.sizes[0], below);
  EXPECT_EQ(plan.sizes[1], static_cast<std::int64_t>(data.train.clips.size()) - below);
}

TEST(Splits, HundredRandomManifestsArePartitions) {
  Rng rng(31);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 4 + static_cast<int>(rng.below(200));
    const auto train = testing::random_manifest(rng, n, 3, 3, 1 + rng.below(400));
    const auto m = 1 + static_cast<std::int64_t>(rng.below(4));
    expect_valid_partition(equal_splits(train, m), train);
    if (m >= 2 && n >= 40) {
      const double th = rng.uniform(0.2, 0.8);
      expect_valid_partition(adjusted_splits(train, m, th), train);
    }
    const double cut = static_cast<double>(train.clips[rng.below(n)].frame_length);
    try {
      expect_valid_partition(threshold_split(train, cut), train);
    } catch (const InvalidArgument&) {
      // the cut hit the maximum length
    }
  }
}

TEST(Splits, TiesOrderedByClipId) {
  const auto train = make_manifest({testing::make_clip("b", {0}, {0}, 5),
                                    testing::make_clip("a", {0}, {0}, 5),
                                    testing::make_clip("c", {0}, {0}, 1)});
  const auto plan = equal_splits(train, 3);
  EXPECT_EQ(plan.parts, (std::vector<std::vector<std::string>>{{"c"}, {"a"}, {"b"}}));
}

TEST(Splits, MaterializeAndProportions) {
  const auto train = n_clips(10);
  const auto plan = equal_splits(train, 3);
  const auto parts = materialize(plan, train);
  ASSERT_EQ(parts.size(), 3u);
  EXPECT_EQ(parts[1].clips.size(), 3u);
  EXPECT_EQ(parts[0].verb_dict, train.verb_dict);
  const auto p = plan.proportions();
  EXPECT_DOUBLE_EQ(p[0], 0.4);
  EXPECT_DOUBLE_EQ(p[0] + p[1] + p[2], 1.0);
}

TEST(Splits, ParseMethod) {
  EXPECT_EQ(parse_split_method("adjusted"), SplitMethod::kAdjusted);
  EXPECT_THROW(parse_split_method("quantile"), InvalidArgument);
}

}  // namespace
}  // namespace lenbias
