#ifndef LENBIAS_CAUSAL_H_
#define LENBIAS_CAUSAL_H_

#include <cstdint>
#include <string>
#include <vector>

#include "lenbias/feature_io.h"
#include "lenbias/manifest.h"
#include "lenbias/matrix.h"
#include "lenbias/splitter.h"
#include "lenbias/trainer.h"

namespace lenbias {

enum class WeightMode {
  kUniformSum,    // plain sum of the per-split matrices
  kProportional,  // sum weighted by the split's share of training clips
};

const char* to_string(WeightMode m);
WeightMode parse_weight_mode(const std::string& s);

struct FusionSpec {
  WeightMode mode = WeightMode::kUniformSum;
  std::vector<std::int64_t> split_sizes;
  std::vector<std::string> model_refs;  // optional, for provenance only

  // Per-split weights. Proportional weights are size_k / N with the last one
  // taken as the remainder so that they sum to exactly 1.
  std::vector<double> weights() const;
};

// One model per part of `plan`, all with the same config and seed. Parts are
// trained on up to `jobs` threads; the result does not depend on `jobs`.
// Throws InvalidArgument if a part has fewer clips than batch_size.
std::vector<TrainResult> train_split_models(const SplitPlan& plan,
                                            const Manifest& train,
                                            const FeatureMatrix& features,
                                            const TrainConfig& config,
                                            int jobs = 1);

// Element-wise weighted sum of same-shaped, same-orientation matrices.
SimilarityMatrix fuse(const std::vector<SimilarityMatrix>& matrices,
                      const FusionSpec& spec);

// Control: |seeds| models on the full training set, test matrices summed.
SimilarityMatrix ensemble(const Manifest& train, const FeatureMatrix& train_features,
                          const Manifest& test, const FeatureMatrix& test_features,
                          const TrainConfig& config,
                          const std::vector<std::uint64_t>& seeds, int jobs = 1);

// Runs `n` independent tasks on at most `jobs` threads.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn);

}  // namespace lenbias

#include "lenbias/detail/parallel.h"

#endif  // LENBIAS_CAUSAL_H_
