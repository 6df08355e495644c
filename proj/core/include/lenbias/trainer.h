#ifndef LENBIAS_TRAINER_H_
#define LENBIAS_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lenbias/feature_io.h"
#include "lenbias/manifest.h"
#include "lenbias/matrix.h"
#include "lenbias/model.h"

namespace lenbias {

// Scale of the uniform parameter initialization.
inline constexpr double kInitScale = 0.08;

struct TrainResult {
  ModelParams params;
  std::vector<double> epoch_loss;  // mean batch loss per epoch
  TrainConfig config;
};

// Mini-batch SGD with momentum. Samples are put in clip_id order before the
// seeded per-epoch shuffle, so the result depends on the clip set, features
// and config only, never on manifest order. A trailing batch of one pair is
// dropped.
TrainResult train(const Manifest& manifest, const FeatureMatrix& features,
                  const TrainConfig& config);
TrainResult train(const std::vector<Sample>& samples, const Vocabulary& vocab,
                  int feature_dim, const TrainConfig& config);

// Fresh parameters exactly as train() initializes them.
ModelParams init_params(const Vocabulary& vocab, int feature_dim,
                        const TrainConfig& config);

// T2V scores: rows are the query manifest's captions, columns the gallery
// manifest's videos.
SimilarityMatrix similarity_matrix(const ModelParams& params,
                                   const Manifest& queries,
                                   const Manifest& gallery,
                                   const FeatureMatrix& features);

struct GradCheckOptions {
  double h = 1e-5;
  // Coordinates compared; all of them when the model is not larger.
  std::size_t max_coords = 400;
  std::uint64_t seed = 0;
  // Gradient magnitudes below this are compared in absolute terms.
  double abs_floor = 1e-6;
  // Negative control: add 1 to the analytic gradient at this coordinate.
  std::optional<std::size_t> corrupt_coordinate;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_coordinate = 0;
  std::size_t coords_checked = 0;
};

// Central finite differences of batch_loss against its analytic gradient.
// Relative error per coordinate is |a - n| / max(|a|, |n|, abs_floor).
GradCheckResult grad_check(const ModelParams& params,
                           const std::vector<const Sample*>& batch,
                           const TrainConfig& config,
                           const GradCheckOptions& options = {});

// Flat JSON object with the TrainConfig field names. Missing keys keep their
// defaults.
TrainConfig train_config_from_json(const std::string& text);
std::string train_config_to_json(const TrainConfig& config);

// JSON: shapes, row-major arrays and the producing TrainConfig.
void save_params(const ModelParams& params, const TrainConfig& config,
                 const std::filesystem::path& path);
ModelParams load_params(const std::filesystem::path& path,
                        TrainConfig* config = nullptr);

}  // namespace lenbias

#endif  // LENBIAS_TRAINER_H_
