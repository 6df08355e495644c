#ifndef LENBIAS_SYNTH_H_
#define LENBIAS_SYNTH_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lenbias/feature_io.h"
#include "lenbias/manifest.h"

namespace lenbias {

// Number of motion channels appended after the appearance block: sin and cos
// of the motion phase, and their differences to the next sampled frame.
inline constexpr int kMotionChannels = 4;

struct GenConfig {
  int n_verbs = 10;
  int n_nouns = 10;
  int pairs_per_split = 50;  // distinct (verb, noun) classes, shared by both splits
  int clips_per_class_train = 20;
  int clips_per_class_test = 6;
  int feature_dim = 16;
  int sampled_frames = 8;
  // Log-normal frame lengths: class log-medians are
  // base_len_mu + class_len_spread * z_class, clip lengths spread by
  // base_len_sigma around them.
  double base_len_mu = 5.3;  // exp(5.3) ~ 200 frames
  double base_len_sigma = 0.4;
  double class_len_spread = 0.0;
  double bias_shift = 120.0;  // frames added to every test clip length
  double noise_sigma = 0.1;
  double omega_min = 0.5;  // verb motion frequency range, rad/s
  double omega_max = 3.0;
  double fps = 30.0;
  std::uint64_t seed = 0;

  void check() const;
};

// Latent generator state, for oracle tests only.
struct GenTruth {
  std::vector<double> verb_omega;
  std::vector<std::vector<double>> noun_appearance;
  struct ClassTruth {
    int verb = 0;
    int noun = 0;
    double log_median = 0.0;
    double expected_mean = 0.0;  // of the un-shifted log-normal length
    double expected_sd = 0.0;
    double discrepancy_se = 0.0;  // sd * sqrt(1/n_train + 1/n_test)
  };
  std::vector<ClassTruth> classes;
  // 3 * the largest per-class standard error of the train/test mean gap.
  double discrepancy_noise_bound = 0.0;
};

struct SynthData {
  Manifest train;
  Manifest test;
  FeatureMatrix features;
  GenTruth truth;
};

// Uniform sampling: idx_i = floor((i + 0.5) * T / M), clamped to [0, T-1].
std::vector<std::int64_t> sample_frames(std::int64_t length, int m);

SynthData generate(const GenConfig& config);

// Writes train.jsonl, test.jsonl, features.fvb and truth.json into `dir`.
void write_synth(const SynthData& data, const GenConfig& config,
                 const std::filesystem::path& dir);

GenConfig gen_config_from_json(const std::string& text);
std::string gen_config_to_json(const GenConfig& config);

}  // namespace lenbias

#endif  // LENBIAS_SYNTH_H_
