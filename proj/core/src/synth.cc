#include "lenbias/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "lenbias/error.h"
#include "lenbias/random.h"

namespace lenbias {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string numbered(const char* prefix, int width, std::int64_t n) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%0*lld", prefix, width, static_cast<long long>(n));
  return buf;
}

Manifest empty_manifest(const GenConfig& c) {
  Manifest m;
  m.feature_file = "features.fvb";
  m.feature_dim = c.feature_dim;
  for (int v = 0; v < c.n_verbs; ++v) m.verb_dict[v] = "verb_" + std::to_string(v);
  for (int n = 0; n < c.n_nouns; ++n) m.noun_dict[n] = "noun_" + std::to_string(n);
  return m;
}

}  // namespace

void GenConfig::check() const {
  if (n_verbs < 1 || n_nouns < 1) throw InvalidArgument("gen: need >= 1 verb and noun");
  if (pairs_per_split < 1 ||
      static_cast<std::int64_t>(pairs_per_split) >
          static_cast<std::int64_t>(n_verbs) * n_nouns) {
    throw InvalidArgument("gen: pairs_per_split must lie in [1, n_verbs * n_nouns]");
  }
  if (clips_per_class_train < 1 || clips_per_class_test < 1) {
    throw InvalidArgument("gen: clip counts per class must be >= 1");
  }
  if (sampled_frames < 1) throw InvalidArgument("gen: sampled_frames must be >= 1");
  if (feature_dim < kMotionChannels + 1) {
    throw InvalidArgument("gen: feature_dim " + std::to_string(feature_dim) +
                          " too small for the channel layout (needs >= " +
                          std::to_string(kMotionChannels + 1) + ")");
  }
  if (!(fps > 0.0)) throw InvalidArgument("gen: fps must be positive");
  if (!(base_len_sigma >= 0.0) || !(class_len_spread >= 0.0) || !(noise_sigma >= 0.0)) {
    throw InvalidArgument("gen: spreads must be non-negative");
  }
  if (!(omega_min > 0.0 && omega_max >= omega_min)) {
    throw InvalidArgument("gen: need 0 < omega_min <= omega_max");
  }
}

std::vector<std::int64_t> sample_frames(std::int64_t length, int m) {
  if (length < 1) throw InvalidArgument("sample_frames: length must be >= 1");
  if (m < 1) throw InvalidArgument("sample_frames: need at least one sample");
  std::vector<std::int64_t> idx(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    // Exact integer form of floor((i + 0.5) * T / m).
    const std::int64_t v = ((2 * static_cast<std::int64_t>(i) + 1) * length) / (2 * m);
    idx[static_cast<std::size_t>(i)] = std::clamp<std::int64_t>(v, 0, length - 1);
  }
  return idx;
}

SynthData generate(const GenConfig& c) {
  c.check();
  Rng rng(c.seed);
  const int appearance_dim = c.feature_dim - kMotionChannels;

  SynthData out;
  GenTruth& truth = out.truth;

  // Verb frequencies are stratified over [omega_min, omega_max] so no two
  // verbs collapse onto the same motion pattern.
  std::vector<int> slots(static_cast<std::size_t>(c.n_verbs));
  for (int v = 0; v < c.n_verbs; ++v) slots[static_cast<std::size_t>(v)] = v;
  rng.shuffle(slots);
  const double step = (c.omega_max - c.omega_min) / c.n_verbs;
  for (int v = 0; v < c.n_verbs; ++v) {
    truth.verb_omega.push_back(c.omega_min +
                               (slots[static_cast<std::size_t>(v)] + rng.uniform()) * step);
  }
  for (int n = 0; n < c.n_nouns; ++n) {
    std::vector<double> a(static_cast<std::size_t>(appearance_dim));
    double norm = 0.0;
    for (auto& x : a) {
      x = rng.normal();
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (auto& x : a) x /= norm;
    truth.noun_appearance.push_back(std::move(a));
  }

  std::vector<ClassKey> all_pairs;
  for (int v = 0; v < c.n_verbs; ++v) {
    for (int n = 0; n < c.n_nouns; ++n) all_pairs.emplace_back(v, n);
  }
  rng.shuffle(all_pairs);
  all_pairs.resize(static_cast<std::size_t>(c.pairs_per_split));
  std::sort(all_pairs.begin(), all_pairs.end());

  const double s2 = c.base_len_sigma * c.base_len_sigma;
  double max_se = 0.0;
  for (const auto& [v, n] : all_pairs) {
    GenTruth::ClassTruth ct;
    ct.verb = v;
    ct.noun = n;
    ct.log_median = c.base_len_mu + c.class_len_spread * rng.normal();
    ct.expected_mean = std::exp(ct.log_median + 0.5 * s2);
    ct.expected_sd = std::sqrt(std::expm1(s2)) * ct.expected_mean;
    ct.discrepancy_se = ct.expected_sd * std::sqrt(1.0 / c.clips_per_class_train +
                                                   1.0 / c.clips_per_class_test);
    max_se = std::max(max_se, ct.discrepancy_se);
    truth.classes.push_back(ct);
  }
  truth.discrepancy_noise_bound = 3.0 * max_se;

  struct Pending {
    std::size_t cls;
    std::int64_t length;
  };
  std::vector<Pending> train_clips;
  std::vector<Pending> test_clips;
  for (std::size_t k = 0; k < truth.classes.size(); ++k) {
    const auto& ct = truth.classes[k];
    for (int i = 0; i < c.clips_per_class_train; ++i) {
      const double len = std::exp(ct.log_median + c.base_len_sigma * rng.normal());
      train_clips.push_back({k, std::max<std::int64_t>(c.sampled_frames, std::llround(len))});
    }
    for (int i = 0; i < c.clips_per_class_test; ++i) {
      const double len =
          std::exp(ct.log_median + c.base_len_sigma * rng.normal()) + c.bias_shift;
      test_clips.push_back({k, std::max<std::int64_t>(c.sampled_frames, std::llround(len))});
    }
  }

  out.train = empty_manifest(c);
  out.test = empty_manifest(c);
  std::vector<float> data;
  data.reserve((train_clips.size() + test_clips.size()) *
               static_cast<std::size_t>(c.sampled_frames * c.feature_dim));
  std::int64_t row = 0;

  auto emit = [&](const Pending& p, SplitTag split, const std::string& id) {
    const auto& ct = truth.classes[p.cls];
    const double omega = truth.verb_omega[static_cast<std::size_t>(ct.verb)];
    const auto& appearance = truth.noun_appearance[static_cast<std::size_t>(ct.noun)];
    const auto idx = sample_frames(p.length, c.sampled_frames);
    std::vector<double> sin_p(idx.size());
    std::vector<double> cos_p(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const double phase = omega * static_cast<double>(idx[i]) / c.fps;
      sin_p[i] = std::sin(phase);
      cos_p[i] = std::cos(phase);
    }
    for (std::size_t i = 0; i < idx.size(); ++i) {
      for (double a : appearance) data.push_back(static_cast<float>(a + c.noise_sigma * rng.normal()));
      // Differences to the next sampled frame; the last frame repeats the
      // previous difference.
      double ds = 0.0;
      double dc = 0.0;
      if (idx.size() > 1) {
        const std::size_t j = i + 1 < idx.size() ? i : i - 1;
        ds = sin_p[j + 1] - sin_p[j];
        dc = cos_p[j + 1] - cos_p[j];
      }
      for (double m : {sin_p[i], cos_p[i], ds, dc}) {
        data.push_back(static_cast<float>(m + c.noise_sigma * rng.normal()));
      }
    }

    Clip clip;
    clip.clip_id = id;
    clip.split = split;
    clip.verb_classes = {ct.verb};
    clip.noun_classes = {ct.noun};
    clip.caption = {{"verb_" + std::to_string(ct.verb), Role::kAction},
                    {"noun_" + std::to_string(ct.noun), Role::kEntity}};
    clip.frame_length = p.length;
    clip.fps = c.fps;
    clip.feature_row = row;
    clip.feature_rows = c.sampled_frames;
    row += c.sampled_frames;
    (split == SplitTag::kTrain ? out.train : out.test).clips.push_back(std::move(clip));
  };

  for (std::size_t i = 0; i < train_clips.size(); ++i) {
    emit(train_clips[i], SplitTag::kTrain, numbered("train_", 6, static_cast<std::int64_t>(i)));
  }
  for (std::size_t i = 0; i < test_clips.size(); ++i) {
    emit(test_clips[i], SplitTag::kTest, numbered("test_", 6, static_cast<std::int64_t>(i)));
  }
  out.features = FeatureMatrix(row, c.feature_dim, std::move(data));
  return out;
}

GenConfig gen_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("gen config: ") + e.what());
  }
  GenConfig c;
  try {
    c.n_verbs = j.value("n_verbs", c.n_verbs);
    c.n_nouns = j.value("n_nouns", c.n_nouns);
    c.pairs_per_split = j.value("pairs_per_split", c.pairs_per_split);
    c.clips_per_class_train = j.value("clips_per_class_train", c.clips_per_class_train);
    c.clips_per_class_test = j.value("clips_per_class_test", c.clips_per_class_test);
    c.feature_dim = j.value("feature_dim", c.feature_dim);
    c.sampled_frames = j.value("sampled_frames", c.sampled_frames);
    c.base_len_mu = j.value("base_len_mu", c.base_len_mu);
    c.base_len_sigma = j.value("base_len_sigma", c.base_len_sigma);
    c.class_len_spread = j.value("class_len_spread", c.class_len_spread);
    c.bias_shift = j.value("bias_shift", c.bias_shift);
    c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
    c.omega_min = j.value("omega_min", c.omega_min);
    c.omega_max = j.value("omega_max", c.omega_max);
    c.fps = j.value("fps", c.fps);
    c.seed = j.value("seed", c.seed);
    c.check();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("gen config: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ValidationError(std::string("gen config: ") + e.what());
  }
  return c;
}

std::string gen_config_to_json(const GenConfig& c) {
  ordered_json j;
  j["n_verbs"] = c.n_verbs;
  j["n_nouns"] = c.n_nouns;
  j["pairs_per_split"] = c.pairs_per_split;
  j["clips_per_class_train"] = c.clips_per_class_train;
  j["clips_per_class_test"] = c.clips_per_class_test;
  j["feature_dim"] = c.feature_dim;
  j["sampled_frames"] = c.sampled_frames;
  j["base_len_mu"] = c.base_len_mu;
  j["base_len_sigma"] = c.base_len_sigma;
  j["class_len_spread"] = c.class_len_spread;
  j["bias_shift"] = c.bias_shift;
  j["noise_sigma"] = c.noise_sigma;
  j["omega_min"] = c.omega_min;
  j["omega_max"] = c.omega_max;
  j["fps"] = c.fps;
  j["seed"] = c.seed;
  return j.dump(2);
}

void write_synth(const SynthData& data, const GenConfig& config,
                 const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_manifest(data.train, dir / "train.jsonl");
  save_manifest(data.test, dir / "test.jsonl");
  save_features(data.features, dir / data.train.feature_file);

  ordered_json t;
  t["config"] = json::parse(gen_config_to_json(config));
  t["verb_omega"] = data.truth.verb_omega;
  t["noun_appearance"] = data.truth.noun_appearance;
  auto& cls = t["classes"] = ordered_json::array();
  for (const auto& c : data.truth.classes) {
    cls.push_back({{"verb", c.verb},
                   {"noun", c.noun},
                   {"log_median", c.log_median},
                   {"expected_mean", c.expected_mean},
                   {"expected_sd", c.expected_sd},
                   {"discrepancy_se", c.discrepancy_se}});
  }
  t["discrepancy_noise_bound"] = data.truth.discrepancy_noise_bound;
  std::ofstream out(dir / "truth.json", std::ios::trunc);
  if (!out) throw Error("cannot write truth.json");
  out << t.dump(2) << '\n';
}

}  // namespace lenbias
