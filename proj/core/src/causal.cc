#include "lenbias/causal.h"

#include <set>

#include "lenbias/error.h"

namespace lenbias {

const char* to_string(WeightMode m) {
  return m == WeightMode::kUniformSum ? "uniform" : "proportional";
}

WeightMode parse_weight_mode(const std::string& s) {
  if (s == "uniform" || s == "uniform_sum") return WeightMode::kUniformSum;
  if (s == "proportional") return WeightMode::kProportional;
  throw InvalidArgument("unknown weight mode \"" + s + "\"");
}

std::vector<double> FusionSpec::weights() const {
  if (split_sizes.empty()) throw InvalidArgument("fusion: no splits");
  if (!model_refs.empty() && model_refs.size() != split_sizes.size()) {
    throw InvalidArgument("fusion: model_refs and split_sizes differ in length");
  }
  std::vector<double> w(split_sizes.size(), 1.0);
  if (mode == WeightMode::kUniformSum) return w;
  std::int64_t total = 0;
  for (auto s : split_sizes) {
    if (s < 1) throw InvalidArgument("fusion: split sizes must be positive");
    total += s;
  }
  double assigned = 0.0;
  for (std::size_t k = 0; k + 1 < w.size(); ++k) {
    w[k] = static_cast<double>(split_sizes[k]) / static_cast<double>(total);
    assigned += w[k];
  }
  w.back() = 1.0 - assigned;
  return w;
}

std::vector<TrainResult> train_split_models(const SplitPlan& plan,
                                            const Manifest& train,
                                            const FeatureMatrix& features,
                                            const TrainConfig& config, int jobs) {
  config.check();
  const auto parts = materialize(plan, train);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    if (static_cast<std::int64_t>(parts[k].clips.size()) < config.batch_size) {
      throw InvalidArgument("split " + std::to_string(k + 1) + " has " +
                            std::to_string(parts[k].clips.size()) +
                            " clips, fewer than batch_size " +
                            std::to_string(config.batch_size));
    }
  }
  // Every split shares the vocabulary of the full training manifest.
  const Vocabulary vocab = Vocabulary::from_manifest(train);
  std::vector<TrainResult> out(parts.size());
  parallel_for(parts.size(), jobs, [&](std::size_t k) {
    const auto samples = make_samples(parts[k], features, vocab);
    out[k] = lenbias::train(samples, vocab, static_cast<int>(features.dim()), config);
  });
  return out;
}

SimilarityMatrix fuse(const std::vector<SimilarityMatrix>& matrices,
                      const FusionSpec& spec) {
  const auto w = spec.weights();
  if (matrices.size() != w.size()) {
    throw InvalidArgument("fuse: got " + std::to_string(matrices.size()) +
                          " matrices for " + std::to_string(w.size()) + " splits");
  }
  SimilarityMatrix out;
  out.orientation = matrices.front().orientation;
  out.scores = RowMatrix::Zero(matrices.front().scores.rows(),
                               matrices.front().scores.cols());
  for (std::size_t k = 0; k < matrices.size(); ++k) {
    const auto& m = matrices[k];
    if (m.orientation != out.orientation || m.scores.rows() != out.scores.rows() ||
        m.scores.cols() != out.scores.cols()) {
      throw InvalidArgument("fuse: matrices differ in shape or orientation");
    }
    if (w[k] == 1.0) {
      out.scores += m.scores;
    } else {
      out.scores += w[k] * m.scores;
    }
  }
  return out;
}

SimilarityMatrix ensemble(const Manifest& train, const FeatureMatrix& train_features,
                          const Manifest& test, const FeatureMatrix& test_features,
                          const TrainConfig& config,
                          const std::vector<std::uint64_t>& seeds, int jobs) {
  if (seeds.empty()) throw InvalidArgument("ensemble: no seeds");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw InvalidArgument("ensemble: seeds must be distinct");
  }
  const Vocabulary vocab = Vocabulary::from_manifest(train);
  const auto samples = make_samples(train, train_features, vocab);
  std::vector<SimilarityMatrix> mats(seeds.size());
  parallel_for(seeds.size(), jobs, [&](std::size_t k) {
    TrainConfig c = config;
    c.seed = seeds[k];
    const auto model =
        lenbias::train(samples, vocab, static_cast<int>(train_features.dim()), c);
    mats[k] = similarity_matrix(model.params, test, test, test_features);
  });
  FusionSpec spec;
  spec.split_sizes.assign(seeds.size(), 1);
  return fuse(mats, spec);
}

}  // namespace lenbias
