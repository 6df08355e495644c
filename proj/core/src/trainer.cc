#include "lenbias/trainer.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "lenbias/error.h"
#include "lenbias/random.h"

namespace lenbias {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

ordered_json config_json(const TrainConfig& c) {
  ordered_json j;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["momentum"] = c.momentum;
  j["margin"] = c.margin;
  j["negatives"] = to_string(c.negatives);
  j["seed"] = c.seed;
  j["embed_dim"] = c.embed_dim;
  return j;
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.momentum = j.value("momentum", c.momentum);
  c.margin = j.value("margin", c.margin);
  c.negatives = parse_negative_strategy(j.value("negatives", std::string("hardest")));
  c.seed = j.value("seed", c.seed);
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  return c;
}

}  // namespace

TrainConfig train_config_from_json(const std::string& text) {
  try {
    TrainConfig c = config_from_json(json::parse(text));
    c.check();
    return c;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("train config: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ValidationError(std::string("train config: ") + e.what());
  }
}

std::string train_config_to_json(const TrainConfig& config) {
  return config_json(config).dump(2);
}

ModelParams init_params(const Vocabulary& vocab, int feature_dim,
                        const TrainConfig& config) {
  ModelParams p(vocab, config.embed_dim, feature_dim);
  p.randomize(config.seed, kInitScale);
  return p;
}

TrainResult train(const std::vector<Sample>& samples, const Vocabulary& vocab,
                  int feature_dim, const TrainConfig& config) {
  config.check();
  TrainResult out;
  out.config = config;
  out.params = init_params(vocab, feature_dim, config);
  if (config.epochs == 0) return out;
  if (samples.size() < 2) throw InvalidArgument("train: need at least 2 samples");

  std::vector<const Sample*> canonical;
  canonical.reserve(samples.size());
  for (const auto& s : samples) canonical.push_back(&s);
  std::sort(canonical.begin(), canonical.end(),
            [](const Sample* a, const Sample* b) { return a->clip_id < b->clip_id; });

  // The shuffle stream is decorrelated from the initialization stream.
  Rng rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<double> velocity(out.params.size(), 0.0);
  auto& theta = out.params.values();
  const auto bs = static_cast<std::size_t>(config.batch_size);
  std::vector<const Sample*> batch;

  for (std::int64_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<const Sample*> order = canonical;
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      if (end - start < 2) break;
      batch.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                   order.begin() + static_cast<std::ptrdiff_t>(end));
      const LossResult r = batch_loss(batch, out.params, config);
      const auto& g = r.grad.values();
      for (std::size_t k = 0; k < theta.size(); ++k) {
        velocity[k] = config.momentum * velocity[k] + g[k];
        theta[k] -= config.learning_rate * velocity[k];
      }
      loss_sum += r.loss;
      ++batches;
    }
    out.epoch_loss.push_back(batches ? loss_sum / static_cast<double>(batches) : 0.0);
  }
  if (!out.params.all_finite()) throw Error("train: parameters diverged");
  return out;
}

TrainResult train(const Manifest& manifest, const FeatureMatrix& features,
                  const TrainConfig& config) {
  const Vocabulary vocab = Vocabulary::from_manifest(manifest);
  const auto samples = make_samples(manifest, features, vocab);
  return train(samples, vocab, static_cast<int>(features.dim()), config);
}

SimilarityMatrix similarity_matrix(const ModelParams& params,
                                   const Manifest& queries,
                                   const Manifest& gallery,
                                   const FeatureMatrix& features) {
  std::vector<Embedding> texts;
  texts.reserve(queries.clips.size());
  for (const auto& c : queries.clips) {
    texts.push_back(encode_text(encode_caption(c.caption, params.vocab()), params));
  }
  const auto videos_src = make_samples(gallery, features, params.vocab());
  std::vector<Embedding> videos;
  videos.reserve(videos_src.size());
  for (const auto& s : videos_src) videos.push_back(encode_video(s.frames, params));

  SimilarityMatrix out;
  out.orientation = Orientation::kT2V;
  out.scores.resize(static_cast<Eigen::Index>(texts.size()),
                    static_cast<Eigen::Index>(videos.size()));
  for (std::size_t q = 0; q < texts.size(); ++q) {
    for (std::size_t g = 0; g < videos.size(); ++g) {
      out.scores(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(g)) =
          similarity(videos[g], texts[q]);
    }
  }
  return out;
}

GradCheckResult grad_check(const ModelParams& params,
                           const std::vector<const Sample*>& batch,
                           const TrainConfig& config,
                           const GradCheckOptions& options) {
  if (!(options.h > 0.0)) throw InvalidArgument("grad_check: h must be > 0");
  LossResult analytic = batch_loss(batch, params, config);
  auto& a = analytic.grad.values();
  if (options.corrupt_coordinate) {
    if (*options.corrupt_coordinate >= a.size()) {
      throw InvalidArgument("grad_check: corrupt coordinate out of range");
    }
    a[*options.corrupt_coordinate] += 1.0;
  }

  std::vector<std::size_t> coords(params.size());
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  if (coords.size() > options.max_coords) {
    Rng rng(options.seed);
    rng.shuffle(coords);
    coords.resize(options.max_coords);
    if (options.corrupt_coordinate &&
        std::find(coords.begin(), coords.end(), *options.corrupt_coordinate) == coords.end()) {
      coords.back() = *options.corrupt_coordinate;
    }
    std::sort(coords.begin(), coords.end());
  }

  GradCheckResult out;
  ModelParams probe = params;
  auto& theta = probe.values();
  for (std::size_t k : coords) {
    const double orig = theta[k];
    theta[k] = orig + options.h;
    const double up = batch_loss_value(batch, probe, config);
    theta[k] = orig - options.h;
    const double down = batch_loss_value(batch, probe, config);
    theta[k] = orig;
    const double numeric = (up - down) / (2.0 * options.h);
    const double denom = std::max({std::abs(a[k]), std::abs(numeric), options.abs_floor});
    const double rel = std::abs(a[k] - numeric) / denom;
    if (rel > out.max_rel_error) {
      out.max_rel_error = rel;
      out.worst_coordinate = k;
    }
    ++out.coords_checked;
  }
  return out;
}

void save_params(const ModelParams& params, const TrainConfig& config,
                 const std::filesystem::path& path) {
  ordered_json j;
  j["format"] = "lenbias-model";
  j["version"] = 1;
  j["embed_dim"] = params.embed_dim();
  j["feature_dim"] = params.feature_dim();
  j["vocab"] = params.vocab().tokens();
  j["train_config"] = config_json(config);
  auto tensor = [](const auto& m) {
    ordered_json t;
    t["shape"] = {m.rows(), m.cols()};
    t["data"] = std::vector<double>(m.data(), m.data() + m.size());
    return t;
  };
  ordered_json tensors;
  tensors["token_table"] = tensor(params.token_table());
  tensors["role_matrix"] = tensor(params.role_matrix());
  tensors["graph_matrix"] = tensor(params.graph_matrix());
  const char* levels[kLevels] = {"e", "a", "o"};
  for (int x = 0; x < kLevels; ++x) {
    tensors[std::string("video_proj_") + levels[x]] = tensor(params.video_proj(x));
    tensors[std::string("video_attn_") + levels[x]] = tensor(params.video_attn(x));
  }
  j["tensors"] = std::move(tensors);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump() << '\n';
}

ModelParams load_params(const std::filesystem::path& path, TrainConfig* config) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open model " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("model " + path.string() + ": " + e.what());
  }
  try {
    if (j.at("format") != "lenbias-model") throw ValidationError("not a lenbias model file");
    auto tokens = j.at("vocab").get<std::vector<std::string>>();
    if (tokens.empty() || tokens.front() != "<unk>") {
      throw ValidationError("model vocab must start with <unk>");
    }
    tokens.erase(tokens.begin());
    ModelParams p(Vocabulary(std::move(tokens)), j.at("embed_dim").get<int>(),
                  j.at("feature_dim").get<int>());
    const auto& t = j.at("tensors");
    auto fill = [&](const std::string& name, auto dst) {
      const auto data = t.at(name).at("data").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(data.size()) != dst.size()) {
        throw ValidationError("model tensor " + name + " has wrong size");
      }
      std::copy(data.begin(), data.end(), dst.data());
    };
    fill("token_table", p.token_table());
    fill("role_matrix", p.role_matrix());
    fill("graph_matrix", p.graph_matrix());
    const char* levels[kLevels] = {"e", "a", "o"};
    for (int x = 0; x < kLevels; ++x) {
      fill(std::string("video_proj_") + levels[x], p.video_proj(x));
      fill(std::string("video_attn_") + levels[x], p.video_attn(x));
    }
    if (!p.all_finite()) throw ValidationError("model has non-finite values");
    if (config) *config = config_from_json(j.at("train_config"));
    return p;
  } catch (const json::exception& e) {
    throw ValidationError("model " + path.string() + ": " + e.what());
  }
}

}  // namespace lenbias
