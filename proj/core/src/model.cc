#include "lenbias/model.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "lenbias/error.h"
#include "lenbias/random.h"

namespace lenbias {

namespace {

constexpr double kMinNorm = 1e-12;

enum NodeRole { kEventNode = 0, kActionNode = 1, kEntityNode = 2 };

// Stable softmax of `scores` into `out`.
void softmax(const Eigen::VectorXd& scores, Eigen::VectorXd& out) {
  const double mx = scores.maxCoeff();
  out = (scores.array() - mx).exp();
  out /= out.sum();
}

struct TextCache {
  std::vector<int> role;
  std::vector<std::vector<int>> tokens;  // tokens feeding each node's base
  std::vector<std::vector<int>> nbrs;
  std::vector<Eigen::VectorXd> beta;
  RowMatrix base;
  RowMatrix g0;
  RowMatrix msg;
  RowMatrix g1;
  int n_actions = 0;
  int n_entities = 0;
  Embedding out;
};

TextCache text_forward(const EncodedCaption& caption, const ModelParams& params) {
  if (caption.actions.empty() || caption.entities.empty()) {
    throw InvalidArgument("encode_text: caption needs an action and an entity token");
  }
  const int d = params.embed_dim();
  const auto tokens = params.token_table();
  const auto roles = params.role_matrix();
  const auto wt = params.graph_matrix();

  TextCache c;
  c.n_actions = static_cast<int>(caption.actions.size());
  c.n_entities = static_cast<int>(caption.entities.size());
  const int n = 1 + c.n_actions + c.n_entities;
  c.role.resize(n);
  c.tokens.resize(n);
  c.nbrs.resize(n);

  c.role[0] = kEventNode;
  for (int t : caption.actions) c.tokens[0].push_back(t);
  for (int t : caption.entities) c.tokens[0].push_back(t);
  for (int a = 0; a < c.n_actions; ++a) {
    c.role[1 + a] = kActionNode;
    c.tokens[1 + a] = {caption.actions[a]};
  }
  for (int e = 0; e < c.n_entities; ++e) {
    c.role[1 + c.n_actions + e] = kEntityNode;
    c.tokens[1 + c.n_actions + e] = {caption.entities[e]};
  }
  for (int a = 0; a < c.n_actions; ++a) {
    const int ai = 1 + a;
    c.nbrs[0].push_back(ai);
    c.nbrs[ai].push_back(0);
    for (int e = 0; e < c.n_entities; ++e) {
      const int ei = 1 + c.n_actions + e;
      c.nbrs[ai].push_back(ei);
      c.nbrs[ei].push_back(ai);
    }
  }

  c.base = RowMatrix::Zero(n, d);
  for (int i = 0; i < n; ++i) {
    for (int t : c.tokens[i]) c.base.row(i) += tokens.row(t);
    c.base.row(i) /= static_cast<double>(c.tokens[i].size());
  }
  c.g0.resize(n, d);
  for (int i = 0; i < n; ++i) {
    c.g0.row(i) = c.base.row(i).cwiseProduct(roles.row(c.role[i]));
  }

  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  c.msg = RowMatrix::Zero(n, d);
  c.beta.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto& nb = c.nbrs[i];
    Eigen::VectorXd scores(static_cast<Eigen::Index>(nb.size()));
    for (std::size_t k = 0; k < nb.size(); ++k) {
      scores(static_cast<Eigen::Index>(k)) = c.g0.row(i).dot(c.g0.row(nb[k])) * inv_sqrt_d;
    }
    softmax(scores, c.beta[i]);
    for (std::size_t k = 0; k < nb.size(); ++k) {
      c.msg.row(i) += c.beta[i](static_cast<Eigen::Index>(k)) * c.g0.row(nb[k]);
    }
  }
  c.g1 = c.g0 + c.msg * wt.transpose();

  c.out[0] = c.g1.row(0).transpose();
  c.out[1] = c.g1.middleRows(1, c.n_actions).colwise().mean().transpose();
  c.out[2] = c.g1.middleRows(1 + c.n_actions, c.n_entities).colwise().mean().transpose();
  return c;
}

void text_backward(const TextCache& c, const Embedding& d_out,
                   const ModelParams& params, ModelParams& grad) {
  const int d = params.embed_dim();
  const int n = static_cast<int>(c.role.size());
  const auto roles = params.role_matrix();
  const auto wt = params.graph_matrix();
  auto g_tokens = grad.token_table();
  auto g_roles = grad.role_matrix();
  auto g_wt = grad.graph_matrix();
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

  RowMatrix dg1(n, d);
  dg1.row(0) = d_out[0].transpose();
  for (int a = 0; a < c.n_actions; ++a) {
    dg1.row(1 + a) = d_out[1].transpose() / static_cast<double>(c.n_actions);
  }
  for (int e = 0; e < c.n_entities; ++e) {
    dg1.row(1 + c.n_actions + e) = d_out[2].transpose() / static_cast<double>(c.n_entities);
  }

  // g1 = g0 + msg * Wt^T
  g_wt.noalias() += dg1.transpose() * c.msg;
  const RowMatrix dmsg = dg1 * wt;
  RowMatrix dg0 = dg1;

  for (int i = 0; i < n; ++i) {
    const auto& nb = c.nbrs[i];
    const auto& beta = c.beta[i];
    Eigen::VectorXd dbeta(static_cast<Eigen::Index>(nb.size()));
    for (std::size_t k = 0; k < nb.size(); ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      dbeta(kk) = dmsg.row(i).dot(c.g0.row(nb[k]));
      dg0.row(nb[k]) += beta(kk) * dmsg.row(i);
    }
    const double weighted = beta.dot(dbeta);
    for (std::size_t k = 0; k < nb.size(); ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      const double de = beta(kk) * (dbeta(kk) - weighted) * inv_sqrt_d;
      dg0.row(i) += de * c.g0.row(nb[k]);
      dg0.row(nb[k]) += de * c.g0.row(i);
    }
  }

  for (int i = 0; i < n; ++i) {
    g_roles.row(c.role[i]) += dg0.row(i).cwiseProduct(c.base.row(i));
    const Eigen::RowVectorXd dbase = dg0.row(i).cwiseProduct(roles.row(c.role[i]));
    const double share = 1.0 / static_cast<double>(c.tokens[i].size());
    for (int t : c.tokens[i]) g_tokens.row(t) += share * dbase;
  }
}

struct VideoCache {
  std::array<Eigen::VectorXd, kLevels> alpha;
  std::array<Eigen::VectorXd, kLevels> pooled;
  Embedding out;
};

VideoCache video_forward(const RowMatrix& frames, const ModelParams& params) {
  if (frames.rows() < 1) throw InvalidArgument("encode_video: no frames");
  if (frames.cols() != params.feature_dim()) {
    throw InvalidArgument("encode_video: frame dim " + std::to_string(frames.cols()) +
                          " != model feature dim " +
                          std::to_string(params.feature_dim()));
  }
  VideoCache c;
  for (int x = 0; x < kLevels; ++x) {
    const Eigen::VectorXd scores = frames * params.video_attn(x);
    softmax(scores, c.alpha[x]);
    c.pooled[x] = frames.transpose() * c.alpha[x];
    c.out[x] = params.video_proj(x) * c.pooled[x];
  }
  return c;
}

void video_backward(const RowMatrix& frames, const VideoCache& c,
                    const Embedding& d_out, const ModelParams& params,
                    ModelParams& grad) {
  for (int x = 0; x < kLevels; ++x) {
    grad.video_proj(x).noalias() += d_out[x] * c.pooled[x].transpose();
    const Eigen::VectorXd dpooled = params.video_proj(x).transpose() * d_out[x];
    const Eigen::VectorXd dalpha = frames * dpooled;
    const double weighted = c.alpha[x].dot(dalpha);
    const Eigen::VectorXd dscore =
        c.alpha[x].array() * (dalpha.array() - weighted);
    grad.video_attn(x).noalias() += frames.transpose() * dscore;
  }
}

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na < kMinNorm || nb < kMinNorm) {
    throw InvalidArgument("similarity: degenerate zero-norm embedding");
  }
  return a.dot(b) / (na * nb);
}

// Loss and dL/dS for the similarity matrix S(i, j) = s(video_i, caption_j).
double hinge_terms(const RowMatrix& s, const TrainConfig& config, RowMatrix* ds) {
  const Eigen::Index b = s.rows();
  const double inv_b = 1.0 / static_cast<double>(b);
  double loss = 0.0;
  if (ds) ds->setZero(b, b);
  for (Eigen::Index i = 0; i < b; ++i) {
    const double pos = s(i, i);
    if (config.negatives == NegativeStrategy::kHardest) {
      Eigen::Index jc = -1;  // hardest negative caption for video i
      Eigen::Index jv = -1;  // hardest negative video for caption i
      for (Eigen::Index j = 0; j < b; ++j) {
        if (j == i) continue;
        if (jc < 0 || s(i, j) > s(i, jc)) jc = j;
        if (jv < 0 || s(j, i) > s(jv, i)) jv = j;
      }
      const double t1 = config.margin + s(i, jc) - pos;
      const double t2 = config.margin + s(jv, i) - pos;
      if (t1 > 0.0) {
        loss += t1;
        if (ds) {
          (*ds)(i, jc) += inv_b;
          (*ds)(i, i) -= inv_b;
        }
      }
      if (t2 > 0.0) {
        loss += t2;
        if (ds) {
          (*ds)(jv, i) += inv_b;
          (*ds)(i, i) -= inv_b;
        }
      }
    } else {
      const double w = inv_b / static_cast<double>(b - 1);
      double sum = 0.0;
      for (Eigen::Index j = 0; j < b; ++j) {
        if (j == i) continue;
        const double t1 = config.margin + s(i, j) - pos;
        const double t2 = config.margin + s(j, i) - pos;
        if (t1 > 0.0) {
          sum += t1;
          if (ds) {
            (*ds)(i, j) += w;
            (*ds)(i, i) -= w;
          }
        }
        if (t2 > 0.0) {
          sum += t2;
          if (ds) {
            (*ds)(j, i) += w;
            (*ds)(i, i) -= w;
          }
        }
      }
      loss += sum / static_cast<double>(b - 1);
    }
  }
  return loss * inv_b;
}

double batch_forward(const std::vector<const Sample*>& batch,
                     const ModelParams& params, const TrainConfig& config,
                     ModelParams* grad) {
  const auto b = static_cast<Eigen::Index>(batch.size());
  if (b < 2) throw InvalidArgument("batch_loss: batch needs at least 2 pairs");

  std::vector<VideoCache> videos;
  std::vector<TextCache> texts;
  videos.reserve(batch.size());
  texts.reserve(batch.size());
  for (const Sample* s : batch) {
    videos.push_back(video_forward(s->frames, params));
    texts.push_back(text_forward(s->caption, params));
  }

  RowMatrix sim(b, b);
  for (Eigen::Index i = 0; i < b; ++i) {
    for (Eigen::Index j = 0; j < b; ++j) {
      sim(i, j) = similarity(videos[i].out, texts[j].out);
    }
  }
  RowMatrix ds;
  const double loss = hinge_terms(sim, config, grad ? &ds : nullptr);
  if (!grad) return loss;

  const int d = params.embed_dim();
  std::vector<Embedding> dv(batch.size());
  std::vector<Embedding> dc(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (int x = 0; x < kLevels; ++x) {
      dv[i][x] = Eigen::VectorXd::Zero(d);
      dc[i][x] = Eigen::VectorXd::Zero(d);
    }
  }
  for (Eigen::Index i = 0; i < b; ++i) {
    for (Eigen::Index j = 0; j < b; ++j) {
      const double w = ds(i, j);
      if (w == 0.0) continue;
      for (int x = 0; x < kLevels; ++x) {
        const auto& v = videos[i].out[x];
        const auto& c = texts[j].out[x];
        const double nv = v.norm();
        const double nc = c.norm();
        const double cs = v.dot(c) / (nv * nc);
        dv[i][x] += w * (c / (nv * nc) - cs * v / (nv * nv));
        dc[j][x] += w * (v / (nv * nc) - cs * c / (nc * nc));
      }
    }
  }
  for (std::size_t i = 0; i < batch.size(); ++i) {
    video_backward(batch[i]->frames, videos[i], dv[i], params, *grad);
    text_backward(texts[i], dc[i], params, *grad);
  }
  return loss;
}

}  // namespace

const char* to_string(NegativeStrategy s) {
  return s == NegativeStrategy::kHardest ? "hardest" : "all";
}

NegativeStrategy parse_negative_strategy(const std::string& s) {
  if (s == "hardest") return NegativeStrategy::kHardest;
  if (s == "all") return NegativeStrategy::kAll;
  throw InvalidArgument("unknown negative strategy \"" + s + "\"");
}

void TrainConfig::check() const {
  if (epochs < 0) throw InvalidArgument("epochs must be >= 0");
  if (batch_size < 2) throw InvalidArgument("batch_size must be >= 2");
  if (!(margin >= 0.0)) throw InvalidArgument("margin must be >= 0");
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw InvalidArgument("momentum must lie in [0, 1)");
  }
  if (embed_dim < 1) throw InvalidArgument("embed_dim must be >= 1");
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  tokens_.push_back("<unk>");
  index_["<unk>"] = 0;
  for (auto& t : tokens) {
    if (index_.contains(t)) continue;
    index_[t] = static_cast<int>(tokens_.size());
    tokens_.push_back(std::move(t));
  }
}

Vocabulary Vocabulary::from_manifest(const Manifest& manifest) {
  std::set<std::string> names;
  for (const auto& [id, name] : manifest.verb_dict) names.insert(name);
  for (const auto& [id, name] : manifest.noun_dict) names.insert(name);
  return Vocabulary(std::vector<std::string>(names.begin(), names.end()));
}

int Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? 0 : it->second;
}

ModelParams::ModelParams(Vocabulary vocab, int embed_dim, int feature_dim)
    : vocab_(std::move(vocab)), d_(embed_dim), feat_dim_(feature_dim) {
  if (d_ < 1 || feat_dim_ < 1) throw InvalidArgument("ModelParams: bad dimensions");
  const std::size_t d = static_cast<std::size_t>(d_);
  const std::size_t fd = static_cast<std::size_t>(feat_dim_);
  off_tokens_ = 0;
  off_roles_ = off_tokens_ + static_cast<std::size_t>(vocab_.size()) * d;
  off_graph_ = off_roles_ + kRoles * d;
  off_proj_ = off_graph_ + d * d;
  off_attn_ = off_proj_ + kLevels * d * fd;
  data_.assign(off_attn_ + kLevels * fd, 0.0);
}

ModelParams ModelParams::zeros_like() const {
  ModelParams out = *this;
  std::fill(out.data_.begin(), out.data_.end(), 0.0);
  return out;
}

void ModelParams::randomize(std::uint64_t seed, double scale) {
  Rng rng(seed);
  for (auto& v : data_) v = rng.uniform(-scale, scale);
}

bool ModelParams::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

EncodedCaption encode_caption(const std::vector<Token>& caption,
                              const Vocabulary& vocab) {
  EncodedCaption out;
  for (const auto& t : caption) {
    (t.role == Role::kAction ? out.actions : out.entities).push_back(vocab.id(t.text));
  }
  return out;
}

std::vector<Sample> make_samples(const Manifest& manifest,
                                 const FeatureMatrix& features,
                                 const Vocabulary& vocab) {
  if (manifest.feature_dim != features.dim()) {
    throw ValidationError("manifest feature_dim does not match feature file");
  }
  std::vector<Sample> out;
  out.reserve(manifest.clips.size());
  for (const auto& c : manifest.clips) {
    if (c.feature_row < 0 || c.feature_row + c.feature_rows > features.rows()) {
      throw ValidationError(c.clip_id + ": feature block out of range");
    }
    Sample s;
    s.clip_id = c.clip_id;
    s.caption = encode_caption(c.caption, vocab);
    s.frames.resize(c.feature_rows, features.dim());
    for (std::int64_t r = 0; r < c.feature_rows; ++r) {
      const auto row = features.row(c.feature_row + r);
      for (std::int64_t k = 0; k < features.dim(); ++k) {
        s.frames(r, k) = static_cast<double>(row[static_cast<std::size_t>(k)]);
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

Embedding encode_text(const EncodedCaption& caption, const ModelParams& params) {
  return text_forward(caption, params).out;
}

Embedding encode_video(const RowMatrix& frames, const ModelParams& params) {
  return video_forward(frames, params).out;
}

double similarity(const Embedding& video, const Embedding& text) {
  double s = 0.0;
  for (int x = 0; x < kLevels; ++x) s += cosine(video[x], text[x]);
  return s;
}

LossResult batch_loss(const std::vector<const Sample*>& batch,
                      const ModelParams& params, const TrainConfig& config) {
  LossResult out;
  out.grad = params.zeros_like();
  out.loss = batch_forward(batch, params, config, &out.grad);
  return out;
}

double batch_loss_value(const std::vector<const Sample*>& batch,
                        const ModelParams& params, const TrainConfig& config) {
  return batch_forward(batch, params, config, nullptr);
}

}  // namespace lenbias
