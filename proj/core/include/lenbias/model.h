#ifndef LENBIAS_MODEL_H_
#define LENBIAS_MODEL_H_

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "lenbias/feature_io.h"
#include "lenbias/manifest.h"
#include "lenbias/matrix.h"

namespace lenbias {

// Embedding levels shared by both towers: event (whole caption / global
// video), action, and entity (object).
inline constexpr int kLevels = 3;
// Rows of the semantic-role matrix: event node, action node, entity node.
inline constexpr int kRoles = 3;

enum class NegativeStrategy { kHardest, kAll };

const char* to_string(NegativeStrategy s);
NegativeStrategy parse_negative_strategy(const std::string& s);

struct TrainConfig {
  std::int64_t epochs = 30;
  std::int64_t batch_size = 32;
  double learning_rate = 0.03;
  double momentum = 0.9;
  double margin = 0.2;
  NegativeStrategy negatives = NegativeStrategy::kHardest;
  std::uint64_t seed = 0;
  int embed_dim = 32;

  // Throws InvalidArgument on margin < 0, batch_size < 2, and the like.
  void check() const;
};

// Token vocabulary. Id 0 is reserved for tokens not seen at build time.
class Vocabulary {
 public:
  Vocabulary() : tokens_{"<unk>"} { index_["<unk>"] = 0; }
  explicit Vocabulary(std::vector<std::string> tokens);

  // All class names of the manifest's dictionaries, sorted.
  static Vocabulary from_manifest(const Manifest& manifest);

  int id(const std::string& token) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// All learnable tensors of the matcher in one flat buffer, which is also the
// layout used for gradients, optimizer state and finite-difference checks.
//
//   token_table   vocab x d    token embeddings
//   role_matrix   3 x d        per-role scaling of initial node embeddings
//   graph_matrix  d x d        relation transform of the attention update
//   video_proj[x] d x D        frame projection per level
//   video_attn[x] D            frame attention scorer per level
class ModelParams {
 public:
  using MatMap = Eigen::Map<RowMatrix>;
  using ConstMatMap = Eigen::Map<const RowMatrix>;
  using VecMap = Eigen::Map<Eigen::VectorXd>;
  using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

  ModelParams() = default;
  ModelParams(Vocabulary vocab, int embed_dim, int feature_dim);

  // Same shapes, all zeros.
  ModelParams zeros_like() const;
  // Entries drawn from uniform(-scale, scale).
  void randomize(std::uint64_t seed, double scale);

  const Vocabulary& vocab() const { return vocab_; }
  int embed_dim() const { return d_; }
  int feature_dim() const { return feat_dim_; }

  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }
  std::size_t size() const { return data_.size(); }

  MatMap token_table() { return mat(off_tokens_, vocab_.size(), d_); }
  ConstMatMap token_table() const { return mat(off_tokens_, vocab_.size(), d_); }
  MatMap role_matrix() { return mat(off_roles_, kRoles, d_); }
  ConstMatMap role_matrix() const { return mat(off_roles_, kRoles, d_); }
  MatMap graph_matrix() { return mat(off_graph_, d_, d_); }
  ConstMatMap graph_matrix() const { return mat(off_graph_, d_, d_); }
  MatMap video_proj(int level) { return mat(proj_offset(level), d_, feat_dim_); }
  ConstMatMap video_proj(int level) const { return mat(proj_offset(level), d_, feat_dim_); }
  VecMap video_attn(int level) { return vec(attn_offset(level), feat_dim_); }
  ConstVecMap video_attn(int level) const { return vec(attn_offset(level), feat_dim_); }

  bool all_finite() const;
  bool operator==(const ModelParams& o) const {
    return vocab_ == o.vocab_ && d_ == o.d_ && feat_dim_ == o.feat_dim_ && data_ == o.data_;
  }

 private:
  std::size_t proj_offset(int level) const {
    return off_proj_ + static_cast<std::size_t>(level) * d_ * feat_dim_;
  }
  std::size_t attn_offset(int level) const {
    return off_attn_ + static_cast<std::size_t>(level) * feat_dim_;
  }
  MatMap mat(std::size_t off, int rows, int cols) {
    return MatMap(data_.data() + off, rows, cols);
  }
  ConstMatMap mat(std::size_t off, int rows, int cols) const {
    return ConstMatMap(data_.data() + off, rows, cols);
  }
  VecMap vec(std::size_t off, int n) { return VecMap(data_.data() + off, n); }
  ConstVecMap vec(std::size_t off, int n) const {
    return ConstVecMap(data_.data() + off, n);
  }

  Vocabulary vocab_;
  int d_ = 0;
  int feat_dim_ = 0;
  std::size_t off_tokens_ = 0;
  std::size_t off_roles_ = 0;
  std::size_t off_graph_ = 0;
  std::size_t off_proj_ = 0;
  std::size_t off_attn_ = 0;
  std::vector<double> data_;
};

// Caption as token ids grouped by role.
struct EncodedCaption {
  std::vector<int> actions;
  std::vector<int> entities;
};

// One positive (video, caption) pair ready for the model.
struct Sample {
  std::string clip_id;
  EncodedCaption caption;
  RowMatrix frames;  // feature_rows x D
};

EncodedCaption encode_caption(const std::vector<Token>& caption,
                              const Vocabulary& vocab);
std::vector<Sample> make_samples(const Manifest& manifest,
                                 const FeatureMatrix& features,
                                 const Vocabulary& vocab);

using Embedding = std::array<Eigen::VectorXd, kLevels>;

// Caption graph: one event node (mean token embedding) linked to every action
// node, every action node linked to every entity node. Initial node states are
// the base embeddings scaled element-wise by their role row; one residual
// graph-attention update with scaled dot-product attention follows. Returns
// (event node, mean action node, mean entity node).
Embedding encode_text(const EncodedCaption& caption, const ModelParams& params);

// Per level x: attention weights softmax(u_x . f_i) over frames, output
// W_x * sum_i alpha_i f_i.
Embedding encode_video(const RowMatrix& frames, const ModelParams& params);

// Sum of the three per-level cosine similarities, in [-3, 3].
double similarity(const Embedding& video, const Embedding& text);

struct LossResult {
  double loss = 0.0;
  ModelParams grad;
};

// Bidirectional hinged margin loss with in-batch negatives, averaged over
// anchors, and its exact gradient.
LossResult batch_loss(const std::vector<const Sample*>& batch,
                      const ModelParams& params, const TrainConfig& config);
double batch_loss_value(const std::vector<const Sample*>& batch,
                        const ModelParams& params, const TrainConfig& config);

}  // namespace lenbias

#endif  // LENBIAS_MODEL_H_
