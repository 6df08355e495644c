#include "fixtures.h"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

namespace lenbias::testing {

Clip make_clip(const std::string& id, std::vector<int> verbs, std::vector<int> nouns,
               std::int64_t frame_length, std::int64_t feature_row,
               std::int64_t feature_rows, SplitTag split) {
  Clip c;
  c.clip_id = id;
  c.split = split;
  std::sort(verbs.begin(), verbs.end());
  std::sort(nouns.begin(), nouns.end());
  c.verb_classes = verbs;
  c.noun_classes = nouns;
  for (int v : verbs) c.caption.push_back({"verb_" + std::to_string(v), Role::kAction});
  for (int n : nouns) c.caption.push_back({"noun_" + std::to_string(n), Role::kEntity});
  c.frame_length = frame_length;
  c.feature_row = feature_row;
  c.feature_rows = feature_rows;
  return c;
}

Manifest make_manifest(std::vector<Clip> clips, int feature_dim,
                       const std::string& feature_file) {
  Manifest m;
  m.feature_dim = feature_dim;
  m.feature_file = feature_file;
  for (const auto& c : clips) {
    for (int v : c.verb_classes) m.verb_dict[v] = "verb_" + std::to_string(v);
    for (int n : c.noun_classes) m.noun_dict[n] = "noun_" + std::to_string(n);
  }
  m.clips = std::move(clips);
  return m;
}

Manifest random_manifest(Rng& rng, int n, int n_verbs, int n_nouns,
                         std::int64_t max_len, std::int64_t first_row,
                         SplitTag split, const std::string& id_prefix) {
  std::vector<Clip> clips;
  for (int i = 0; i < n; ++i) {
    const int v = static_cast<int>(rng.below(n_verbs));
    const int o = static_cast<int>(rng.below(n_nouns));
    const auto len = 1 + static_cast<std::int64_t>(rng.below(max_len));
    clips.push_back(make_clip(id_prefix + std::to_string(i), {v}, {o}, len,
                              first_row + i, 1, split));
  }
  return make_manifest(std::move(clips));
}

std::vector<Clip> class_clips(const std::string& prefix, int verb, int noun,
                              const std::vector<std::int64_t>& lengths,
                              SplitTag split) {
  std::vector<Clip> out;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    out.push_back(make_clip(prefix + std::to_string(i), {verb}, {noun}, lengths[i],
                            static_cast<std::int64_t>(i), 1, split));
  }
  return out;
}

FeatureMatrix random_features(Rng& rng, std::int64_t rows, std::int64_t dim) {
  std::vector<float> data(static_cast<std::size_t>(rows * dim));
  for (auto& x : data) x = static_cast<float>(rng.normal());
  return FeatureMatrix(rows, dim, std::move(data));
}

std::vector<std::string> ids_of(const Manifest& m) {
  std::vector<std::string> ids;
  for (const auto& c : m.clips) ids.push_back(c.clip_id);
  return ids;
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("lenbias_test_" + std::to_string(::getpid()) + "_" +
           std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

}  // namespace lenbias::testing
