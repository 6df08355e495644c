#ifndef LENBIAS_TESTS_SUPPORT_FIXTURES_H_
#define LENBIAS_TESTS_SUPPORT_FIXTURES_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lenbias/feature_io.h"
#include "lenbias/manifest.h"
#include "lenbias/random.h"

namespace lenbias::testing {

// Clip whose caption has one action token "verb_<v>" per verb class and one
// entity token "noun_<n>" per noun class.
Clip make_clip(const std::string& id, std::vector<int> verbs, std::vector<int> nouns,
               std::int64_t frame_length, std::int64_t feature_row = 0,
               std::int64_t feature_rows = 1, SplitTag split = SplitTag::kTrain);

// Manifest over `clips` whose dictionaries name every referenced class id.
Manifest make_manifest(std::vector<Clip> clips, int feature_dim = 4,
                       const std::string& feature_file = "features.fvb");

// Single-class clips with lengths in [1, max_len] and consecutive one-row
// feature blocks starting at `first_row`.
Manifest random_manifest(Rng& rng, int n, int n_verbs, int n_nouns,
                         std::int64_t max_len, std::int64_t first_row = 0,
                         SplitTag split = SplitTag::kTrain,
                         const std::string& id_prefix = "c");

// Clips of a single class with the given lengths, ids "<prefix><i>".
std::vector<Clip> class_clips(const std::string& prefix, int verb, int noun,
                              const std::vector<std::int64_t>& lengths,
                              SplitTag split = SplitTag::kTrain);

FeatureMatrix random_features(Rng& rng, std::int64_t rows, std::int64_t dim);

std::vector<std::string> ids_of(const Manifest& m);

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace lenbias::testing

#endif  // LENBIAS_TESTS_SUPPORT_FIXTURES_H_
