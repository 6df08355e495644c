#ifndef LENBIAS_FEATURE_IO_H_
#define LENBIAS_FEATURE_IO_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lenbias/manifest.h"

namespace lenbias {

// Row-major float32 frame features. Immutable once loaded.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::int64_t rows, std::int64_t dim, std::vector<float> data);

  std::int64_t rows() const { return rows_; }
  std::int64_t dim() const { return dim_; }
  const std::vector<float>& data() const { return data_; }

  std::span<const float> row(std::int64_t r) const {
    return {data_.data() + r * dim_, static_cast<std::size_t>(dim_)};
  }
  float at(std::int64_t r, std::int64_t c) const { return data_[r * dim_ + c]; }

  bool operator==(const FeatureMatrix&) const = default;

 private:
  std::int64_t rows_ = 0;
  std::int64_t dim_ = 1;
  std::vector<float> data_;
};

// "FVB1" | u32 rows | u32 dim | rows*dim float32, all little-endian.
FeatureMatrix load_features(const std::filesystem::path& path);
FeatureMatrix parse_features(const std::string& bytes);
std::string serialize_features(const FeatureMatrix& features);
void save_features(const FeatureMatrix& features,
                   const std::filesystem::path& path);

struct ValidationIssue {
  std::string clip_id;  // empty for manifest-level issues
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool ok() const { return issues.empty(); }
  std::string to_string() const;
};

// Cross-checks a manifest against its feature matrix. Never throws for data
// problems; every violation becomes one report entry.
ValidationReport validate(const Manifest& manifest,
                          const FeatureMatrix& features);

}  // namespace lenbias

#endif  // LENBIAS_FEATURE_IO_H_
