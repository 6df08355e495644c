#include "lenbias/feature_io.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "lenbias/error.h"

namespace lenbias {

namespace {

constexpr char kMagic[4] = {'F', 'V', 'B', '1'};
constexpr std::size_t kHeaderBytes = 12;

std::uint32_t read_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void write_u32le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

}  // namespace

FeatureMatrix::FeatureMatrix(std::int64_t rows, std::int64_t dim,
                             std::vector<float> data)
    : rows_(rows), dim_(dim), data_(std::move(data)) {
  if (rows < 0 || dim < 1) throw InvalidArgument("bad feature matrix shape");
  if (static_cast<std::int64_t>(data_.size()) != rows * dim) {
    throw InvalidArgument("feature data length != rows * dim");
  }
}

FeatureMatrix parse_features(const std::string& bytes) {
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw ValidationError("feature file: bad magic (expected \"FVB1\")");
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint64_t rows = read_u32le(p + 4);
  const std::uint64_t dim = read_u32le(p + 8);
  if (dim == 0) throw ValidationError("feature file: dim must be positive");
  const std::uint64_t payload = rows * dim * 4;
  if (bytes.size() - kHeaderBytes < payload) {
    throw ValidationError("feature file: truncated payload, header declares " +
                          std::to_string(rows) + "x" + std::to_string(dim) +
                          " (" + std::to_string(payload) + " bytes) but only " +
                          std::to_string(bytes.size() - kHeaderBytes) +
                          " bytes follow");
  }
  std::vector<float> data(rows * dim);
  const unsigned char* src = p + kHeaderBytes;
  for (std::uint64_t i = 0; i < rows * dim; ++i) {
    const std::uint32_t raw = read_u32le(src + 4 * i);
    const float v = std::bit_cast<float>(raw);
    if (!std::isfinite(v)) {
      throw ValidationError("feature file: non-finite value at (" +
                            std::to_string(i / dim) + "," +
                            std::to_string(i % dim) + ")");
    }
    data[i] = v;
  }
  return FeatureMatrix(static_cast<std::int64_t>(rows),
                       static_cast<std::int64_t>(dim), std::move(data));
}

FeatureMatrix load_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open feature file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_features(buf.str());
}

std::string serialize_features(const FeatureMatrix& features) {
  if (features.rows() > UINT32_MAX || features.dim() > UINT32_MAX) {
    throw InvalidArgument("feature matrix too large for FVB1");
  }
  std::string out(kMagic, 4);
  out.reserve(kHeaderBytes + features.data().size() * 4);
  write_u32le(out, static_cast<std::uint32_t>(features.rows()));
  write_u32le(out, static_cast<std::uint32_t>(features.dim()));
  for (float v : features.data()) write_u32le(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

void save_features(const FeatureMatrix& features,
                   const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write feature file " + path.string());
  const std::string bytes = serialize_features(features);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

std::string ValidationReport::to_string() const {
  std::string out;
  for (const auto& issue : issues) {
    if (!issue.clip_id.empty()) out += issue.clip_id + ": ";
    out += issue.message;
    out += '\n';
  }
  return out;
}

ValidationReport validate(const Manifest& manifest,
                          const FeatureMatrix& features) {
  ValidationReport report;
  auto add = [&](const std::string& id, std::string msg) {
    report.issues.push_back({id, std::move(msg)});
  };

  if (manifest.feature_dim != features.dim()) {
    add("", "feature_dim " + std::to_string(manifest.feature_dim) +
                " does not match feature file dim " +
                std::to_string(features.dim()));
  }

  std::unordered_set<std::string> ids;
  struct Block {
    std::int64_t begin;
    std::int64_t end;
    const std::string* id;
  };
  std::vector<Block> blocks;
  for (const auto& c : manifest.clips) {
    if (!ids.insert(c.clip_id).second) add(c.clip_id, "duplicate clip_id");
    if (c.frame_length < 1) add(c.clip_id, "frame_length must be >= 1");
    if (c.feature_rows < 1) add(c.clip_id, "feature_rows must be >= 1");
    if (!(c.fps > 0.0)) add(c.clip_id, "fps must be positive");
    if (c.verb_classes.empty()) add(c.clip_id, "empty verb_classes");
    if (c.noun_classes.empty()) add(c.clip_id, "empty noun_classes");
    for (int v : c.verb_classes) {
      if (!manifest.verb_dict.contains(v)) {
        add(c.clip_id, "verb id " + std::to_string(v) + " not in verb_dict");
      }
    }
    for (int n : c.noun_classes) {
      if (!manifest.noun_dict.contains(n)) {
        add(c.clip_id, "noun id " + std::to_string(n) + " not in noun_dict");
      }
    }
    const bool has_action = std::any_of(c.caption.begin(), c.caption.end(),
        [](const Token& t) { return t.role == Role::kAction; });
    const bool has_entity = std::any_of(c.caption.begin(), c.caption.end(),
        [](const Token& t) { return t.role == Role::kEntity; });
    if (!has_action || !has_entity) {
      add(c.clip_id, "caption needs at least one action and one entity token");
    }
    if (c.feature_row < 0 || c.feature_rows < 1 ||
        c.feature_row + c.feature_rows > features.rows()) {
      add(c.clip_id, "block out of range: rows [" +
                         std::to_string(c.feature_row) + ", " +
                         std::to_string(c.feature_row + c.feature_rows) +
                         ") vs " + std::to_string(features.rows()) +
                         " feature rows");
    }
    if (c.feature_rows >= 1) {
      blocks.push_back({c.feature_row, c.feature_row + c.feature_rows, &c.clip_id});
    }
  }

  std::sort(blocks.begin(), blocks.end(), [](const Block& a, const Block& b) {
    return a.begin != b.begin ? a.begin < b.begin : *a.id < *b.id;
  });
  // Track the block reaching furthest so nested overlaps are also caught.
  for (std::size_t i = 1, far = 0; i < blocks.size(); ++i) {
    if (blocks[i].begin < blocks[far].end) {
      add(*blocks[i].id, "overlapping blocks with " + *blocks[far].id);
    }
    if (blocks[i].end > blocks[far].end) far = i;
  }
  return report;
}

}  // namespace lenbias
