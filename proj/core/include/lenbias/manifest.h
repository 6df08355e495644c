#ifndef LENBIAS_MANIFEST_H_
#define LENBIAS_MANIFEST_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace lenbias {

enum class SplitTag { kTrain, kTest };
enum class Role { kAction, kEntity };

const char* to_string(SplitTag tag);
const char* to_string(Role role);

struct Token {
  std::string text;
  Role role = Role::kAction;

  bool operator==(const Token&) const = default;
};

// (verb id, noun id). A clip belongs to every pair in the cross product of its
// verb and noun class sets.
using ClassKey = std::pair<int, int>;

// One trimmed video clip. Class id sets are kept sorted and unique.
struct Clip {
  std::string clip_id;
  SplitTag split = SplitTag::kTrain;
  std::vector<int> verb_classes;
  std::vector<int> noun_classes;
  std::vector<Token> caption;
  std::int64_t frame_length = 1;
  double fps = 30.0;
  std::int64_t feature_row = 0;
  std::int64_t feature_rows = 1;

  std::vector<ClassKey> class_keys() const;
  bool has_class(const ClassKey& key) const;

  bool operator==(const Clip&) const = default;
};

struct Manifest {
  int version = 1;
  std::string feature_file;
  int feature_dim = 1;
  std::map<int, std::string> verb_dict;
  std::map<int, std::string> noun_dict;
  std::vector<Clip> clips;

  // Copy of this manifest (same header) holding only `clips`.
  Manifest with_clips(std::vector<Clip> clips) const;
  // Subset in the order of `ids`. Throws InvalidArgument on unknown ids.
  Manifest subset(const std::vector<std::string>& ids) const;
  // Clips of this manifest minus those in `ids`, original order kept.
  Manifest without(const std::vector<std::string>& ids) const;

  bool operator==(const Manifest&) const = default;
};

// JSON Lines: header object on line 1, one clip object per following line.
// Throws ValidationError with the offending line number on any violation.
Manifest load_manifest(const std::filesystem::path& path);
Manifest parse_manifest(const std::string& text);
std::string serialize_manifest(const Manifest& manifest);
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

// Resolves `manifest.feature_file` relative to the directory holding the
// manifest file, unless it is absolute.
std::filesystem::path resolve_feature_path(
    const std::filesystem::path& manifest_path, const Manifest& manifest);

// Mean frame length over the clips; 0 for an empty manifest.
double mean_frame_length(const Manifest& manifest);

}  // namespace lenbias

#endif  // LENBIAS_MANIFEST_H_
