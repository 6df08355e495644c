#include "lenbias/manifest.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "lenbias/error.h"

namespace lenbias {

namespace {

using ordered_json = nlohmann::ordered_json;
using nlohmann::json;

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw ValidationError("manifest line " + std::to_string(line) + ": " + what);
}

template <typename T>
T get_field(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(line, std::string("missing key \"") + key + "\"");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    fail(line, std::string("bad value for \"") + key + "\": " + e.what());
  }
}

std::map<int, std::string> parse_dict(const json& obj, const char* key,
                                      std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_object()) {
    fail(line, std::string("missing object \"") + key + "\"");
  }
  std::map<int, std::string> out;
  for (const auto& [k, v] : it->items()) {
    int id = 0;
    try {
      std::size_t used = 0;
      id = std::stoi(k, &used);
      if (used != k.size() || id < 0) throw std::invalid_argument(k);
    } catch (const std::exception&) {
      fail(line, std::string(key) + " has non-integer id \"" + k + "\"");
    }
    if (!v.is_string()) fail(line, std::string(key) + " values must be strings");
    out[id] = v.get<std::string>();
  }
  return out;
}

std::vector<int> parse_classes(const json& obj, const char* key,
                               const std::map<int, std::string>& dict,
                               std::size_t line) {
  auto ids = get_field<std::vector<int>>(obj, key, line);
  if (ids.empty()) fail(line, std::string(key) + " is empty");
  for (int id : ids) {
    if (!dict.contains(id)) {
      fail(line, std::string(key) + " references id " + std::to_string(id) +
                     " absent from the class dictionary");
    }
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

ordered_json dict_to_json(const std::map<int, std::string>& dict) {
  ordered_json out = ordered_json::object();
  for (const auto& [id, name] : dict) out[std::to_string(id)] = name;
  return out;
}

}  // namespace

const char* to_string(SplitTag tag) {
  return tag == SplitTag::kTrain ? "train" : "test";
}

const char* to_string(Role role) {
  return role == Role::kAction ? "action" : "entity";
}

std::vector<ClassKey> Clip::class_keys() const {
  std::vector<ClassKey> keys;
  keys.reserve(verb_classes.size() * noun_classes.size());
  for (int v : verb_classes) {
    for (int n : noun_classes) keys.emplace_back(v, n);
  }
  return keys;
}

bool Clip::has_class(const ClassKey& key) const {
  return std::binary_search(verb_classes.begin(), verb_classes.end(),
                            key.first) &&
         std::binary_search(noun_classes.begin(), noun_classes.end(),
                            key.second);
}

Manifest Manifest::with_clips(std::vector<Clip> new_clips) const {
  Manifest out;
  out.version = version;
  out.feature_file = feature_file;
  out.feature_dim = feature_dim;
  out.verb_dict = verb_dict;
  out.noun_dict = noun_dict;
  out.clips = std::move(new_clips);
  return out;
}

Manifest Manifest::subset(const std::vector<std::string>& ids) const {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < clips.size(); ++i) index[clips[i].clip_id] = i;
  std::vector<Clip> picked;
  picked.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = index.find(id);
    if (it == index.end()) throw InvalidArgument("unknown clip_id " + id);
    picked.push_back(clips[it->second]);
  }
  return with_clips(std::move(picked));
}

Manifest Manifest::without(const std::vector<std::string>& ids) const {
  std::unordered_set<std::string> drop(ids.begin(), ids.end());
  std::vector<Clip> kept;
  kept.reserve(clips.size());
  for (const auto& c : clips) {
    if (!drop.contains(c.clip_id)) kept.push_back(c);
  }
  return with_clips(std::move(kept));
}

Manifest parse_manifest(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  Manifest m;
  bool have_header = false;
  std::set<std::string> verb_names;
  std::set<std::string> noun_names;
  std::unordered_set<std::string> seen_ids;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(line_no, std::string("parse error: ") + e.what());
    }
    if (!obj.is_object()) fail(line_no, "expected a JSON object");

    if (!have_header) {
      m.version = get_field<int>(obj, "version", line_no);
      if (m.version != 1) fail(line_no, "unsupported version");
      m.feature_file = get_field<std::string>(obj, "feature_file", line_no);
      m.feature_dim = get_field<int>(obj, "feature_dim", line_no);
      if (m.feature_dim < 1) fail(line_no, "feature_dim must be positive");
      m.verb_dict = parse_dict(obj, "verb_dict", line_no);
      m.noun_dict = parse_dict(obj, "noun_dict", line_no);
      for (const auto& [id, name] : m.verb_dict) verb_names.insert(name);
      for (const auto& [id, name] : m.noun_dict) noun_names.insert(name);
      have_header = true;
      continue;
    }

    Clip c;
    c.clip_id = get_field<std::string>(obj, "clip_id", line_no);
    if (c.clip_id.empty()) fail(line_no, "empty clip_id");
    if (!seen_ids.insert(c.clip_id).second) {
      fail(line_no, "duplicate clip_id \"" + c.clip_id + "\"");
    }
    const auto split = get_field<std::string>(obj, "split", line_no);
    if (split == "train") {
      c.split = SplitTag::kTrain;
    } else if (split == "test") {
      c.split = SplitTag::kTest;
    } else {
      fail(line_no, "unknown split \"" + split + "\"");
    }
    c.verb_classes = parse_classes(obj, "verb_classes", m.verb_dict, line_no);
    c.noun_classes = parse_classes(obj, "noun_classes", m.noun_dict, line_no);

    auto cap = obj.find("caption");
    if (cap == obj.end() || !cap->is_array()) fail(line_no, "missing caption");
    for (const auto& tok : *cap) {
      if (!tok.is_object()) fail(line_no, "caption tokens must be objects");
      Token t;
      t.text = get_field<std::string>(tok, "t", line_no);
      const auto role = get_field<std::string>(tok, "r", line_no);
      if (role == "action") {
        t.role = Role::kAction;
        if (!verb_names.contains(t.text)) {
          fail(line_no, "action token \"" + t.text + "\" maps to no verb class");
        }
      } else if (role == "entity") {
        t.role = Role::kEntity;
        if (!noun_names.contains(t.text)) {
          fail(line_no, "entity token \"" + t.text + "\" maps to no noun class");
        }
      } else {
        fail(line_no, "unknown role \"" + role + "\"");
      }
      c.caption.push_back(std::move(t));
    }

    c.frame_length = get_field<std::int64_t>(obj, "frame_length", line_no);
    if (c.frame_length < 1) fail(line_no, "frame_length must be >= 1");
    c.fps = get_field<double>(obj, "fps", line_no);
    if (!(c.fps > 0.0)) fail(line_no, "fps must be positive");
    c.feature_row = get_field<std::int64_t>(obj, "feature_row", line_no);
    if (c.feature_row < 0) fail(line_no, "feature_row must be >= 0");
    c.feature_rows = get_field<std::int64_t>(obj, "feature_rows", line_no);
    if (c.feature_rows < 1) fail(line_no, "feature_rows must be >= 1");
    m.clips.push_back(std::move(c));
  }
  if (!have_header) throw ValidationError("manifest is empty: missing header");
  return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open manifest " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str());
}

std::string serialize_manifest(const Manifest& m) {
  std::string out;
  ordered_json header;
  header["version"] = m.version;
  header["feature_file"] = m.feature_file;
  header["feature_dim"] = m.feature_dim;
  header["verb_dict"] = dict_to_json(m.verb_dict);
  header["noun_dict"] = dict_to_json(m.noun_dict);
  out += header.dump();
  out += '\n';
  for (const auto& c : m.clips) {
    ordered_json j;
    j["clip_id"] = c.clip_id;
    j["split"] = to_string(c.split);
    j["verb_classes"] = c.verb_classes;
    j["noun_classes"] = c.noun_classes;
    ordered_json caption = ordered_json::array();
    for (const auto& t : c.caption) {
      ordered_json tok;
      tok["t"] = t.text;
      tok["r"] = to_string(t.role);
      caption.push_back(std::move(tok));
    }
    j["caption"] = std::move(caption);
    j["frame_length"] = c.frame_length;
    j["fps"] = c.fps;
    j["feature_row"] = c.feature_row;
    j["feature_rows"] = c.feature_rows;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void save_manifest(const Manifest& manifest,
                   const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write manifest " + path.string());
  out << serialize_manifest(manifest);
  if (!out) throw Error("write failed for " + path.string());
}

std::filesystem::path resolve_feature_path(
    const std::filesystem::path& manifest_path, const Manifest& manifest) {
  std::filesystem::path p(manifest.feature_file);
  if (p.is_absolute()) return p;
  return manifest_path.parent_path() / p;
}

double mean_frame_length(const Manifest& manifest) {
  if (manifest.clips.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& c : manifest.clips) sum += static_cast<double>(c.frame_length);
  return sum / static_cast<double>(manifest.clips.size());
}

}  // namespace lenbias
