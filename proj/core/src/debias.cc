#include "lenbias/debias.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>

#include "json.hpp"
#include "lenbias/audit.h"
#include "lenbias/error.h"
#include "lenbias/random.h"

namespace lenbias {

namespace {

class Pruner {
 public:
  Pruner(const Manifest& train, const Manifest& test, const PruneParams& params)
      : train_(train),
        params_(params),
        removed_(train.clips.size(), false),
        test_stats_(index_stats(class_frame_stats(Manifest{}, test))) {}

  // Applies the pruning loop to one class against the current training set.
  void process(const ClassKey& key) {
    auto test_it = test_stats_.find(key);
    if (test_it == test_stats_.end() || test_it->second.test_count == 0) return;
    const double y = *test_it->second.test_avg_len;

    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < train_.clips.size(); ++i) {
      if (!removed_[i] && train_.clips[i].has_class(key)) members.push_back(i);
    }
    if (members.empty()) return;
    ++log_.classes_processed;
    std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
      const auto& ca = train_.clips[a];
      const auto& cb = train_.clips[b];
      return ca.frame_length != cb.frame_length ? ca.frame_length < cb.frame_length
                                                : ca.clip_id < cb.clip_id;
    });

    double sum = 0.0;
    for (auto i : members) sum += static_cast<double>(train_.clips[i].frame_length);
    std::size_t lo = 0;
    std::size_t hi = members.size();  // live range [lo, hi)
    auto count = [&] { return static_cast<std::int64_t>(hi - lo); };
    auto mean = [&] { return sum / static_cast<double>(hi - lo); };

    RemovalEntry entry;
    entry.class_key = key;
    entry.before_avg = mean();
    entry.test_avg = y;
    auto drop = [&](std::size_t idx) {
      removed_[idx] = true;
      entry.removed_ids.push_back(train_.clips[idx].clip_id);
      sum -= static_cast<double>(train_.clips[idx].frame_length);
    };

    // Deletion comes before the alpha check, so a class at or below alpha
    // still loses one clip. The last clip of a class is never deleted.
    auto step = [&](auto gap_open, auto take) {
      while (gap_open() && count() > 1) {
        drop(take());
        if (count() <= params_.alpha) break;
      }
    };

    if (y >= mean() + params_.delta) {
      entry.direction = RemovalDirection::kShortest;
      step([&] { return y >= mean() + params_.delta; }, [&] { return members[lo++]; });
    } else if (mean() >= y + params_.delta) {
      entry.direction = RemovalDirection::kLongest;
      step([&] { return mean() >= y + params_.delta; }, [&] { return members[--hi]; });
    }
    entry.after_avg = mean();
    if (!entry.removed_ids.empty()) {
      log_.total_removed += static_cast<std::int64_t>(entry.removed_ids.size());
      ++log_.classes_touched;
      log_.entries.push_back(std::move(entry));
    }
  }

  DebiasResult finish() {
    std::vector<Clip> kept;
    kept.reserve(train_.clips.size());
    for (std::size_t i = 0; i < train_.clips.size(); ++i) {
      if (!removed_[i]) kept.push_back(train_.clips[i]);
    }
    return {train_.with_clips(std::move(kept)), std::move(log_)};
  }

 private:
  const Manifest& train_;
  PruneParams params_;
  std::vector<bool> removed_;
  std::map<ClassKey, ClassStats> test_stats_;
  RemovalLog log_;
};

}  // namespace

const char* to_string(RemovalDirection d) {
  switch (d) {
    case RemovalDirection::kShortest: return "shortest";
    case RemovalDirection::kLongest: return "longest";
    case RemovalDirection::kRandom: return "random";
  }
  return "?";
}

DebiasResult rmv_one(const Manifest& train, const Manifest& test,
                     const ClassKey& class_key, const PruneParams& params) {
  const auto stats = index_stats(class_frame_stats(train, test));
  auto it = stats.find(class_key);
  if (it == stats.end() || !it->second.is_common()) {
    throw InvalidArgument("rmv_one: class (" + std::to_string(class_key.first) +
                          "," + std::to_string(class_key.second) +
                          ") is not present in both splits");
  }
  Pruner pruner(train, test, params);
  pruner.process(class_key);
  return pruner.finish();
}

DebiasResult rmv_all(const Manifest& train, const Manifest& test,
                     const PruneParams& params) {
  Pruner pruner(train, test, params);
  // class_frame_stats is sorted by key, which fixes the processing order.
  for (const auto& s : class_frame_stats(train, test)) {
    if (s.is_common()) pruner.process(s.class_key);
  }
  return pruner.finish();
}

DebiasResult rmv_rand(const Manifest& train, std::int64_t n, std::uint64_t seed) {
  if (n < 0 || n > static_cast<std::int64_t>(train.clips.size())) {
    throw InvalidArgument("rmv_rand: cannot remove " + std::to_string(n) +
                          " of " + std::to_string(train.clips.size()) + " clips");
  }
  std::vector<std::size_t> idx(train.clips.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(idx);
  idx.resize(static_cast<std::size_t>(n));

  RemovalEntry entry;
  entry.direction = RemovalDirection::kRandom;
  entry.before_avg = mean_frame_length(train);
  std::vector<std::string> ids;
  for (auto i : idx) ids.push_back(train.clips[i].clip_id);
  entry.removed_ids = ids;

  DebiasResult out{train.without(ids), {}};
  if (!out.manifest.clips.empty()) entry.after_avg = mean_frame_length(out.manifest);
  out.log.total_removed = n;
  if (n > 0) out.log.entries.push_back(std::move(entry));
  return out;
}

void write_removal_log(const RemovalLog& log, const std::filesystem::path& path) {
  using ordered_json = nlohmann::ordered_json;
  auto opt = [](const std::optional<double>& v) {
    return v ? ordered_json(*v) : ordered_json(nullptr);
  };
  ordered_json j;
  j["total_removed"] = log.total_removed;
  j["classes_touched"] = log.classes_touched;
  j["classes_processed"] = log.classes_processed;
  auto& entries = j["entries"] = ordered_json::array();
  for (const auto& e : log.entries) {
    ordered_json o;
    if (e.class_key) {
      o["verb"] = e.class_key->first;
      o["noun"] = e.class_key->second;
    }
    o["direction"] = to_string(e.direction);
    o["before_avg"] = opt(e.before_avg);
    o["after_avg"] = opt(e.after_avg);
    o["test_avg"] = opt(e.test_avg);
    o["removed_ids"] = e.removed_ids;
    entries.push_back(std::move(o));
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace lenbias
