#include "lenbias/splitter.h"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "lenbias/error.h"

namespace lenbias {

namespace {

std::vector<const Clip*> sorted_by_length(const Manifest& train) {
  std::vector<const Clip*> v;
  v.reserve(train.clips.size());
  for (const auto& c : train.clips) v.push_back(&c);
  std::sort(v.begin(), v.end(), [](const Clip* a, const Clip* b) {
    return a->frame_length != b->frame_length ? a->frame_length < b->frame_length
                                              : a->clip_id < b->clip_id;
  });
  return v;
}

// Builds a plan from cut sizes over the sorted clip list.
SplitPlan from_sizes(SplitMethod method, const std::vector<const Clip*>& sorted,
                     const std::vector<std::int64_t>& sizes) {
  SplitPlan plan;
  plan.method = method;
  plan.sizes = sizes;
  std::size_t pos = 0;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    std::vector<std::string> ids;
    ids.reserve(static_cast<std::size_t>(sizes[k]));
    for (std::int64_t i = 0; i < sizes[k]; ++i) ids.push_back(sorted[pos++]->clip_id);
    if (k + 1 < sizes.size() && pos > 0) {
      plan.boundaries.push_back(static_cast<double>(sorted[pos - 1]->frame_length));
    }
    plan.parts.push_back(std::move(ids));
  }
  return plan;
}

}  // namespace

const char* to_string(SplitMethod m) {
  switch (m) {
    case SplitMethod::kEqual: return "equal";
    case SplitMethod::kAdjusted: return "adjusted";
    case SplitMethod::kThreshold: return "threshold";
  }
  return "?";
}

SplitMethod parse_split_method(const std::string& s) {
  if (s == "equal") return SplitMethod::kEqual;
  if (s == "adjusted") return SplitMethod::kAdjusted;
  if (s == "threshold") return SplitMethod::kThreshold;
  throw InvalidArgument("unknown split method \"" + s + "\"");
}

std::int64_t SplitPlan::total() const {
  std::int64_t n = 0;
  for (auto s : sizes) n += s;
  return n;
}

std::vector<double> SplitPlan::proportions() const {
  const double n = static_cast<double>(total());
  std::vector<double> p;
  for (auto s : sizes) p.push_back(static_cast<double>(s) / n);
  return p;
}

SplitPlan equal_splits(const Manifest& train, std::int64_t m) {
  const auto n = static_cast<std::int64_t>(train.clips.size());
  if (m < 1 || m > n) {
    throw InvalidArgument("equal_splits: M=" + std::to_string(m) +
                          " outside [1, " + std::to_string(n) + "]");
  }
  std::vector<std::int64_t> sizes(static_cast<std::size_t>(m), n / m);
  for (std::int64_t k = 0; k < n % m; ++k) ++sizes[static_cast<std::size_t>(k)];
  return from_sizes(SplitMethod::kEqual, sorted_by_length(train), sizes);
}

SplitPlan adjusted_splits(const Manifest& train, std::int64_t m, double th) {
  if (m < 2) throw InvalidArgument("adjusted_splits: M must be >= 2");
  if (!(th > 0.0 && th < 1.0)) {
    throw InvalidArgument("adjusted_splits: th must lie in (0, 1)");
  }
  std::int64_t remaining = static_cast<std::int64_t>(train.clips.size());
  std::vector<std::int64_t> sizes;
  for (std::int64_t left = m; left >= 1; --left) {
    if (left == 2) {
      const auto first = static_cast<std::int64_t>(
          std::floor(th * static_cast<double>(remaining)));
      sizes.push_back(first);
      sizes.push_back(remaining - first);
      break;
    }
    const std::int64_t half = remaining / 2;
    sizes.push_back(half);
    remaining -= half;
  }
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    if (sizes[k] < 1) {
      throw InvalidArgument("adjusted_splits: part " + std::to_string(k + 1) +
                            " would be empty");
    }
  }
  return from_sizes(SplitMethod::kAdjusted, sorted_by_length(train), sizes);
}

SplitPlan threshold_split(const Manifest& train, double cut) {
  const auto sorted = sorted_by_length(train);
  const auto below = std::count_if(sorted.begin(), sorted.end(), [cut](const Clip* c) {
    return static_cast<double>(c->frame_length) <= cut;
  });
  const auto n = static_cast<std::int64_t>(sorted.size());
  if (below == 0 || below == n) {
    throw InvalidArgument("threshold_split: cut " + std::to_string(cut) +
                          " leaves an empty part");
  }
  auto plan = from_sizes(SplitMethod::kThreshold, sorted, {below, n - below});
  plan.boundaries = {cut};
  return plan;
}

double threshold_fraction(const Manifest& train, double cut) {
  if (train.clips.empty()) throw InvalidArgument("threshold_fraction: empty manifest");
  const auto below = std::count_if(train.clips.begin(), train.clips.end(), [cut](const Clip& c) {
    return static_cast<double>(c.frame_length) <= cut;
  });
  return (static_cast<double>(below) + 0.5) / static_cast<double>(train.clips.size());
}

double adjusted_threshold_fraction(const Manifest& train, std::int64_t m, double cut) {
  if (m < 2) throw InvalidArgument("adjusted_threshold_fraction: M must be >= 2");
  const auto n = static_cast<std::int64_t>(train.clips.size());
  std::int64_t remaining = n;
  for (std::int64_t k = 0; k < m - 2; ++k) remaining -= remaining / 2;
  if (remaining < 2) {
    throw InvalidArgument("adjusted_threshold_fraction: too few clips for " +
                          std::to_string(m) + " splits");
  }
  const auto below_all = std::count_if(
      train.clips.begin(), train.clips.end(),
      [cut](const Clip& c) { return static_cast<double>(c.frame_length) <= cut; });
  // The peeled parts hold the n - remaining shortest clips.
  const std::int64_t below =
      std::clamp<std::int64_t>(below_all - (n - remaining), 1, remaining - 1);
  return (static_cast<double>(below) + 0.5) / static_cast<double>(remaining);
}

std::vector<Manifest> materialize(const SplitPlan& plan, const Manifest& train) {
  std::vector<Manifest> out;
  out.reserve(plan.parts.size());
  for (const auto& ids : plan.parts) out.push_back(train.subset(ids));
  return out;
}

void write_plan(const SplitPlan& plan, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["method"] = to_string(plan.method);
  j["sizes"] = plan.sizes;
  j["boundaries"] = plan.boundaries;
  j["proportions"] = plan.proportions();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace lenbias
