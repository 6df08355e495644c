#include "lenbias/audit.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>

#include "json.hpp"
#include "lenbias/error.h"
#include "lenbias/metrics.h"

namespace lenbias {

namespace {

double median_of(const std::vector<double>& sorted, std::size_t begin,
                 std::size_t end) {
  const std::size_t n = end - begin;
  const std::size_t mid = begin + n / 2;
  return n % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
}

nlohmann::ordered_json summary_json(const DistributionSummary& s) {
  nlohmann::ordered_json j;
  j["min"] = s.min;
  j["q1"] = s.q1;
  j["median"] = s.median;
  j["q3"] = s.q3;
  j["max"] = s.max;
  j["mean"] = s.mean;
  j["outlier_ids"] = s.outlier_ids;
  return j;
}

}  // namespace

std::vector<ClassStats> class_frame_stats(const Manifest& train,
                                          const Manifest& test) {
  struct Acc {
    std::int64_t n[2] = {0, 0};
    double sum[2] = {0.0, 0.0};
  };
  std::map<ClassKey, Acc> acc;
  auto add = [&](const Manifest& m, int side) {
    for (const auto& c : m.clips) {
      for (const auto& key : c.class_keys()) {
        auto& a = acc[key];
        a.n[side] += 1;
        a.sum[side] += static_cast<double>(c.frame_length);
      }
    }
  };
  add(train, 0);
  add(test, 1);

  std::vector<ClassStats> out;
  out.reserve(acc.size());
  for (const auto& [key, a] : acc) {
    ClassStats s;
    s.class_key = key;
    s.train_count = a.n[0];
    s.test_count = a.n[1];
    if (a.n[0] > 0) s.train_avg_len = a.sum[0] / static_cast<double>(a.n[0]);
    if (a.n[1] > 0) s.test_avg_len = a.sum[1] / static_cast<double>(a.n[1]);
    if (s.is_common()) s.discrepancy = *s.test_avg_len - *s.train_avg_len;
    out.push_back(s);
  }
  return out;
}

std::map<ClassKey, ClassStats> index_stats(const std::vector<ClassStats>& stats) {
  std::map<ClassKey, ClassStats> out;
  for (const auto& s : stats) out.emplace(s.class_key, s);
  return out;
}

DiscrepancySeries discrepancy_series(const std::vector<ClassStats>& stats,
                                     std::vector<double> thresholds) {
  DiscrepancySeries out;
  for (const auto& s : stats) {
    if (s.discrepancy) out.values.push_back(std::abs(*s.discrepancy));
  }
  std::sort(out.values.begin(), out.values.end(), std::greater<>());
  for (double t : thresholds) {
    out.exceed_counts.push_back(std::count_if(
        out.values.begin(), out.values.end(), [t](double v) { return v >= t; }));
  }
  out.thresholds = std::move(thresholds);
  return out;
}

DistributionSummary distribution_summary(const Manifest& manifest) {
  if (manifest.clips.empty()) {
    throw InvalidArgument("distribution_summary: empty manifest");
  }
  std::vector<double> lens;
  lens.reserve(manifest.clips.size());
  for (const auto& c : manifest.clips) lens.push_back(static_cast<double>(c.frame_length));
  std::sort(lens.begin(), lens.end());
  const std::size_t n = lens.size();

  DistributionSummary s;
  s.min = lens.front();
  s.max = lens.back();
  s.mean = std::accumulate(lens.begin(), lens.end(), 0.0) / static_cast<double>(n);
  s.median = median_of(lens, 0, n);
  if (n == 1) {
    s.q1 = s.q3 = lens[0];
  } else {
    const std::size_t half = n / 2;
    s.q1 = median_of(lens, 0, half);
    s.q3 = median_of(lens, n - half, n);
  }
  const double iqr = s.q3 - s.q1;
  const double lo = s.q1 - 1.5 * iqr;
  const double hi = s.q3 + 1.5 * iqr;
  for (const auto& c : manifest.clips) {
    const double len = static_cast<double>(c.frame_length);
    if (len < lo || len > hi) s.outlier_ids.push_back(c.clip_id);
  }
  return s;
}

std::vector<QueryDiagnostic> query_diagnostics(const SimilarityMatrix& t2v,
                                               const Manifest& queries,
                                               const Manifest& gallery,
                                               std::int64_t top_k) {
  if (t2v.orientation != Orientation::kT2V ||
      t2v.n_queries() != static_cast<Eigen::Index>(queries.clips.size()) ||
      t2v.n_gallery() != static_cast<Eigen::Index>(gallery.clips.size())) {
    throw InvalidArgument("query_diagnostics: matrix does not match manifests");
  }
  if (top_k < 1) throw InvalidArgument("query_diagnostics: top_k must be >= 1");
  if (t2v.n_queries() > t2v.n_gallery()) {
    throw InvalidArgument("query_diagnostics: ground truth index exceeds gallery");
  }
  std::vector<QueryDiagnostic> out;
  out.reserve(queries.clips.size());
  for (Eigen::Index q = 0; q < t2v.n_queries(); ++q) {
    const auto order = ranked_order(t2v.scores.row(q));
    QueryDiagnostic d;
    d.query_id = queries.clips[static_cast<std::size_t>(q)].clip_id;
    d.classes = ClassSets::of(queries.clips[static_cast<std::size_t>(q)]);
    d.gt_rank = (std::find(order.begin(), order.end(), q) - order.begin()) + 1;
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(top_k), order.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      sum += static_cast<double>(
          gallery.clips[static_cast<std::size_t>(order[i])].frame_length);
    }
    d.top_avg_len = sum / static_cast<double>(k);
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<std::string> suspected_bias_cases(
    const std::vector<QueryDiagnostic>& queries, const Manifest& train,
    const std::map<ClassKey, ClassStats>& stats, const SuspectFilter& filter) {
  std::map<int, std::int64_t> verb_count;
  std::map<int, std::int64_t> noun_count;
  for (const auto& c : train.clips) {
    for (int v : c.verb_classes) ++verb_count[v];
    for (int n : c.noun_classes) ++noun_count[n];
  }
  auto is_tail = [&](const std::map<int, std::int64_t>& counts, int id) {
    auto it = counts.find(id);
    return it == counts.end() || it->second < filter.tail_threshold;
  };

  std::vector<std::string> kept;
  for (const auto& q : queries) {
    std::vector<const ClassStats*> pairs;
    for (int v : q.classes.verbs) {
      for (int n : q.classes.nouns) {
        auto it = stats.find({v, n});
        if (it == stats.end() || !it->second.is_common()) {
          throw InvalidArgument("suspected_bias_cases: query " + q.query_id +
                                " has class (" + std::to_string(v) + "," +
                                std::to_string(n) + ") without common-class stats");
        }
        pairs.push_back(&it->second);
      }
    }

    if (filter.require_rank && q.gt_rank < filter.min_rank) continue;
    if (filter.require_not_tail) {
      const bool tail =
          std::any_of(q.classes.verbs.begin(), q.classes.verbs.end(),
                      [&](int v) { return is_tail(verb_count, v); }) ||
          std::any_of(q.classes.nouns.begin(), q.classes.nouns.end(),
                      [&](int n) { return is_tail(noun_count, n); });
      if (tail) continue;
    }
    const bool any_pair = std::any_of(pairs.begin(), pairs.end(), [&](const ClassStats* s) {
      if (filter.require_disc && std::abs(*s->discrepancy) < filter.min_disc) return false;
      if (filter.require_closer_to_train &&
          !(std::abs(q.top_avg_len - *s->train_avg_len) <
            std::abs(q.top_avg_len - *s->test_avg_len))) {
        return false;
      }
      return true;
    });
    if (any_pair) kept.push_back(q.query_id);
  }
  return kept;
}

void write_audit_report(const std::vector<ClassStats>& stats,
                        const DistributionSummary& train_summary,
                        const DistributionSummary& test_summary,
                        const DiscrepancySeries& series,
                        const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  nlohmann::ordered_json report;
  auto& classes = report["classes"] = nlohmann::ordered_json::array();
  for (const auto& s : stats) {
    nlohmann::ordered_json c;
    c["verb"] = s.class_key.first;
    c["noun"] = s.class_key.second;
    c["train_count"] = s.train_count;
    c["test_count"] = s.test_count;
    c["train_avg_len"] = s.train_avg_len ? nlohmann::ordered_json(*s.train_avg_len) : nullptr;
    c["test_avg_len"] = s.test_avg_len ? nlohmann::ordered_json(*s.test_avg_len) : nullptr;
    c["discrepancy"] = s.discrepancy ? nlohmann::ordered_json(*s.discrepancy) : nullptr;
    classes.push_back(std::move(c));
  }
  report["common_classes"] = series.values.size();
  report["train_summary"] = summary_json(train_summary);
  report["test_summary"] = summary_json(test_summary);
  auto& exceed = report["exceed_counts"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < series.thresholds.size(); ++i) {
    exceed.push_back({{"threshold", series.thresholds[i]},
                      {"count", series.exceed_counts[i]}});
  }
  std::ofstream rj(out_dir / "report.json", std::ios::trunc);
  if (!rj) throw Error("cannot write " + (out_dir / "report.json").string());
  rj << report.dump(2) << '\n';

  std::ofstream csv(out_dir / "series.csv", std::ios::trunc);
  if (!csv) throw Error("cannot write " + (out_dir / "series.csv").string());
  csv.precision(10);
  csv << "rank,abs_discrepancy\n";
  for (std::size_t i = 0; i < series.values.size(); ++i) {
    csv << (i + 1) << ',' << series.values[i] << '\n';
  }
}

}  // namespace lenbias
