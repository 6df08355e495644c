#ifndef LENBIAS_AUDIT_H_
#define LENBIAS_AUDIT_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lenbias/manifest.h"
#include "lenbias/matrix.h"
#include "lenbias/relevance.h"

namespace lenbias {

// Per (verb, noun) class frame-length statistics for one train/test pair.
// Averages are in frames and only present when the split has the class.
struct ClassStats {
  ClassKey class_key;
  std::int64_t train_count = 0;
  std::int64_t test_count = 0;
  std::optional<double> train_avg_len;
  std::optional<double> test_avg_len;
  std::optional<double> discrepancy;  // test_avg_len - train_avg_len

  bool is_common() const { return train_count > 0 && test_count > 0; }
};

// One entry per class occurring in either split, sorted by class key.
std::vector<ClassStats> class_frame_stats(const Manifest& train,
                                          const Manifest& test);

// Lookup by key over the output of class_frame_stats.
std::map<ClassKey, ClassStats> index_stats(const std::vector<ClassStats>& stats);

struct DiscrepancySeries {
  std::vector<double> values;  // |discrepancy| of common classes, descending
  std::vector<double> thresholds;
  std::vector<std::int64_t> exceed_counts;  // #values >= threshold, aligned
};

DiscrepancySeries discrepancy_series(const std::vector<ClassStats>& stats,
                                     std::vector<double> thresholds = {60.0, 200.0});

struct DistributionSummary {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double mean = 0.0;
  std::vector<std::string> outlier_ids;  // outside [q1 - 1.5 IQR, q3 + 1.5 IQR]
};

// Quartiles are the medians of the lower and upper halves; for odd counts the
// overall median belongs to neither half. Throws on an empty manifest.
DistributionSummary distribution_summary(const Manifest& manifest);

// Per-query retrieval diagnostics for text-to-video failure analysis.
struct QueryDiagnostic {
  std::string query_id;
  ClassSets classes;
  std::int64_t gt_rank = 0;
  double top_avg_len = 0.0;  // mean frame length of the top-k gallery items
};

// Ranks each query's ground truth (gallery index == query index) and averages
// the frame lengths of its top `top_k` gallery items, ties by gallery order.
std::vector<QueryDiagnostic> query_diagnostics(const SimilarityMatrix& t2v,
                                               const Manifest& queries,
                                               const Manifest& gallery,
                                               std::int64_t top_k = 20);

struct SuspectFilter {
  std::int64_t min_rank = 11;          // keep only GT rank > 10
  std::int64_t tail_threshold = 10;    // verb/noun with fewer train clips is tail
  double min_disc = 60.0;              // frames
  bool require_rank = true;
  bool require_not_tail = true;
  bool require_disc = true;
  bool require_closer_to_train = true;
};

// Queries whose failure is plausibly caused by frame-length bias. A query is
// kept when every enabled rule holds; the discrepancy and closeness rules are
// evaluated jointly on at least one of the query's class pairs. Throws
// InvalidArgument if a query class has no common-class statistics.
std::vector<std::string> suspected_bias_cases(
    const std::vector<QueryDiagnostic>& queries, const Manifest& train,
    const std::map<ClassKey, ClassStats>& stats, const SuspectFilter& filter = {});

// report.json with stats, both split summaries and the exceed counts, plus
// series.csv with (rank, abs_discrepancy).
void write_audit_report(const std::vector<ClassStats>& stats,
                        const DistributionSummary& train_summary,
                        const DistributionSummary& test_summary,
                        const DiscrepancySeries& series,
                        const std::filesystem::path& out_dir);

}  // namespace lenbias

#endif  // LENBIAS_AUDIT_H_
