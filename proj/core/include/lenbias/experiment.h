#ifndef LENBIAS_EXPERIMENT_H_
#define LENBIAS_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lenbias/causal.h"
#include "lenbias/debias.h"
#include "lenbias/metrics.h"
#include "lenbias/model.h"
#include "lenbias/splitter.h"
#include "lenbias/synth.h"

namespace lenbias {

enum class Method { kBaseline, kRmvAll, kRmvRand, kEnsemble, kCausal };

const char* to_string(Method m);
Method parse_method(const std::string& s);

// Training and test data: manifest paths, or a generator config. A generated
// benchmark is drawn fresh for every run seed with generator seed
// `synth.seed + run seed`.
struct DataSpec {
  std::filesystem::path train;
  std::filesystem::path test;
  std::optional<GenConfig> synth;
};

struct SplitSpec {
  SplitMethod method = SplitMethod::kAdjusted;
  std::int64_t m = 2;
  // Adjusted splits: explicit th. Without it, th is the fraction of training
  // clips no longer than the mean test frame length.
  std::optional<double> th;
  // Threshold splits: the frame-length cut. Defaults to the mean test length.
  std::optional<double> cut;
};

struct EvalSpec {
  WeightMode weights = WeightMode::kUniformSum;
  std::int64_t ndcg_cutoff = 0;  // 0 = whole gallery
  double map_threshold = 1.0;
  // Also score every split model on its own (causal only).
  bool per_split_only = false;
};

struct ExperimentSpec {
  std::string name;
  Method method = Method::kBaseline;
  DataSpec data;
  std::optional<SplitSpec> split;  // required for causal
  TrainConfig train;
  EvalSpec eval;
  PruneParams prune;                // rmv_all, and the removal count of rmv_rand
  std::int64_t ensemble_size = 2;   // ensemble only
  std::vector<std::uint64_t> seeds{0};

  // Throws ValidationError when method-specific fields are missing or
  // inconsistent.
  void check() const;
};

// Parses one spec object, or an array of them. Relative data paths resolve
// against `base_dir`.
std::vector<ExperimentSpec> experiments_from_json(
    const std::string& text, const std::filesystem::path& base_dir = {});
std::string experiment_to_json(const ExperimentSpec& spec);

// One long-format result row. `variant` is "fused" for the method's own
// output, "split<k>" for a single split model and "split_mean" for their
// average.
struct ResultRow {
  std::string name;
  std::string method;
  std::uint64_t seed = 0;
  std::string variant = "fused";
  std::string direction;
  std::string metric;
  double value = 0.0;
};

struct SeedOutcome {
  std::uint64_t seed = 0;
  MetricsReport report;
  std::vector<MetricsReport> split_reports;  // per_split_only
  std::int64_t train_clips = 0;
  std::int64_t removed_clips = 0;
  std::vector<std::int64_t> split_sizes;
  SimilarityMatrix t2v;  // test captions x test videos
};

struct ExperimentOutcome {
  ExperimentSpec spec;
  std::vector<SeedOutcome> seeds;
  std::vector<ResultRow> rows;
};

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;  // per-seed artifacts
  int jobs = 1;
};

// Runs every seed of one spec. Failures surface as StageError naming the
// stage (data, debias, split, train, eval).
ExperimentOutcome run_experiment(const ExperimentSpec& spec,
                                 const RunOptions& options = {});

// Runs all specs, then writes results.csv and results.json into out_dir. If a
// spec fails, the outputs gathered so far are written with status
// "incomplete" before the error propagates.
std::vector<ExperimentOutcome> run_experiments(
    const std::vector<ExperimentSpec>& specs, const std::filesystem::path& out_dir,
    int jobs = 1);

void write_results_csv(const std::vector<ResultRow>& rows,
                       const std::filesystem::path& path);
std::vector<ResultRow> read_results_csv(const std::filesystem::path& path);
std::vector<ResultRow> parse_results_csv(const std::string& text);

struct SummaryRow {
  std::string name;
  std::string method;
  std::string variant;
  std::string direction;
  std::string metric;
  std::int64_t n = 0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  // Best single seed: max, or min for rank metrics.
  double best = 0.0;
  // Mean over consecutive seed groups of the group's best (best_of > 0).
  std::optional<double> mean_best_of;
  // mean minus the baseline entry's mean for the same variant-free key.
  std::optional<double> delta;
};

struct ReportOptions {
  // Entry the deltas refer to. Defaults to the first row whose method is
  // baseline.
  std::optional<std::string> baseline_name;
  // "Best of k repetitions" reporting; 0 disables it.
  std::int64_t best_of = 0;
};

// Rows grouped by (name, variant, direction, metric) in first-seen order.
std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows,
                                  const ReportOptions& options = {});

// summary.csv plus ndcg_series.csv (avg nDCG per entry and seed) in out_dir.
void write_report(const std::vector<ResultRow>& rows, const ReportOptions& options,
                  const std::filesystem::path& out_dir);

// Smaller is better for these metrics.
bool lower_is_better(const std::string& metric);

}  // namespace lenbias

#endif  // LENBIAS_EXPERIMENT_H_
