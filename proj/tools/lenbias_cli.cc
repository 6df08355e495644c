// lenbias: command-line front end for the frame-length bias toolkit.
//
// Exit codes: 0 success, 2 invalid input (bad flags, malformed files),
// 3 a stage failed to run.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lenbias/audit.h"
#include "lenbias/causal.h"
#include "lenbias/debias.h"
#include "lenbias/error.h"
#include "lenbias/experiment.h"
#include "lenbias/feature_io.h"
#include "lenbias/manifest.h"
#include "lenbias/matrix.h"
#include "lenbias/metrics.h"
#include "lenbias/random.h"
#include "lenbias/relevance.h"
#include "lenbias/splitter.h"
#include "lenbias/synth.h"
#include "lenbias/trainer.h"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace lenbias {
namespace {

constexpr int kExitValidation = 2;
constexpr int kExitStage = 3;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

// Manifest plus its validated feature matrix.
struct Loaded {
  fs::path path;
  Manifest manifest;
  FeatureMatrix features;
};

Loaded load(const fs::path& path) {
  Loaded l{path, load_manifest(path), {}};
  l.features = load_features(resolve_feature_path(path, l.manifest));
  const auto report = validate(l.manifest, l.features);
  if (!report.ok()) throw ValidationError(path.string() + ":\n" + report.to_string());
  return l;
}

// Copy of `m` whose feature_file still resolves when written into `out_dir`.
Manifest relocated(Manifest m, const fs::path& source, const fs::path& out_dir) {
  const fs::path features = fs::weakly_canonical(resolve_feature_path(source, m));
  m.feature_file = fs::relative(features, fs::weakly_canonical(out_dir)).generic_string();
  return m;
}

void write_manifest(const Manifest& m, const fs::path& source, const fs::path& path) {
  const fs::path dir = path.parent_path().empty() ? fs::path(".") : path.parent_path();
  fs::create_directories(dir);
  save_manifest(relocated(m, source, dir), path);
}

ordered_json direction_json(const DirectionMetrics& d) {
  ordered_json j;
  j["ndcg"] = 100.0 * d.ndcg;
  j["map"] = 100.0 * d.map;
  j["r1"] = d.r1;
  j["r5"] = d.r5;
  j["r10"] = d.r10;
  j["medr"] = d.median_rank;
  j["mnr"] = d.mean_rank;
  j["rsum"] = d.rsum;
  return j;
}

void print_report(const MetricsReport& r) {
  auto line = [](const char* dir, const DirectionMetrics& d) {
    std::cout << std::fixed << std::setprecision(2) << dir << "  nDCG " << 100.0 * d.ndcg
              << "  mAP " << 100.0 * d.map << "  R@1 " << d.r1 << "  R@5 " << d.r5
              << "  R@10 " << d.r10 << "  MedR " << d.median_rank << "  MnR "
              << d.mean_rank << "  Rsum " << d.rsum << '\n';
  };
  line("T2V", r.t2v);
  line("V2T", r.v2t);
  std::cout << "AVG  nDCG " << 100.0 * r.avg_ndcg << "  mAP " << 100.0 * r.avg_map << '\n';
}

ClassKey parse_class(const std::string& s) {
  const auto comma = s.find(',');
  try {
    if (comma == std::string::npos) throw std::invalid_argument(s);
    return {std::stoi(s.substr(0, comma)), std::stoi(s.substr(comma + 1))};
  } catch (const std::exception&) {
    throw ValidationError("--class expects VERB,NOUN ids, got \"" + s + "\"");
  }
}

// ---- options ---------------------------------------------------------------

struct Common {
  std::optional<std::uint64_t> seed;
  fs::path out;
  fs::path config;
  int jobs = 1;
};

struct TrainOverrides {
  std::optional<std::int64_t> epochs;
  std::optional<std::int64_t> batch_size;
  std::optional<double> learning_rate;
  std::optional<double> momentum;
  std::optional<double> margin;
  std::optional<std::string> negatives;
  std::optional<int> embed_dim;

  void add_to(CLI::App* app) {
    app->add_option("--epochs", epochs, "Training epochs");
    app->add_option("--batch-size", batch_size, "Pairs per mini-batch");
    app->add_option("--lr", learning_rate, "SGD learning rate");
    app->add_option("--momentum", momentum, "SGD momentum");
    app->add_option("--margin", margin, "Hinge margin");
    app->add_option("--negatives", negatives, "hardest or all");
    app->add_option("--embed-dim", embed_dim, "Joint embedding size");
  }

  // Config file first, then flags.
  TrainConfig resolve(const Common& common) const {
    TrainConfig c = common.config.empty()
                        ? TrainConfig{}
                        : train_config_from_json(read_text(common.config));
    if (epochs) c.epochs = *epochs;
    if (batch_size) c.batch_size = *batch_size;
    if (learning_rate) c.learning_rate = *learning_rate;
    if (momentum) c.momentum = *momentum;
    if (margin) c.margin = *margin;
    if (negatives) c.negatives = parse_negative_strategy(*negatives);
    if (embed_dim) c.embed_dim = *embed_dim;
    if (common.seed) c.seed = *common.seed;
    c.check();
    return c;
  }
};

void add_common(CLI::App* app, Common& c, bool out_required = true) {
  app->add_option("--seed", c.seed, "Random seed");
  auto* out = app->add_option("--out", c.out, "Output path");
  if (out_required) out->required();
  app->add_option("--config", c.config, "JSON config file; flags override its values");
  app->add_option("--jobs", c.jobs, "Worker threads")->check(CLI::PositiveNumber);
}

// ---- commands --------------------------------------------------------------

void cmd_gen(const Common& c) {
  GenConfig g = c.config.empty() ? GenConfig{} : gen_config_from_json(read_text(c.config));
  if (c.seed) g.seed = *c.seed;
  g.check();
  const SynthData data = generate(g);
  write_synth(data, g, c.out);
  std::cout << "wrote " << data.train.clips.size() << " train and " << data.test.clips.size()
            << " test clips to " << c.out.string() << '\n';
}

struct AuditArgs {
  fs::path train, test, model;
  std::vector<double> thresholds{60.0, 200.0};
  std::int64_t top_k = 20;
  SuspectFilter filter;
};

void cmd_audit(const Common& c, const AuditArgs& a) {
  const Manifest train = load_manifest(a.train);
  const Manifest test = load_manifest(a.test);
  const auto stats = class_frame_stats(train, test);
  const auto series = discrepancy_series(stats, a.thresholds);
  write_audit_report(stats, distribution_summary(train), distribution_summary(test), series,
                     c.out);
  std::cout << "common classes: " << series.values.size() << '\n';
  for (std::size_t i = 0; i < series.thresholds.size(); ++i) {
    std::cout << "|discrepancy| >= " << series.thresholds[i] << ": "
              << series.exceed_counts[i] << '\n';
  }
  if (a.model.empty()) return;

  const Loaded t = load(a.test);
  const ModelParams params = load_params(a.model);
  const auto t2v = similarity_matrix(params, t.manifest, t.manifest, t.features);
  const auto diag = query_diagnostics(t2v, t.manifest, t.manifest, a.top_k);
  const auto suspects = suspected_bias_cases(diag, train, index_stats(stats), a.filter);
  ordered_json j;
  j["top_k"] = a.top_k;
  j["suspects"] = suspects;
  auto& q = j["queries"] = ordered_json::array();
  for (const auto& d : diag) {
    q.push_back({{"query_id", d.query_id}, {"gt_rank", d.gt_rank}, {"top_avg_len", d.top_avg_len}});
  }
  write_text(c.out / "suspects.json", j.dump(2) + "\n");
  std::cout << "suspected bias cases: " << suspects.size() << " of " << diag.size() << '\n';
}

struct DebiasArgs {
  fs::path train, test;
  PruneParams prune;
  std::string class_key;
  std::optional<std::int64_t> count;
  fs::path match_log;
};

void finish_debias(const Common& c, const fs::path& source, const DebiasResult& r) {
  write_manifest(r.manifest, source, c.out / "train.jsonl");
  write_removal_log(r.log, c.out / "removal_log.json");
  std::cout << "removed " << r.log.total_removed << " clips";
  if (r.log.classes_touched > 0) std::cout << " from " << r.log.classes_touched << " classes";
  std::cout << "; " << r.manifest.clips.size() << " remain\n";
}

void cmd_rmv_all(const Common& c, const DebiasArgs& a) {
  finish_debias(c, a.train, rmv_all(load_manifest(a.train), load_manifest(a.test), a.prune));
}

void cmd_rmv_one(const Common& c, const DebiasArgs& a) {
  finish_debias(c, a.train, rmv_one(load_manifest(a.train), load_manifest(a.test),
                                    parse_class(a.class_key), a.prune));
}

void cmd_rmv_rand(const Common& c, const DebiasArgs& a) {
  std::int64_t n = 0;
  if (a.count) {
    n = *a.count;
  } else if (!a.match_log.empty()) {
    n = nlohmann::json::parse(read_text(a.match_log)).at("total_removed").get<std::int64_t>();
  } else {
    throw ValidationError("rmv-rand needs --count or --match-log");
  }
  finish_debias(c, a.train, rmv_rand(load_manifest(a.train), n, c.seed.value_or(0)));
}

struct SplitArgs {
  fs::path train, test;
  std::int64_t m = 2;
  std::optional<double> th;
  std::optional<double> cut;
};

double test_mean(const SplitArgs& a, const char* what) {
  if (a.test.empty()) {
    throw ValidationError(std::string("split: give ") + what + " or --test");
  }
  return mean_frame_length(load_manifest(a.test));
}

void finish_split(const Common& c, const SplitArgs& a, const Manifest& train,
                  const SplitPlan& plan) {
  fs::create_directories(c.out);
  write_plan(plan, c.out / "plan.json");
  const auto parts = materialize(plan, train);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    write_manifest(parts[k], a.train, c.out / ("part_" + std::to_string(k + 1) + ".jsonl"));
  }
  std::cout << to_string(plan.method) << " split sizes:";
  for (auto s : plan.sizes) std::cout << ' ' << s;
  std::cout << '\n';
}

void cmd_split(const Common& c, const SplitArgs& a, SplitMethod method) {
  const Manifest train = load_manifest(a.train);
  SplitPlan plan;
  switch (method) {
    case SplitMethod::kEqual:
      plan = equal_splits(train, a.m);
      break;
    case SplitMethod::kAdjusted: {
      const double th =
          a.th ? *a.th : adjusted_threshold_fraction(train, a.m, test_mean(a, "--th"));
      plan = adjusted_splits(train, a.m, th);
      break;
    }
    case SplitMethod::kThreshold:
      plan = threshold_split(train, a.cut ? *a.cut : test_mean(a, "--cut"));
      break;
  }
  finish_split(c, a, train, plan);
}

void cmd_train(const Common& c, const fs::path& train_path, const TrainOverrides& o) {
  const TrainConfig config = o.resolve(c);
  const Loaded data = load(train_path);
  const TrainResult r = train(data.manifest, data.features, config);
  for (std::size_t e = 0; e < r.epoch_loss.size(); ++e) {
    std::cout << "epoch " << e + 1 << " loss " << r.epoch_loss[e] << '\n';
  }
  save_params(r.params, r.config, c.out);
}

struct EvalArgs {
  std::vector<fs::path> models;
  fs::path test;
  std::string weights = "uniform";
  std::vector<std::int64_t> split_sizes;
  fs::path plan;
  std::int64_t ndcg_cutoff = 0;
  double map_threshold = 1.0;
};

void cmd_eval(const Common& c, const EvalArgs& a) {
  const Loaded test = load(a.test);
  FusionSpec spec;
  spec.mode = parse_weight_mode(a.weights);
  for (const auto& m : a.models) spec.model_refs.push_back(m.string());
  if (!a.plan.empty()) {
    spec.split_sizes = nlohmann::json::parse(read_text(a.plan))
                           .at("sizes")
                           .get<std::vector<std::int64_t>>();
  } else if (!a.split_sizes.empty()) {
    spec.split_sizes = a.split_sizes;
  } else if (spec.mode == WeightMode::kUniformSum) {
    spec.split_sizes.assign(a.models.size(), 1);
  } else {
    throw ValidationError("proportional weights need --plan or --split-sizes");
  }

  std::vector<SimilarityMatrix> mats;
  for (const auto& m : a.models) {
    mats.push_back(similarity_matrix(load_params(m), test.manifest, test.manifest, test.features));
  }
  const SimilarityMatrix fused = fuse(mats, spec);
  const RelevancyMatrix rel = relevancy_matrix(test.manifest, test.manifest);
  EvalOptions eo;
  eo.ndcg_cutoff = a.ndcg_cutoff;
  eo.map_threshold = a.map_threshold;
  const MetricsReport report = evaluate(fused, rel, eo);

  std::vector<std::string> ids;
  for (const auto& clip : test.manifest.clips) ids.push_back(clip.clip_id);
  fs::create_directories(c.out);
  export_matrix(fused.scores, ids, ids, c.out / "t2v.fvb", c.out / "t2v.json", "similarity_t2v");
  export_matrix(rel.values, ids, ids, c.out / "relevancy.fvb", c.out / "relevancy.json",
                "relevancy");
  ordered_json j;
  j["models"] = spec.model_refs;
  j["weights"] = to_string(spec.mode);
  j["split_sizes"] = spec.split_sizes;
  j["ndcg_cutoff"] = a.ndcg_cutoff;
  j["map_threshold"] = a.map_threshold;
  j["T2V"] = direction_json(report.t2v);
  j["V2T"] = direction_json(report.v2t);
  j["AVG"] = {{"ndcg", 100.0 * report.avg_ndcg}, {"map", 100.0 * report.avg_map}};
  write_text(c.out / "metrics.json", j.dump(2) + "\n");
  print_report(report);
}

struct ReportArgs {
  fs::path results;
  std::string baseline;
  std::int64_t best_of = 0;
};

void cmd_report(const Common& c, const ReportArgs& a) {
  ReportOptions o;
  if (!a.baseline.empty()) o.baseline_name = a.baseline;
  o.best_of = a.best_of;
  const auto rows = read_results_csv(a.results);
  write_report(rows, o, c.out);
  for (const auto& s : summarize(rows, o)) {
    if (s.direction != "AVG" || s.metric != "ndcg") continue;
    std::cout << std::fixed << std::setprecision(2) << s.name << " [" << s.variant
              << "] avg nDCG mean " << s.mean << " (min " << s.min << ", max " << s.max << ")";
    if (s.delta) std::cout << " delta " << std::showpos << *s.delta << std::noshowpos;
    std::cout << '\n';
  }
}

struct GradArgs {
  fs::path train;
  std::int64_t batches = 20;
  std::int64_t batch_size = 4;
  double scale = 0.5;
  double tolerance = 1e-4;
  double h = 1e-5;
  std::optional<std::size_t> corrupt;
};

bool cmd_gradcheck(const Common& c, const GradArgs& a, const TrainOverrides& o) {
  const TrainConfig config = o.resolve(c);
  const Loaded data = load(a.train);
  const Vocabulary vocab = Vocabulary::from_manifest(data.manifest);
  const auto samples = make_samples(data.manifest, data.features, vocab);
  if (static_cast<std::int64_t>(samples.size()) < a.batch_size || a.batch_size < 2) {
    throw ValidationError("gradcheck: need a batch size in [2, #clips]");
  }
  Rng rng(config.seed);
  double worst = 0.0;
  for (std::int64_t b = 0; b < a.batches; ++b) {
    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<const Sample*> batch;
    for (std::int64_t i = 0; i < a.batch_size; ++i) batch.push_back(&samples[order[i]]);
    ModelParams params(vocab, config.embed_dim, static_cast<int>(data.features.dim()));
    params.randomize(rng.next_u64(), a.scale);
    GradCheckOptions go;
    go.h = a.h;
    go.seed = rng.next_u64();
    go.corrupt_coordinate = a.corrupt;
    const auto r = grad_check(params, batch, config, go);
    std::cout << "batch " << b + 1 << ": max relative error " << std::scientific
              << r.max_rel_error << " at coordinate " << r.worst_coordinate << " ("
              << r.coords_checked << " checked)\n"
              << std::defaultfloat;
    worst = std::max(worst, r.max_rel_error);
  }
  const bool ok = worst <= a.tolerance;
  std::cout << (ok ? "PASS" : "FAIL") << ": worst " << std::scientific << worst
            << " vs tolerance " << a.tolerance << '\n';
  return ok;
}

void cmd_run(const Common& c, const fs::path& spec_path) {
  const fs::path path = spec_path.empty() ? c.config : spec_path;
  if (path.empty()) throw ValidationError("run: give --spec or --config");
  const auto specs = experiments_from_json(read_text(path), path.parent_path());
  const auto outcomes = run_experiments(specs, c.out, c.jobs);
  for (const auto& o : outcomes) {
    double sum = 0.0;
    for (const auto& s : o.seeds) sum += 100.0 * s.report.avg_ndcg;
    std::cout << o.spec.name << ": mean avg nDCG " << std::fixed << std::setprecision(2)
              << sum / static_cast<double>(o.seeds.size()) << " over " << o.seeds.size()
              << " seeds\n";
  }
}

}  // namespace
}  // namespace lenbias

int main(int argc, char** argv) {
  using namespace lenbias;
  CLI::App app{"Frame-length bias toolkit for text-video retrieval"};
  app.require_subcommand(1);
  std::function<int()> action;

  Common common;

  auto* gen = app.add_subcommand("gen", "Generate a synthetic benchmark");
  add_common(gen, common);
  gen->callback([&] { action = [&] { cmd_gen(common); return 0; }; });

  AuditArgs audit_args;
  auto* audit = app.add_subcommand("audit", "Per-class frame-length discrepancy report");
  add_common(audit, common);
  audit->add_option("--train", audit_args.train, "Training manifest")->required();
  audit->add_option("--test", audit_args.test, "Test manifest")->required();
  audit->add_option("--thresholds", audit_args.thresholds, "Discrepancy thresholds (frames)");
  audit->add_option("--model", audit_args.model, "Model for failure-case diagnostics");
  audit->add_option("--top-k", audit_args.top_k, "Gallery items averaged per query");
  audit->add_option("--min-disc", audit_args.filter.min_disc, "Minimum class discrepancy");
  audit->add_option("--tail", audit_args.filter.tail_threshold, "Tail class clip count");
  audit->callback([&] { action = [&] { cmd_audit(common, audit_args); return 0; }; });

  DebiasArgs debias_args;
  auto* debias = app.add_subcommand("debias", "Prune training clips");
  debias->require_subcommand(1);
  auto add_debias = [&](const char* name, const char* help, bool needs_test) {
    auto* sub = debias->add_subcommand(name, help);
    add_common(sub, common);
    sub->add_option("--train", debias_args.train, "Training manifest")->required();
    if (needs_test) {
      sub->add_option("--test", debias_args.test, "Test manifest")->required();
      sub->add_option("--delta", debias_args.prune.delta, "Tolerated gap (frames)");
      sub->add_option("--alpha", debias_args.prune.alpha, "Minimum clips kept per class");
    }
    return sub;
  };
  auto* rmv_all_cmd = add_debias("rmv-all", "Prune every common class", true);
  rmv_all_cmd->callback([&] { action = [&] { cmd_rmv_all(common, debias_args); return 0; }; });
  auto* rmv_one_cmd = add_debias("rmv-one", "Prune one class", true);
  rmv_one_cmd->add_option("--class", debias_args.class_key, "VERB,NOUN")->required();
  rmv_one_cmd->callback([&] { action = [&] { cmd_rmv_one(common, debias_args); return 0; }; });
  auto* rmv_rand_cmd = add_debias("rmv-rand", "Remove random clips", false);
  rmv_rand_cmd->add_option("--count", debias_args.count, "Clips to remove");
  rmv_rand_cmd->add_option("--match-log", debias_args.match_log,
                           "Remove as many clips as this removal_log.json");
  rmv_rand_cmd->callback([&] { action = [&] { cmd_rmv_rand(common, debias_args); return 0; }; });

  SplitArgs split_args;
  auto* split = app.add_subcommand("split", "Partition a training set by frame length");
  split->require_subcommand(1);
  for (SplitMethod method : {SplitMethod::kEqual, SplitMethod::kAdjusted, SplitMethod::kThreshold}) {
    auto* sub = split->add_subcommand(to_string(method), "");
    add_common(sub, common);
    sub->add_option("--train", split_args.train, "Training manifest")->required();
    sub->add_option("--test", split_args.test, "Test manifest (mean length threshold)");
    if (method != SplitMethod::kThreshold) sub->add_option("--m", split_args.m, "Number of splits");
    if (method == SplitMethod::kAdjusted) sub->add_option("--th", split_args.th, "Last-cut fraction");
    if (method == SplitMethod::kThreshold) sub->add_option("--cut", split_args.cut, "Frame-length cut");
    sub->callback([&, method] {
      action = [&, method] { cmd_split(common, split_args, method); return 0; };
    });
  }
  split->get_subcommand("equal")->description("M contiguous chunks of equal size");
  split->get_subcommand("adjusted")->description("Halving peel, last cut at th");
  split->get_subcommand("threshold")->description("Two parts at a frame-length cut");

  fs::path train_path;
  TrainOverrides overrides;
  auto* train_cmd = app.add_subcommand("train", "Train one retrieval model");
  add_common(train_cmd, common);
  train_cmd->add_option("--train", train_path, "Training manifest")->required();
  overrides.add_to(train_cmd);
  train_cmd->callback([&] { action = [&] { cmd_train(common, train_path, overrides); return 0; }; });

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Score models on a test manifest, fusing several");
  add_common(eval, common);
  eval->add_option("--model", eval_args.models, "Model file; repeat for split models")->required();
  eval->add_option("--test", eval_args.test, "Test manifest")->required();
  eval->add_option("--weights", eval_args.weights, "uniform or proportional")
      ->check(CLI::IsMember({"uniform", "proportional"}));
  eval->add_option("--split-sizes", eval_args.split_sizes, "Training clips per split model");
  eval->add_option("--plan", eval_args.plan, "plan.json providing split sizes");
  eval->add_option("--ndcg-cutoff", eval_args.ndcg_cutoff, "nDCG cutoff; 0 = whole gallery");
  eval->add_option("--map-threshold", eval_args.map_threshold, "Relevancy counted as relevant");
  eval->callback([&] { action = [&] { cmd_eval(common, eval_args); return 0; }; });

  ReportArgs report_args;
  auto* report = app.add_subcommand("report", "Summarize results.csv across seeds");
  add_common(report, common);
  report->add_option("--results", report_args.results, "results.csv")->required();
  report->add_option("--baseline", report_args.baseline, "Entry the deltas refer to");
  report->add_option("--best-of", report_args.best_of, "Also report the mean best of K seeds");
  report->callback([&] { action = [&] { cmd_report(common, report_args); return 0; }; });

  GradArgs grad_args;
  TrainOverrides grad_overrides;
  auto* grad = app.add_subcommand("gradcheck", "Compare analytic and numeric gradients");
  add_common(grad, common, false);
  grad->add_option("--train", grad_args.train, "Manifest to draw batches from")->required();
  grad->add_option("--batches", grad_args.batches, "Random batches to check");
  grad->add_option("--pairs", grad_args.batch_size, "Pairs per checked batch");
  grad->add_option("--scale", grad_args.scale, "Parameter init scale for the check");
  grad->add_option("--tol", grad_args.tolerance, "Maximum relative error");
  grad->add_option("--step", grad_args.h, "Finite-difference step");
  grad->add_option("--corrupt", grad_args.corrupt, "Perturb this gradient coordinate");
  grad_overrides.add_to(grad);
  grad->callback([&] {
    action = [&] { return cmd_gradcheck(common, grad_args, grad_overrides) ? 0 : kExitStage; };
  });

  fs::path spec_path;
  auto* run = app.add_subcommand("run", "Run experiment specs end to end");
  add_common(run, common);
  run->add_option("--spec", spec_path, "Experiment spec JSON");
  run->callback([&] { action = [&] { cmd_run(common, spec_path); return 0; }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitValidation;
  }

  try {
    return action();
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitStage;
  }
}
