#include "lenbias/experiment.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "json.hpp"
#include "lenbias/error.h"
#include "lenbias/relevance.h"
#include "lenbias/trainer.h"

namespace lenbias {
namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr std::uint64_t kSeedStride = 0x9E3779B97F4A7C15ULL;

struct Data {
  Manifest train;
  Manifest test;
  std::shared_ptr<const FeatureMatrix> train_features;
  std::shared_ptr<const FeatureMatrix> test_features;
};

// Runs `fn` as pipeline stage `name`. Validation failures keep their type so
// the CLI can tell bad input from a failed computation.
template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(name) + ": " + e.what());
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

std::shared_ptr<const FeatureMatrix> load_checked(const std::filesystem::path& manifest_path,
                                                  const Manifest& manifest) {
  auto features = std::make_shared<const FeatureMatrix>(
      load_features(resolve_feature_path(manifest_path, manifest)));
  const auto report = validate(manifest, *features);
  if (!report.ok()) {
    throw ValidationError(manifest_path.string() + ":\n" + report.to_string());
  }
  return features;
}

Data load_data(const DataSpec& spec, std::uint64_t seed) {
  Data d;
  if (spec.synth) {
    GenConfig g = *spec.synth;
    g.seed += seed;
    SynthData s = generate(g);
    d.train = std::move(s.train);
    d.test = std::move(s.test);
    d.train_features = std::make_shared<const FeatureMatrix>(std::move(s.features));
    d.test_features = d.train_features;
    return d;
  }
  d.train = load_manifest(spec.train);
  d.test = load_manifest(spec.test);
  d.train_features = load_checked(spec.train, d.train);
  if (resolve_feature_path(spec.train, d.train) == resolve_feature_path(spec.test, d.test)) {
    d.test_features = d.train_features;
    const auto report = validate(d.test, *d.test_features);
    if (!report.ok()) throw ValidationError(spec.test.string() + ":\n" + report.to_string());
  } else {
    d.test_features = load_checked(spec.test, d.test);
  }
  return d;
}

SplitPlan make_plan(const SplitSpec& s, const Manifest& train, const Manifest& test) {
  switch (s.method) {
    case SplitMethod::kEqual:
      return equal_splits(train, s.m);
    case SplitMethod::kAdjusted: {
      const double th =
          s.th ? *s.th : adjusted_threshold_fraction(train, s.m, mean_frame_length(test));
      return adjusted_splits(train, s.m, th);
    }
    case SplitMethod::kThreshold:
      return threshold_split(train, s.cut ? *s.cut : mean_frame_length(test));
  }
  throw InvalidArgument("unknown split method");
}

std::uint64_t ensemble_seed(std::uint64_t seed, std::int64_t k) {
  return seed + static_cast<std::uint64_t>(k) * kSeedStride;
}

void append_rows(std::vector<ResultRow>& rows, const ExperimentSpec& spec,
                 std::uint64_t seed, const std::string& variant,
                 const MetricsReport& report) {
  for (const auto& m : flatten(report)) {
    rows.push_back({spec.name, to_string(spec.method), seed, variant, m.direction,
                    m.metric, m.value});
  }
}

ordered_json metrics_json(const MetricsReport& r) {
  auto dir = [](const DirectionMetrics& m) {
    ordered_json j;
    j["ndcg"] = 100.0 * m.ndcg;
    j["map"] = 100.0 * m.map;
    j["r1"] = m.r1;
    j["r5"] = m.r5;
    j["r10"] = m.r10;
    j["medr"] = m.median_rank;
    j["mnr"] = m.mean_rank;
    j["rsum"] = m.rsum;
    return j;
  };
  ordered_json j;
  j["T2V"] = dir(r.t2v);
  j["V2T"] = dir(r.v2t);
  j["AVG"] = {{"ndcg", 100.0 * r.avg_ndcg}, {"map", 100.0 * r.avg_map}};
  return j;
}

ordered_json outcome_json(const ExperimentOutcome& o, const std::string& status,
                          const std::string& error) {
  ordered_json j;
  j["name"] = o.spec.name;
  j["status"] = status;
  if (!error.empty()) j["error"] = error;
  j["spec"] = ordered_json::parse(experiment_to_json(o.spec));
  auto& seeds = j["seeds"] = ordered_json::array();
  for (const auto& s : o.seeds) {
    ordered_json e;
    e["seed"] = s.seed;
    e["train_clips"] = s.train_clips;
    e["removed_clips"] = s.removed_clips;
    if (!s.split_sizes.empty()) e["split_sizes"] = s.split_sizes;
    e["metrics"] = metrics_json(s.report);
    if (!s.split_reports.empty()) {
      auto& parts = e["split_metrics"] = ordered_json::array();
      for (const auto& r : s.split_reports) parts.push_back(metrics_json(r));
    }
    seeds.push_back(std::move(e));
  }
  return j;
}

void write_outputs(const std::vector<ExperimentOutcome>& done,
                   const ExperimentOutcome* failed, const std::string& error,
                   const std::filesystem::path& out_dir) {
  std::vector<ResultRow> rows;
  ordered_json j;
  j["status"] = failed ? "incomplete" : "complete";
  auto& list = j["experiments"] = ordered_json::array();
  for (const auto& o : done) {
    rows.insert(rows.end(), o.rows.begin(), o.rows.end());
    list.push_back(outcome_json(o, "complete", ""));
  }
  if (failed) {
    rows.insert(rows.end(), failed->rows.begin(), failed->rows.end());
    list.push_back(outcome_json(*failed, "incomplete", error));
  }
  write_results_csv(rows, out_dir / "results.csv");
  write_file(out_dir / "results.json", j.dump(2) + "\n");
}

ExperimentSpec spec_from_json(const json& j, const std::filesystem::path& base_dir) {
  ExperimentSpec s;
  s.name = j.at("name").get<std::string>();
  s.method = parse_method(j.at("method").get<std::string>());

  const json& data = j.at("data");
  if (data.contains("synth")) {
    s.data.synth = gen_config_from_json(data.at("synth").dump());
  } else {
    auto resolve = [&](const std::string& p) {
      std::filesystem::path path(p);
      return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
    };
    s.data.train = resolve(data.at("train").get<std::string>());
    s.data.test = resolve(data.at("test").get<std::string>());
  }

  if (j.contains("split") && s.method == Method::kCausal) {
    const json& sp = j.at("split");
    SplitSpec split;
    split.method = parse_split_method(sp.value("method", std::string("adjusted")));
    split.m = sp.value("m", split.m);
    if (sp.contains("th")) split.th = sp.at("th").get<double>();
    if (sp.contains("cut")) split.cut = sp.at("cut").get<double>();
    s.split = split;
  }
  if (j.contains("train")) s.train = train_config_from_json(j.at("train").dump());
  if (j.contains("eval")) {
    const json& e = j.at("eval");
    s.eval.weights = parse_weight_mode(e.value("weights", std::string("uniform")));
    s.eval.ndcg_cutoff = e.value("ndcg_cutoff", s.eval.ndcg_cutoff);
    s.eval.map_threshold = e.value("map_threshold", s.eval.map_threshold);
    s.eval.per_split_only = e.value("per_split_only", s.eval.per_split_only);
  }
  if (j.contains("prune")) {
    s.prune.delta = j.at("prune").value("delta", s.prune.delta);
    s.prune.alpha = j.at("prune").value("alpha", s.prune.alpha);
  }
  s.ensemble_size = j.value("ensemble_size", s.ensemble_size);
  if (j.contains("seeds")) {
    const json& seeds = j.at("seeds");
    if (seeds.is_number_unsigned()) {
      s.seeds.clear();
      for (std::uint64_t k = 0; k < seeds.get<std::uint64_t>(); ++k) s.seeds.push_back(k);
    } else {
      s.seeds = seeds.get<std::vector<std::uint64_t>>();
    }
  }
  return s;
}

double parse_double(const std::string& field, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used == field.size()) return v;
  } catch (const std::exception&) {
  }
  throw ValidationError("results.csv line " + std::to_string(line) +
                        ": bad number \"" + field + "\"");
}

std::string format_double(double v) {
  std::ostringstream ss;
  ss << std::setprecision(12) << v;
  return ss.str();
}

}  // namespace

const char* to_string(Method m) {
  switch (m) {
    case Method::kBaseline: return "baseline";
    case Method::kRmvAll: return "rmv_all";
    case Method::kRmvRand: return "rmv_rand";
    case Method::kEnsemble: return "ensemble";
    case Method::kCausal: return "causal";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  for (Method m : {Method::kBaseline, Method::kRmvAll, Method::kRmvRand,
                   Method::kEnsemble, Method::kCausal}) {
    if (s == to_string(m)) return m;
  }
  throw ValidationError("unknown method \"" + s + "\"");
}

void ExperimentSpec::check() const {
  auto fail = [this](const std::string& msg) {
    throw ValidationError("experiment \"" + name + "\": " + msg);
  };
  if (name.empty()) fail("name is empty");
  if (name.find_first_of(",\"\n\r") != std::string::npos) {
    fail("name must not contain commas, quotes or newlines");
  }
  if (!data.synth && (data.train.empty() || data.test.empty())) {
    fail("data needs train and test manifests, or a synth config");
  }
  if (seeds.empty()) fail("no seeds");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    fail("duplicate seeds");
  }
  if (method == Method::kCausal) {
    if (!split) fail("causal needs a split");
    if (split->m < 1) fail("split.m must be >= 1");
    if (split->method == SplitMethod::kAdjusted && split->m < 2) {
      fail("adjusted splits need m >= 2; use equal with m = 1 for a single split");
    }
    if (split->method == SplitMethod::kThreshold && split->m != 2) {
      fail("threshold splits have exactly 2 parts");
    }
    if (split->th && (*split->th <= 0.0 || *split->th >= 1.0)) fail("split.th must be in (0, 1)");
  } else if (eval.per_split_only) {
    fail("per_split_only applies to causal only");
  }
  if (method == Method::kEnsemble && ensemble_size < 1) fail("ensemble_size must be >= 1");
  if (eval.ndcg_cutoff < 0) fail("ndcg_cutoff must be >= 0");
  if (prune.delta < 0.0 || prune.alpha < 0) fail("prune parameters must be >= 0");
  try {
    train.check();
  } catch (const InvalidArgument& e) {
    fail(e.what());
  }
}

std::vector<ExperimentSpec> experiments_from_json(const std::string& text,
                                                  const std::filesystem::path& base_dir) {
  std::vector<ExperimentSpec> out;
  try {
    const json root = json::parse(text);
    std::vector<json> entries;
    if (root.is_array()) {
      entries.assign(root.begin(), root.end());
    } else if (root.contains("experiments")) {
      const json defaults = root.value("defaults", json::object());
      for (const auto& e : root.at("experiments")) {
        json merged = defaults;
        merged.merge_patch(e);
        entries.push_back(std::move(merged));
      }
    } else {
      entries.push_back(root);
    }
    for (const auto& e : entries) out.push_back(spec_from_json(e, base_dir));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("experiment spec: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ValidationError(std::string("experiment spec: ") + e.what());
  }
  std::set<std::string> names;
  for (const auto& s : out) {
    s.check();
    if (!names.insert(s.name).second) {
      throw ValidationError("experiment spec: duplicate name \"" + s.name + "\"");
    }
  }
  return out;
}

std::string experiment_to_json(const ExperimentSpec& s) {
  ordered_json j;
  j["name"] = s.name;
  j["method"] = to_string(s.method);
  if (s.data.synth) {
    j["data"]["synth"] = ordered_json::parse(gen_config_to_json(*s.data.synth));
  } else {
    j["data"]["train"] = s.data.train.string();
    j["data"]["test"] = s.data.test.string();
  }
  if (s.split) {
    ordered_json sp;
    sp["method"] = to_string(s.split->method);
    sp["m"] = s.split->m;
    if (s.split->th) sp["th"] = *s.split->th;
    if (s.split->cut) sp["cut"] = *s.split->cut;
    j["split"] = sp;
  }
  j["train"] = ordered_json::parse(train_config_to_json(s.train));
  j["eval"] = {{"weights", to_string(s.eval.weights)},
               {"ndcg_cutoff", s.eval.ndcg_cutoff},
               {"map_threshold", s.eval.map_threshold},
               {"per_split_only", s.eval.per_split_only}};
  j["prune"] = {{"delta", s.prune.delta}, {"alpha", s.prune.alpha}};
  if (s.method == Method::kEnsemble) j["ensemble_size"] = s.ensemble_size;
  j["seeds"] = s.seeds;
  return j.dump(2);
}

ExperimentOutcome run_experiment(const ExperimentSpec& spec, const RunOptions& options) {
  spec.check();
  ExperimentOutcome out;
  out.spec = spec;
  for (const std::uint64_t seed : spec.seeds) {
    SeedOutcome so;
    so.seed = seed;
    const auto seed_dir = options.out_dir
        ? std::optional(*options.out_dir / spec.name / ("seed_" + std::to_string(seed)))
        : std::nullopt;

    Data data = stage("data", [&] { return load_data(spec.data, seed); });
    const std::int64_t original_size = static_cast<std::int64_t>(data.train.clips.size());

    if (spec.method == Method::kRmvAll || spec.method == Method::kRmvRand) {
      stage("debias", [&] {
        DebiasResult r = rmv_all(data.train, data.test, spec.prune);
        if (spec.method == Method::kRmvRand) {
          r = rmv_rand(data.train, r.log.total_removed, seed);
        }
        if (seed_dir) {
          std::filesystem::create_directories(*seed_dir);
          write_removal_log(r.log, *seed_dir / "removal_log.json");
        }
        data.train = std::move(r.manifest);
      });
    }
    so.train_clips = static_cast<std::int64_t>(data.train.clips.size());
    so.removed_clips = original_size - so.train_clips;

    TrainConfig config = spec.train;
    config.seed = seed;
    std::vector<SimilarityMatrix> split_mats;

    switch (spec.method) {
      case Method::kBaseline:
      case Method::kRmvAll:
      case Method::kRmvRand: {
        const auto model =
            stage("train", [&] { return train(data.train, *data.train_features, config); });
        so.t2v = stage("eval", [&] {
          return similarity_matrix(model.params, data.test, data.test, *data.test_features);
        });
        break;
      }
      case Method::kEnsemble: {
        std::vector<std::uint64_t> seeds;
        for (std::int64_t k = 0; k < spec.ensemble_size; ++k) {
          seeds.push_back(ensemble_seed(seed, k));
        }
        so.t2v = stage("train", [&] {
          return ensemble(data.train, *data.train_features, data.test, *data.test_features,
                          config, seeds, options.jobs);
        });
        break;
      }
      case Method::kCausal: {
        const SplitPlan plan =
            stage("split", [&] { return make_plan(*spec.split, data.train, data.test); });
        if (seed_dir) {
          std::filesystem::create_directories(*seed_dir);
          write_plan(plan, *seed_dir / "plan.json");
        }
        so.split_sizes = plan.sizes;
        const auto models = stage("train", [&] {
          return train_split_models(plan, data.train, *data.train_features, config,
                                    options.jobs);
        });
        so.t2v = stage("eval", [&] {
          for (const auto& m : models) {
            split_mats.push_back(
                similarity_matrix(m.params, data.test, data.test, *data.test_features));
          }
          FusionSpec fs;
          fs.mode = spec.eval.weights;
          fs.split_sizes = plan.sizes;
          return fuse(split_mats, fs);
        });
        break;
      }
    }

    stage("eval", [&] {
      const RelevancyMatrix rel = relevancy_matrix(data.test, data.test);
      EvalOptions eo;
      eo.ndcg_cutoff = spec.eval.ndcg_cutoff;
      eo.map_threshold = spec.eval.map_threshold;
      so.report = evaluate(so.t2v, rel, eo);
      append_rows(out.rows, spec, seed, "fused", so.report);
      if (!spec.eval.per_split_only) return;
      for (std::size_t k = 0; k < split_mats.size(); ++k) {
        so.split_reports.push_back(evaluate(split_mats[k], rel, eo));
        append_rows(out.rows, spec, seed, "split" + std::to_string(k + 1),
                    so.split_reports.back());
      }
      // Average of the single-split rows, metric by metric.
      std::vector<MetricRow> mean = flatten(so.split_reports.front());
      for (auto& m : mean) m.value = 0.0;
      for (const auto& r : so.split_reports) {
        const auto rows = flatten(r);
        for (std::size_t i = 0; i < rows.size(); ++i) mean[i].value += rows[i].value;
      }
      for (auto& m : mean) {
        m.value /= static_cast<double>(so.split_reports.size());
        out.rows.push_back({spec.name, to_string(spec.method), seed, "split_mean",
                            m.direction, m.metric, m.value});
      }
    });
    out.seeds.push_back(std::move(so));
  }
  return out;
}

std::vector<ExperimentOutcome> run_experiments(const std::vector<ExperimentSpec>& specs,
                                               const std::filesystem::path& out_dir,
                                               int jobs) {
  std::vector<ExperimentOutcome> done;
  RunOptions options;
  options.out_dir = out_dir;
  options.jobs = jobs;
  for (const auto& spec : specs) {
    try {
      done.push_back(run_experiment(spec, options));
    } catch (const std::exception& e) {
      ExperimentOutcome partial;
      partial.spec = spec;
      write_outputs(done, &partial, e.what(), out_dir);
      throw;
    }
  }
  write_outputs(done, nullptr, "", out_dir);
  return done;
}

void write_results_csv(const std::vector<ResultRow>& rows,
                       const std::filesystem::path& path) {
  std::ostringstream ss;
  ss << "name,method,seed,variant,direction,metric,value\n";
  for (const auto& r : rows) {
    ss << r.name << ',' << r.method << ',' << r.seed << ',' << r.variant << ','
       << r.direction << ',' << r.metric << ',' << format_double(r.value) << '\n';
  }
  write_file(path, ss.str());
}

std::vector<ResultRow> read_results_csv(const std::filesystem::path& path) {
  return parse_results_csv(read_file(path));
}

std::vector<ResultRow> parse_results_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != "name,method,seed,variant,direction,metric,value") {
        throw ValidationError("results.csv: unexpected header \"" + line + "\"");
      }
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (f.size() != 7) {
      throw ValidationError("results.csv line " + std::to_string(line_no) +
                            ": expected 7 fields, got " + std::to_string(f.size()));
    }
    ResultRow r;
    r.name = f[0];
    r.method = f[1];
    std::uint64_t seed = 0;
    const auto [ptr, ec] = std::from_chars(f[2].data(), f[2].data() + f[2].size(), seed);
    if (ec != std::errc() || ptr != f[2].data() + f[2].size()) {
      throw ValidationError("results.csv line " + std::to_string(line_no) +
                            ": bad seed \"" + f[2] + "\"");
    }
    r.seed = seed;
    r.variant = f[3];
    r.direction = f[4];
    r.metric = f[5];
    r.value = parse_double(f[6], line_no);
    rows.push_back(std::move(r));
  }
  if (line_no == 0) throw ValidationError("results.csv: empty file");
  return rows;
}

bool lower_is_better(const std::string& metric) {
  return metric == "medr" || metric == "mnr";
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows,
                                  const ReportOptions& options) {
  if (rows.empty()) throw ValidationError("report: no result rows");
  if (options.best_of < 0) throw InvalidArgument("report: best_of must be >= 0");

  using Key = std::tuple<std::string, std::string, std::string, std::string>;
  std::vector<Key> order;
  std::map<Key, std::vector<const ResultRow*>> groups;
  for (const auto& r : rows) {
    Key k{r.name, r.variant, r.direction, r.metric};
    auto [it, inserted] = groups.try_emplace(k);
    if (inserted) order.push_back(k);
    it->second.push_back(&r);
  }

  std::optional<std::string> baseline = options.baseline_name;
  if (!baseline) {
    for (const auto& r : rows) {
      if (r.method == "baseline") {
        baseline = r.name;
        break;
      }
    }
  }

  std::vector<SummaryRow> out;
  std::map<Key, double> means;
  for (const auto& k : order) {
    const auto& g = groups.at(k);
    const bool lower = lower_is_better(std::get<3>(k));
    SummaryRow s;
    std::tie(s.name, s.variant, s.direction, s.metric) = k;
    s.method = g.front()->method;
    s.n = static_cast<std::int64_t>(g.size());
    s.min = s.max = g.front()->value;
    double sum = 0.0;
    for (const auto* r : g) {
      sum += r->value;
      s.min = std::min(s.min, r->value);
      s.max = std::max(s.max, r->value);
    }
    s.mean = sum / static_cast<double>(g.size());
    s.best = lower ? s.min : s.max;
    if (options.best_of > 0) {
      const auto k_rep = static_cast<std::size_t>(options.best_of);
      double acc = 0.0;
      std::size_t blocks = 0;
      for (std::size_t i = 0; i < g.size(); i += k_rep, ++blocks) {
        double b = g[i]->value;
        for (std::size_t j = i; j < std::min(g.size(), i + k_rep); ++j) {
          b = lower ? std::min(b, g[j]->value) : std::max(b, g[j]->value);
        }
        acc += b;
      }
      s.mean_best_of = acc / static_cast<double>(blocks);
    }
    means[k] = s.mean;
    out.push_back(std::move(s));
  }
  if (baseline) {
    for (auto& s : out) {
      const auto it = means.find(Key{*baseline, "fused", s.direction, s.metric});
      if (it != means.end()) s.delta = s.mean - it->second;
    }
  }
  return out;
}

void write_report(const std::vector<ResultRow>& rows, const ReportOptions& options,
                  const std::filesystem::path& out_dir) {
  const auto summary = summarize(rows, options);
  std::ostringstream ss;
  ss << "name,method,variant,direction,metric,n,mean,min,max,best";
  if (options.best_of > 0) ss << ",mean_best_of_" << options.best_of;
  ss << ",delta_vs_baseline\n";
  for (const auto& s : summary) {
    ss << s.name << ',' << s.method << ',' << s.variant << ',' << s.direction << ','
       << s.metric << ',' << s.n << ',' << format_double(s.mean) << ','
       << format_double(s.min) << ',' << format_double(s.max) << ','
       << format_double(s.best);
    if (options.best_of > 0) ss << ',' << format_double(*s.mean_best_of);
    ss << ',' << (s.delta ? format_double(*s.delta) : "") << '\n';
  }
  write_file(out_dir / "summary.csv", ss.str());

  std::ostringstream series;
  series << "name,variant,seed,avg_ndcg\n";
  for (const auto& r : rows) {
    if (r.direction == "AVG" && r.metric == "ndcg") {
      series << r.name << ',' << r.variant << ',' << r.seed << ','
             << format_double(r.value) << '\n';
    }
  }
  write_file(out_dir / "ndcg_series.csv", series.str());
}

}  // namespace lenbias
