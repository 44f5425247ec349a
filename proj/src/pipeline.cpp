#include "scorecard/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "scorecard/error.hpp"
#include "scorecard/rng.hpp"

namespace scorecard {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kStageRatios[4] = {0.5, 0.3, 0.15, 0.05};

void write_json(const json& j, const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  f << j.dump(2) << '\n';
  if (!f) throw Error("write failed for '" + path.string() + "'");
}

json read_json(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open '" + path.string() + "'");
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

template <typename T>
void read_field(const json& j, const char* key, T& out, const std::string& section) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(section + "." + key + ": wrong type");
  }
}

template <typename T>
void read_optional(const json& j, const char* key, std::optional<T>& out, const std::string& section) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  T v{};
  read_field(j, key, v, section);
  out = v;
}

fs::path resolve(const fs::path& p, const fs::path& base) { return p.is_absolute() || base.empty() ? p : base / p; }

std::vector<std::string> csv_header(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open '" + path.string() + "'");
  std::string line;
  std::getline(f, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (cell.size() >= 2 && cell.front() == '"' && cell.back() == '"') cell = cell.substr(1, cell.size() - 2);
    out.push_back(cell);
  }
  return out;
}

// The schema restricted to what scoring needs: model sources, plus the
// target when the file carries it.
Schema scoring_schema(const Schema& full, const LogisticModel& model, const std::vector<std::string>& header) {
  auto in_header = [&](const std::string& c) { return std::find(header.begin(), header.end(), c) != header.end(); };
  std::vector<std::string> need;
  for (const auto& t : model.terms) need.push_back(t.source);
  Schema s;
  s.id_column = in_header(full.id_column) ? full.id_column : "";
  const bool with_target = !model.target.empty() && in_header(model.target) && full.find(model.target);
  if (with_target) s.target = model.target;
  for (const auto& c : full.columns) {
    const bool wanted = std::find(need.begin(), need.end(), c.name) != need.end() || (with_target && c.name == s.target);
    if (wanted) s.columns.push_back(c);
  }
  for (const auto& v : need)
    if (!s.find(v)) throw ConfigError("missing required column '" + v + "' in the schema");
  return s;
}

class Clock {
 public:
  void lap(const std::string& stage) {
    const auto now = std::chrono::steady_clock::now();
    timings_[stage] = std::chrono::duration<double>(now - last_).count();
    last_ = now;
  }
  const json& timings() const { return timings_; }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
  json timings_ = json::object();
};

EvaluationSet evaluate(std::string name, ScoreSet scores, double threshold) {
  EvaluationSet e;
  e.name = std::move(name);
  e.deciles = decile_table(scores);
  e.confusion = confusion_matrix(scores, threshold);
  e.metrics = metrics(e.confusion);
  e.scores = std::move(scores);
  return e;
}

json model_report(const PipelineResult& r, const Schema& schema) {
  json j = to_json(r.model);
  j["schema"] = schema_to_json(schema);
  j["global_null_test"] = {
      {"statistic", r.global_null.statistic}, {"df", r.global_null.df}, {"p_value", r.global_null.p_value}};
  json trace = json::array();
  for (const auto& s : r.stepwise.trace)
    trace.push_back({{"action", s.action == StepwiseStep::Action::kEnter ? "enter" : "remove"},
                     {"term", s.term},
                     {"p_value", s.p_value},
                     {"sbc_after", s.sbc_after}});
  j["stepwise_trace"] = std::move(trace);
  json prune = json::array();
  for (const auto& s : r.prune.steps)
    prune.push_back({{"kept", s.kept},
                     {"dropped", s.dropped},
                     {"correlation", s.correlation},
                     {"cum_captured_top", s.cum_captured_top}});
  j["prune_steps"] = std::move(prune);
  return j;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

void PipelineConfig::validate() const {
  if (input.has_value() == synthetic.has_value())
    throw ConfigError("config: exactly one of 'input' and 'synthetic' must be given");
  if (input) {
    if (input->csv.empty()) throw ConfigError("input.csv: path required");
    if (input->schema.empty()) throw ConfigError("input.schema: path required");
  }
  if (synthetic) synthetic->validate();
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("split.train_fraction: must lie in (0, 1)");
  if (!(stepwise.p_enter > 0.0 && stepwise.p_enter < 1.0)) throw ConfigError("stepwise.p_enter: must lie in (0, 1)");
  if (!(stepwise.p_stay > 0.0 && stepwise.p_stay < 1.0)) throw ConfigError("stepwise.p_stay: must lie in (0, 1)");
  if (stepwise.max_terms && *stepwise.max_terms == 0) throw ConfigError("stepwise.max_terms: must be positive");
  if (!(prune_cutoff > 0.0 && prune_cutoff <= 1.0)) throw ConfigError("prune_cutoff: must lie in (0, 1]");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("threshold: must lie in [0, 1]");
}

void PipelineConfig::override_seed(std::uint64_t s) {
  seed = s;
  split_seed = s;
  if (synthetic) synthetic->seed = s;
}

StagePlan PipelineConfig::resolve_plan(std::size_t n_predictors) const {
  StagePlan p = plan;
  const std::optional<std::size_t>* given[4] = {&counts.retain_after_chi2, &counts.retain_after_t,
                                                &counts.retain_after_iv, &counts.final_retain};
  std::size_t* dest[4] = {&p.retain_after_chi2, &p.retain_after_t, &p.retain_after_iv, &p.final_retain};
  for (int k = 0; k < 4; ++k)
    *dest[k] = given[k]->has_value() ? **given[k]
                                     : std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(
                                                                    kStageRatios[k] * static_cast<double>(n_predictors))));
  p.validate();
  return p;
}

PipelineConfig config_from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  PipelineConfig c;
  read_field(j, "seed", c.seed, "config");
  c.split_seed = c.seed;
  if (j.contains("input")) {
    const auto& in = j.at("input");
    InputPaths p;
    std::string csv, schema, oos;
    read_field(in, "csv", csv, "input");
    read_field(in, "schema", schema, "input");
    read_field(in, "out_of_sample_csv", oos, "input");
    p.csv = csv.empty() ? fs::path{} : resolve(csv, base_dir);
    p.schema = schema.empty() ? fs::path{} : resolve(schema, base_dir);
    if (!oos.empty()) p.out_of_sample_csv = resolve(oos, base_dir);
    c.input = p;
  }
  if (j.contains("synthetic")) {
    json s = j.at("synthetic");
    if (!s.contains("seed")) s["seed"] = c.seed;
    c.synthetic = synthetic_spec_from_json(s);
    read_field(s, "out_of_sample_records", c.out_of_sample_records, "synthetic");
  }
  if (j.contains("screening")) {
    const auto& s = j.at("screening");
    const std::string sec = "screening";
    read_optional(s, "retain_after_chi2", c.counts.retain_after_chi2, sec);
    read_optional(s, "retain_after_t", c.counts.retain_after_t, sec);
    read_optional(s, "retain_after_iv", c.counts.retain_after_iv, sec);
    read_optional(s, "final_retain", c.counts.final_retain, sec);
    read_field(s, "iv_min", c.plan.iv_min, sec);
    read_field(s, "iv_max", c.plan.iv_max, sec);
    read_field(s, "iv_smoothing", c.plan.iv_smoothing, sec);
    read_field(s, "occupancy_min", c.plan.occupancy_min, sec);
    read_field(s, "level_merge_alpha", c.plan.level_merge_alpha, sec);
    read_field(s, "cluster_split_threshold", c.plan.cluster_split_threshold, sec);
  }
  if (j.contains("split")) {
    read_field(j.at("split"), "train_fraction", c.train_fraction, "split");
    read_field(j.at("split"), "seed", c.split_seed, "split");
  }
  if (j.contains("stepwise")) {
    const auto& s = j.at("stepwise");
    read_field(s, "p_enter", c.stepwise.p_enter, "stepwise");
    read_field(s, "p_stay", c.stepwise.p_stay, "stepwise");
    read_optional(s, "max_terms", c.stepwise.max_terms, "stepwise");
  }
  read_field(j, "prune_cutoff", c.prune_cutoff, "config");
  read_field(j, "threshold", c.threshold, "config");
  std::string out;
  read_field(j, "output_dir", out, "config");
  if (!out.empty()) c.output_dir = out;
  c.validate();
  return c;
}

PipelineConfig load_config(const fs::path& path) { return config_from_json(read_json(path), path.parent_path()); }

json to_json(const PipelineConfig& c) {
  json j;
  j["seed"] = c.seed;
  if (c.input) {
    j["input"] = {{"csv", c.input->csv.string()}, {"schema", c.input->schema.string()}};
    if (c.input->out_of_sample_csv) j["input"]["out_of_sample_csv"] = c.input->out_of_sample_csv->string();
  }
  if (c.synthetic) {
    j["synthetic"] = to_json(*c.synthetic);
    j["synthetic"]["out_of_sample_records"] = c.out_of_sample_records;
  }
  auto opt = [](const std::optional<std::size_t>& v) -> json { return v ? json(*v) : json(nullptr); };
  j["screening"] = {{"retain_after_chi2", opt(c.counts.retain_after_chi2)},
                    {"retain_after_t", opt(c.counts.retain_after_t)},
                    {"retain_after_iv", opt(c.counts.retain_after_iv)},
                    {"final_retain", opt(c.counts.final_retain)},
                    {"iv_min", c.plan.iv_min},
                    {"iv_max", c.plan.iv_max},
                    {"iv_smoothing", c.plan.iv_smoothing},
                    {"occupancy_min", c.plan.occupancy_min},
                    {"level_merge_alpha", c.plan.level_merge_alpha},
                    {"cluster_split_threshold", c.plan.cluster_split_threshold}};
  j["split"] = {{"train_fraction", c.train_fraction}, {"seed", c.split_seed}};
  j["stepwise"] = {{"p_enter", c.stepwise.p_enter},
                   {"p_stay", c.stepwise.p_stay},
                   {"max_terms", c.stepwise.max_terms ? json(*c.stepwise.max_terms) : json(nullptr)}};
  j["prune_cutoff"] = c.prune_cutoff;
  j["threshold"] = c.threshold;
  j["output_dir"] = c.output_dir.string();
  return j;
}

// ---------------------------------------------------------------------------
// Runs

const EvaluationSet* PipelineResult::evaluation(std::string_view name) const {
  for (const auto& e : evaluations)
    if (e.name == name) return &e;
  return nullptr;
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  config.validate();
  PipelineResult r;
  Clock clock;
  const bool write = !config.output_dir.empty();
  const fs::path out = config.output_dir;
  if (write) fs::create_directories(out);

  auto emit_json = [&](const json& j, const std::string& name) {
    if (!write) return;
    write_json(j, out / name);
    r.artifacts.emplace_back(name);
  };
  auto manifest = [&](const std::string& status, const std::string& error) {
    json m = {{"version", kVersion},
              {"status", status},
              {"seed", config.seed},
              {"config", to_json(config)},
              {"split",
               {{"train_fraction", config.train_fraction},
                {"train_records", r.train_records},
                {"validation_records", r.validation_records}}},
              {"timings_seconds", clock.timings()}};
    if (!error.empty()) m["error"] = error;
    json files = json::array();
    for (const auto& a : r.artifacts) files.push_back(a.generic_string());
    files.push_back("manifest.json");
    m["artifacts"] = std::move(files);
    write_json(m, out / "manifest.json");
  };

  try {
    // Data
    DataTable raw;
    std::optional<DataTable> raw_oos;
    if (config.input) {
      const auto schema = load_schema(config.input->schema);
      raw = load_table(config.input->csv, schema);
      if (config.input->out_of_sample_csv) raw_oos = load_table(*config.input->out_of_sample_csv, schema);
    } else {
      auto s = generate(*config.synthetic);
      raw = std::move(s.table);
      r.truth = std::move(s.truth);
      if (config.out_of_sample_records > 0)
        raw_oos = generate_sample(*config.synthetic, *r.truth, config.out_of_sample_records, 1);
    }
    raw.require_both_classes();
    clock.lap("load");

    // Imputation
    DataTable table = raw;
    std::vector<SourcePrep> prep;
    for (const auto& v : raw.schema().predictor_names()) {
      const auto& spec = raw.spec(v);
      SourcePrep p{v, spec.kind, std::nullopt, {}};
      if (spec.kind == ColumnKind::kContinuous || spec.kind == ColumnKind::kLikelihood) {
        p.impute_value = column_median(raw, v);
        const auto x = raw.values(v);
        if (std::any_of(x.begin(), x.end(), is_missing)) table = impute_median(table, v);
      }
      prep.push_back(std::move(p));
    }
    clock.lap("impute");

    // Screening
    r.plan = config.resolve_plan(raw.schema().predictor_names().size());
    r.screening = run_screening(table, r.plan);
    for (const auto& m : r.screening.level_mappings) {
      table = apply_level_mapping(table, m);
      auto it = std::find_if(prep.begin(), prep.end(), [&](const auto& p) { return p.variable == m.variable; });
      for (std::size_t l = 0; l < m.original_levels.size(); ++l)
        it->level_map.emplace_back(m.original_levels[l],
                                   m.merged_levels[static_cast<std::size_t>(m.merged_id[l])]);
    }
    json screening = to_json(r.screening);
    screening["plan"] = {{"retain_after_chi2", r.plan.retain_after_chi2},
                         {"retain_after_t", r.plan.retain_after_t},
                         {"retain_after_iv", r.plan.retain_after_iv},
                         {"final_retain", r.plan.final_retain}};
    json medians = json::object();
    for (const auto& p : prep)
      if (p.impute_value) medians[p.variable] = *p.impute_value;
    screening["imputation_medians"] = std::move(medians);
    emit_json(screening, "screening_report.json");
    emit_json(to_json(r.screening.clusters), "cluster_report.json");
    if (write) {
      fs::create_directories(out / "proportion");
      for (const auto& v : r.screening.final_variables()) {
        if (raw.spec(v).kind == ColumnKind::kContinuous) continue;
        const auto name = fs::path("proportion") / (v + ".csv");
        write_proportion_curve(proportion_curve(raw, v, raw.schema().target), out / name);
        r.artifacts.push_back(name);
      }
    }
    clock.lap("screening");

    // Split and model
    const auto split = split_train_validation(table, config.train_fraction, config.split_seed);
    r.train_records = split.train_rows.size();
    r.validation_records = split.validation_rows.size();
    const auto& vars = r.screening.final_variables();
    const auto& target = table.schema().target;
    const auto train = encode_design(split.train, vars, target);
    const auto validation = encode_design(split.validation, vars, target, train.terms);
    r.stepwise = stepwise_select(train, config.stepwise);
    clock.lap("stepwise");
    if (r.stepwise.model.terms.empty()) throw Error("stepwise selection admitted no predictors");
    r.prune = prune_collinear(r.stepwise.model, train, validation, config.prune_cutoff, config.stepwise.fit);
    r.model = r.prune.model;
    r.model.target = target;
    for (const auto& p : prep)
      if (std::any_of(r.model.terms.begin(), r.model.terms.end(), [&](const Term& t) { return t.source == p.variable; }))
        r.model.preprocessing.push_back(p);
    for (const auto& w : train.warnings) r.model.warnings.push_back("design: " + w);
    r.global_null = global_null_lr(r.model, train);
    emit_json(model_report(r, raw.schema()), "model.json");
    clock.lap("prune");

    // Evaluation on the raw rows of each set
    r.evaluations.push_back(evaluate("train", score(r.model, raw.select_rows(split.train_rows)), config.threshold));
    r.evaluations.push_back(
        evaluate("validation", score(r.model, raw.select_rows(split.validation_rows)), config.threshold));
    if (raw_oos) r.evaluations.push_back(evaluate("out_of_sample", score(r.model, *raw_oos), config.threshold));
    json deciles = json::object(), confusion = json::object();
    for (const auto& e : r.evaluations) {
      deciles[e.name] = to_json(e.deciles);
      confusion[e.name] = to_json(e.confusion, e.metrics, config.threshold);
      if (write) {
        export_chart_data(e.deciles, out / ("chart_" + e.name + ".csv"));
        r.artifacts.emplace_back("chart_" + e.name + ".csv");
        write_scores(e.scores, out / ("scores_" + e.name + ".csv"));
        r.artifacts.emplace_back("scores_" + e.name + ".csv");
      }
    }
    emit_json(deciles, "decile_table.json");
    emit_json(confusion, "confusion_report.json");
    if (r.truth) emit_json(to_json(*r.truth), "ground_truth.json");
    clock.lap("evaluation");
  } catch (const std::exception& e) {
    if (write) manifest("failed", e.what());
    throw;
  }
  if (write) manifest("ok", "");
  return r;
}

std::vector<fs::path> run_synth(const PipelineConfig& config) {
  if (!config.synthetic) throw ConfigError("config: 'synthetic' section required for synth");
  if (config.output_dir.empty()) throw ConfigError("output_dir: required for synth");
  return write_synthetic(generate(*config.synthetic), config.output_dir);
}

void run_score(const fs::path& model_path, const fs::path& data_csv, const std::optional<fs::path>& schema_path,
               const fs::path& out) {
  const json mj = read_json(model_path);
  const auto model = model_from_json(mj);
  Schema full;
  if (schema_path)
    full = load_schema(*schema_path);
  else if (mj.contains("schema"))
    full = schema_from_json(mj.at("schema"));
  else
    throw ConfigError("model file has no embedded schema; pass --schema");
  const auto header = csv_header(data_csv);
  for (const auto& t : model.terms)
    if (std::find(header.begin(), header.end(), t.source) == header.end())
      throw ConfigError("missing required column '" + t.source + "'");
  const auto schema = scoring_schema(full, model, header);
  const auto table = load_table(data_csv, schema, HeaderMode::kSubset);
  const auto scores = score(model, table);
  if (!out.parent_path().empty()) fs::create_directories(out.parent_path());
  write_scores(scores, out);
}

}  // namespace scorecard
