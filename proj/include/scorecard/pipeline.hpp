#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "scorecard/evaluation.hpp"
#include "scorecard/logit.hpp"
#include "scorecard/screening.hpp"
#include "scorecard/synthgen.hpp"

namespace scorecard {

inline constexpr const char* kVersion = "1.0.0";

struct InputPaths {
  std::filesystem::path csv;
  std::filesystem::path schema;
  std::optional<std::filesystem::path> out_of_sample_csv;
};

// Stage counts left unset are scaled from the predictor count with the
// ratios 0.5, 0.3, 0.15 and 0.05 (1000 -> 500 -> 300 -> 150 -> 50).
struct StageCounts {
  std::optional<std::size_t> retain_after_chi2;
  std::optional<std::size_t> retain_after_t;
  std::optional<std::size_t> retain_after_iv;
  std::optional<std::size_t> final_retain;
};

struct PipelineConfig {
  std::optional<InputPaths> input;
  std::optional<SyntheticSpec> synthetic;
  // Synthetic runs only: size of the independent out-of-sample draw (0: none).
  std::size_t out_of_sample_records = 4000;

  StagePlan plan;
  StageCounts counts;
  double train_fraction = 0.6;
  std::uint64_t split_seed = 1;
  StepwiseOptions stepwise;
  double prune_cutoff = 0.40;
  double threshold = 0.5;
  std::filesystem::path output_dir;  // empty: nothing is written
  std::uint64_t seed = 1;

  // Throws ConfigError naming the offending field.
  void validate() const;
  // Sets the top-level, split and synthetic seeds.
  void override_seed(std::uint64_t s);
  StagePlan resolve_plan(std::size_t n_predictors) const;
};

// Relative paths in `input` resolve against `base_dir`.
PipelineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const PipelineConfig& config);

struct EvaluationSet {
  std::string name;  // train, validation, out_of_sample
  ScoreSet scores;
  std::vector<DecileRow> deciles;
  ConfusionMatrix confusion;
  Metrics metrics;
};

struct PipelineResult {
  StagePlan plan;
  ScreeningReport screening;
  StepwiseResult stepwise;
  PruneResult prune;
  LogisticModel model;
  LikelihoodRatioTest global_null;
  std::size_t train_records = 0;
  std::size_t validation_records = 0;
  std::vector<EvaluationSet> evaluations;
  std::optional<GroundTruth> truth;
  std::vector<std::filesystem::path> artifacts;  // relative to the output directory

  const EvaluationSet* evaluation(std::string_view name) const;
};

// impute -> screen -> merge levels -> split -> encode -> stepwise -> prune ->
// evaluate. Reports go to config.output_dir when set; on failure a manifest
// with status "failed" and the artifacts written so far is left behind.
PipelineResult run_pipeline(const PipelineConfig& config);

// Writes data.csv, schema.json and ground_truth.json.
std::vector<std::filesystem::path> run_synth(const PipelineConfig& config);

// Scores a CSV with a saved model. The schema defaults to the one embedded in
// the model file; only the model's source columns (plus id and target when
// present in the header) are read.
void run_score(const std::filesystem::path& model_path, const std::filesystem::path& data_csv,
               const std::optional<std::filesystem::path>& schema_path, const std::filesystem::path& out);

}  // namespace scorecard
