#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "scorecard/evaluation.hpp"
#include "scorecard/table.hpp"

namespace scorecard {

struct KindMix {
  double binary = 0.40;
  double categorical = 0.10;
  double likelihood = 0.25;
  double continuous = 0.25;
};

struct SyntheticSpec {
  std::size_t n_signal = 3000;
  std::size_t n_background = 5000;
  std::size_t n_informative = 16;
  std::size_t n_noise = 184;
  KindMix kind_mix;
  // Planted coefficients have magnitude in [beta_min, beta_max] and a random
  // sign; they act on population-standardized predictors.
  double beta_min = 0.3;
  double beta_max = 1.5;
  double missing_rate = 0.0;
  std::uint64_t seed = 1;
  // Noise continuous columns built as r * driver + sqrt(1 - r^2) * noise,
  // one per planted continuous driver.
  std::size_t correlated_pairs = 0;
  double pair_correlation = 0.9;

  std::size_t n_records() const { return n_signal + n_background; }
  std::size_t n_predictors() const { return n_informative + n_noise; }
  // Throws ConfigError naming the offending field.
  void validate() const;
};

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SyntheticSpec& spec);

struct PlantedVariable {
  std::string name;
  ColumnKind kind = ColumnKind::kContinuous;
  double beta = 0.0;
  // Population standardization: z = (x - mean) / std for numeric kinds,
  // z = (effect[level] - mean) / std for categoricals.
  double mean = 0.0;
  double std = 1.0;
  std::vector<double> level_effects;
};

struct CorrelatedPair {
  std::string driver;
  std::string partner;
  double r = 0.0;
};

struct GroundTruth {
  std::vector<PlantedVariable> planted;
  double intercept = 0.0;
  double target_prevalence = 0.0;
  double realized_prevalence = 0.0;
  std::vector<CorrelatedPair> pairs;

  bool is_planted(std::string_view name) const;
};

nlohmann::json to_json(const GroundTruth& truth);

struct Synthetic {
  DataTable table;
  GroundTruth truth;
};

// Columns: id, y, v001..vNNN. The intercept is bisected so the realized
// prevalence matches n_signal / n_records; throws Error when no intercept in
// [-30, 30] gets within one percentage point.
Synthetic generate(const SyntheticSpec& spec);

// A fresh sample of `n_records` from the same planted model (same columns,
// level sets and coefficients, same intercept), drawn from stream `stream` >= 1.
DataTable generate_sample(const SyntheticSpec& spec, const GroundTruth& truth, std::size_t n_records,
                          std::uint64_t stream);

// Scores records with the planted model directly. Missing cells contribute
// z = 0. Throws Error when a planted column is absent or of another kind.
ScoreSet oracle_metrics(const GroundTruth& truth, const DataTable& table);

// Writes data.csv, schema.json and ground_truth.json into `dir`.
std::vector<std::filesystem::path> write_synthetic(const Synthetic& s, const std::filesystem::path& dir);

}  // namespace scorecard
