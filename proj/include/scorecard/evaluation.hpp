#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "scorecard/logit.hpp"
#include "scorecard/table.hpp"

namespace scorecard {

struct ScoredRecord {
  std::uint64_t id = 0;
  double p = 0.0;
  int y = -1;  // -1 when the outcome is unknown
};

struct ScoreSet {
  std::vector<ScoredRecord> records;

  std::size_t size() const { return records.size(); }
  // Throws Error on probabilities outside [0, 1] or duplicate ids.
  void validate() const;
};

ScoreSet make_score_set(std::span<const std::uint64_t> ids, std::span<const double> p, std::span<const double> y);

// Applies the model's stored preprocessing (median imputation, level merges)
// and encoding statistics to `table`, then evaluates the logistic function.
// Throws ConfigError naming the first model source column the table lacks.
ScoreSet score(const LogisticModel& model, const DataTable& table);

struct DecileRow {
  int decile = 0;
  std::size_t n = 0;
  std::size_t responders = 0;
  double response_rate = 0.0;
  double lift = 0.0;  // response_rate / overall rate
  double captured = 0.0;
  double cum_captured = 0.0;
};

// Decile (1..10) of every record, aligned with scores.records. Records are
// ordered by probability descending, then id ascending; the first n % 10
// deciles hold one extra record.
std::vector<int> assign_deciles(const ScoreSet& scores);

// Needs n >= 10 and at least one responder.
std::vector<DecileRow> decile_table(const ScoreSet& scores);

struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t total() const { return tp + fp + tn + fn; }
};

// Predicts 1 when p >= threshold.
ConfusionMatrix confusion_matrix(const ScoreSet& scores, double threshold = 0.5);

// Each metric is nullopt when its denominator is zero.
struct Metrics {
  std::optional<double> accuracy;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
};

Metrics metrics(const ConfusionMatrix& cm);

// Columns: decile,n,responders,response_rate,lift,captured,cum_captured,baseline
// where baseline = decile / 10 is the random-model gain line.
void export_chart_data(std::span<const DecileRow> deciles, const std::filesystem::path& out);

nlohmann::json to_json(std::span<const DecileRow> deciles);
nlohmann::json to_json(const ConfusionMatrix& cm, const Metrics& m, double threshold);

// Writes id,probability,decile (and actual when known).
void write_scores(const ScoreSet& scores, const std::filesystem::path& out);

}  // namespace scorecard
