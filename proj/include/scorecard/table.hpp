#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace scorecard {

enum class ColumnKind {
  kBinary,
  kCategorical,
  kLikelihood,  // integer level 1..99, 1 = most likely
  kContinuous,
};

std::string_view to_string(ColumnKind kind);
ColumnKind parse_column_kind(std::string_view text);

inline constexpr int kLikelihoodMin = 1;
inline constexpr int kLikelihoodMax = 99;

// Missing cells are stored as quiet NaN in every column kind.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) { return std::isnan(v); }

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::kContinuous;
  // Declared levels, categorical only. Cells store the level index.
  std::vector<std::string> levels;

  bool operator==(const ColumnSpec&) const = default;
};

struct Schema {
  // Columns in file order. The target is one of them.
  std::vector<ColumnSpec> columns;
  // Name of the binary target column. May be empty for scoring inputs.
  std::string target;
  // Optional integer record id column; when set it is the first CSV column
  // and is not listed in `columns`.
  std::string id_column;

  bool operator==(const Schema&) const = default;

  // Throws ConfigError on duplicate names, categorical columns with fewer
  // than two levels, or a target that is missing or not binary.
  void validate() const;
  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;
  const ColumnSpec& spec(std::string_view name) const;
  // Every column except the target, in schema order.
  std::vector<std::string> predictor_names() const;
};

nlohmann::json schema_to_json(const Schema& schema);
Schema schema_from_json(const nlohmann::json& j);
Schema load_schema(const std::filesystem::path& path);
void save_schema(const Schema& schema, const std::filesystem::path& path);

// Columnar table. Immutable once built: every transformation returns a new
// table.
class DataTable {
 public:
  DataTable() = default;
  // Validates sizes and per-kind value domains; throws ConfigError.
  DataTable(Schema schema, std::vector<std::uint64_t> ids, std::vector<std::vector<double>> columns);

  const Schema& schema() const { return schema_; }
  std::size_t n_rows() const { return ids_.size(); }
  std::size_t n_columns() const { return columns_.size(); }

  bool has_column(std::string_view name) const { return schema_.find(name).has_value(); }
  const ColumnSpec& spec(std::string_view name) const { return schema_.spec(name); }
  std::span<const double> values(std::string_view name) const;
  std::span<const double> values(std::size_t column) const { return columns_.at(column); }
  std::span<const double> target() const;
  std::span<const std::uint64_t> ids() const { return ids_; }

  // Number of target rows equal to `label` (0 or 1).
  std::size_t count_target(int label) const;
  // Throws Error unless both target classes are present.
  void require_both_classes() const;

  DataTable select_rows(std::span<const std::size_t> rows) const;
  // Replaces one column's values (and optionally its spec).
  DataTable with_column(std::string_view name, std::vector<double> values,
                        std::optional<ColumnSpec> spec = std::nullopt) const;

  // Bitwise equality of schema, ids and cells; missing equals missing.
  bool identical(const DataTable& other) const;

 private:
  void validate() const;

  Schema schema_;
  std::vector<std::uint64_t> ids_;
  std::vector<std::vector<double>> columns_;
};

enum class HeaderMode {
  kExact,   // header equals the schema column names, same order
  kSubset,  // header contains every schema column, any order, extras ignored
};

// Reads a comma-delimited UTF-8 CSV with a header row. Empty cells and the
// token "NA" are missing. Without an id column, ids are the 0-based data
// row numbers. Throws ConfigError naming row, column and token on bad cells.
DataTable load_table(const std::filesystem::path& csv_path, const Schema& schema,
                     HeaderMode mode = HeaderMode::kExact);

// Writes the table back in schema order; missing cells are written empty.
void write_csv(const DataTable& table, const std::filesystem::path& csv_path);

// Median of non-missing values. Even counts average the two central values.
// Likelihood-level columns round half up to an integer level.
double column_median(const DataTable& table, std::string_view column);

DataTable impute_median(const DataTable& table, std::string_view column);

struct SplitResult {
  DataTable train;
  DataTable validation;
  std::uint64_t seed = 0;
  // Row positions in the input table, ascending.
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> validation_rows;
};

// Stratified by target: each class contributes floor or ceil of frac times
// its size, and the totals add up to round(frac * n).
SplitResult split_train_validation(const DataTable& table, double frac, std::uint64_t seed);

// Simple random sample without replacement from each pool, signal rows
// first. Output ids are renumbered 0..n-1 because the pools' ids may overlap.
DataTable stratified_sample(const DataTable& signal_pool, const DataTable& background_pool,
                            std::size_t n_signal, std::size_t n_background, std::uint64_t seed);

}  // namespace scorecard
