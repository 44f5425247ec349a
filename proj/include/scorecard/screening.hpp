#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "scorecard/table.hpp"
#include "scorecard/varclus.hpp"

namespace scorecard {

struct ChiSquareResult {
  std::string variable;
  double statistic = 0.0;
  int df = 1;
  double p_value = 1.0;
};

// Pearson chi-square of a 2x2 table of counts, df = 1, no continuity
// correction. Throws Error when a row or column margin is zero.
ChiSquareResult chi_square_2x2(const std::array<std::array<double, 2>, 2>& counts);

// Binary variable against the binary target; missing rows are dropped.
ChiSquareResult chi_square_binary(const DataTable& table, std::string_view variable, std::string_view target);

struct TTestResult {
  std::string variable;
  double t_statistic = 0.0;  // positive when mean(target = 1) is larger
  int df = 0;
  double abs_rank_key = 0.0;
};

// Pooled-variance two-sample t of a continuous or likelihood variable across
// the target groups.
TTestResult t_test_multivalued(const DataTable& table, std::string_view variable, std::string_view target);

// Number of equal-width bins used for likelihood-level variables in IV and
// proportion curves.
inline constexpr int kLikelihoodBins = 7;
int likelihood_bin(double level);

struct IvLevel {
  std::string level;
  std::size_t n_signal = 0;
  std::size_t n_background = 0;
  double signal_share = 0.0;
  double background_share = 0.0;
  double woe = 0.0;
  double iv_contribution = 0.0;
};

struct IvResult {
  std::string variable;
  std::vector<IvLevel> levels;
  double total_iv = 0.0;
};

inline constexpr double kDefaultIvSmoothing = 0.5;

// Weight of evidence and information value over the observed levels of a
// categorical, binary or (binned) likelihood variable:
//   share_c(l) = (n_c(l) + s) / (n_c + s * L)
//   woe(l)     = ln(share_1(l) / share_0(l))
//   iv         = sum_l (share_1(l) - share_0(l)) * woe(l)
IvResult woe_iv(const DataTable& table, std::string_view variable, std::string_view target,
                double smoothing = kDefaultIvSmoothing);

// Binary variables whose share of 1s among non-missing cells is >= min_frac.
std::vector<std::string> occupancy_filter(const DataTable& table, std::span<const std::string> variables,
                                          double min_frac);

struct LevelMapping {
  std::string variable;
  std::vector<std::string> original_levels;  // declared order
  std::vector<int> merged_id;                // per original level
  std::vector<std::string> merged_levels;    // names of merged levels, by id

  std::size_t merged_count() const { return merged_levels.size(); }
  bool is_identity() const { return merged_count() == original_levels.size(); }
};

// Greedy agglomeration of categorical levels. Candidate pairs are ordered by
// how close their target rates are; the first pair whose 2x2 chi-square
// against the target has p > alpha is merged, and the search repeats until
// no pair qualifies. alpha = 0 disables merging. Unobserved levels are left
// alone. Merged ids are numbered by each group's first declared level.
LevelMapping merge_levels(const DataTable& table, std::string_view variable, std::string_view target,
                          double alpha = 0.05);

// Rewrites the categorical column with merged levels.
DataTable apply_level_mapping(const DataTable& table, const LevelMapping& mapping);

struct ProportionPoint {
  std::string level;
  std::size_t count_signal = 0;
  std::size_t count_background = 0;
  // 100 * share among signal / share among background; nullopt when the
  // level never occurs among background records.
  std::optional<double> proportion;
};

std::vector<ProportionPoint> proportion_curve(const DataTable& table, std::string_view variable,
                                              std::string_view target);

// Delimited text: level,count_signal,count_background,proportion (empty
// proportion and defined=0 for undefined points).
void write_proportion_curve(std::span<const ProportionPoint> curve, const std::filesystem::path& path);

// Counts are the total number of predictors retained after each stage.
struct StagePlan {
  std::size_t retain_after_chi2 = 500;
  std::size_t retain_after_t = 300;
  std::size_t retain_after_iv = 150;
  double iv_min = 0.03;
  double iv_max = 0.5;
  double iv_smoothing = kDefaultIvSmoothing;
  std::size_t final_retain = 50;
  double occupancy_min = 0.10;
  double level_merge_alpha = 0.05;
  double cluster_split_threshold = 1.0;

  // Throws ConfigError unless counts strictly decrease and 0 < iv_min < iv_max.
  void validate() const;
};

struct StageRecord {
  std::string name;
  std::size_t requested = 0;
  std::vector<std::string> retained;
};

struct ScreeningReport {
  std::vector<std::string> input;
  std::vector<StageRecord> stages;
  std::vector<ChiSquareResult> chi_square;
  std::vector<TTestResult> t_tests;
  std::vector<IvResult> information_values;
  ClusterSelection clusters;
  std::vector<std::string> occupancy_dropped;
  std::vector<LevelMapping> level_mappings;
  // Variables whose statistic could not be computed, with the reason.
  std::vector<std::pair<std::string, std::string>> notes;

  const std::vector<std::string>& final_variables() const { return stages.back().retained; }
};

// The four-stage reduction cascade:
//   1. chi-square on binary variables: drop the lowest-statistic binaries
//      until at most retain_after_chi2 predictors remain;
//   2. t-test on continuous/likelihood variables, ranked by |t|, down to
//      retain_after_t;
//   3. categorical variables with IV outside [iv_min, iv_max] are dropped,
//      then the lowest-IV ones until at most retain_after_iv remain;
//   4. numeric variables are clustered (at most final_retain minus the
//      categorical count clusters) and one representative per cluster is
//      kept, categoricals pass through; then binaries below occupancy_min
//      are dropped and categorical levels are merged.
// Each stage's count must not exceed the number of predictors entering it.
ScreeningReport run_screening(const DataTable& table, const StagePlan& plan);

nlohmann::json to_json(const ScreeningReport& report);

}  // namespace scorecard
