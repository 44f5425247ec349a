#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "scorecard/table.hpp"

namespace scorecard {

enum class Encoding {
  kStandardized,  // (x - mean) / std with training statistics
  kFlag,          // binary column used as 0/1
  kDummy,         // indicator of one categorical level against a reference
};

std::string_view to_string(Encoding e);
Encoding parse_encoding(std::string_view s);

struct Term {
  std::string name;    // design column name; "<source>=<level>" for dummies
  std::string source;  // table column it is computed from
  Encoding encoding = Encoding::kStandardized;
  double mean = 0.0;   // standardized only
  double std = 1.0;    // standardized only, > 0
  std::string level;      // dummy only
  std::string reference;  // dummy only
};

// How a raw source column is prepared before encoding: missing numeric
// cells take `impute_value`; categorical levels are renamed through
// `level_map` (raw level -> merged level).
struct SourcePrep {
  std::string variable;
  ColumnKind kind = ColumnKind::kContinuous;
  std::optional<double> impute_value;
  std::vector<std::pair<std::string, std::string>> level_map;
};

struct DesignMatrix {
  std::vector<Term> terms;
  Eigen::MatrixXd x;  // n x (terms + 1), column 0 is the intercept
  Eigen::VectorXd y;  // empty when the table has no target
  std::vector<std::uint64_t> ids;
  std::vector<std::string> warnings;

  std::size_t n() const { return static_cast<std::size_t>(x.rows()); }
  std::optional<std::size_t> find_term(std::string_view name) const;
  // Intercept plus the listed terms, in the given order.
  DesignMatrix select(std::span<const std::size_t> term_indices) const;
};

// Builds the design from screened, imputed variables.
// Training mode (train_terms empty): continuous and likelihood columns are
// z-scored, binaries kept as flags, categoricals expanded into dummies
// against the most frequent level; zero-variance columns are dropped with a
// warning. Scoring mode reuses `train_terms` as is; unseen categorical levels
// encode as the reference with a warning. Missing cells are an error.
DesignMatrix encode_design(const DataTable& table, std::span<const std::string> variables,
                           std::string_view target, std::span<const Term> train_terms = {});

struct LikelihoodEval {
  double log_likelihood = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

inline constexpr double kProbabilityClamp = 1e-12;

// logL = sum y ln p + (1 - y) ln(1 - p), gradient X'(y - p),
// hessian -X'WX with W = diag(p(1 - p)).
LikelihoodEval log_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                              bool with_hessian = true);
inline LikelihoodEval log_likelihood(const DesignMatrix& d, const Eigen::VectorXd& beta) {
  return log_likelihood(d.x, d.y, beta);
}

// -2 logL + k ln n
double sbc(double log_likelihood, std::size_t k_params, std::size_t n);

struct FitOptions {
  double tol = 1e-8;  // on max |delta beta|
  int max_iter = 50;
  double ridge = 1e-8;
  double separation_threshold = 30.0;
};

struct LogisticModel {
  std::vector<Term> terms;  // excluding the intercept
  Eigen::VectorXd beta;     // intercept first
  Eigen::VectorXd se;
  std::vector<double> wald;
  std::vector<double> p_values;
  std::vector<double> exp_est;
  std::vector<std::optional<double>> standardized_estimate;
  double log_likelihood = 0.0;
  double sbc = 0.0;
  std::size_t n = 0;
  bool converged = false;
  int iterations = 0;
  std::vector<double> deviance_trace;  // -2 logL after each iteration
  std::vector<std::string> warnings;
  // Filled by the pipeline so a saved model can score raw input files.
  std::string target;
  std::vector<SourcePrep> preprocessing;

  std::size_t k() const { return terms.size(); }
  std::string term_name(std::size_t j) const { return j == 0 ? "Intercept" : terms[j - 1].name; }
};

// Newton / IRLS with step halving. Standard errors come from the inverse of
// the ridge-stabilised information matrix at the optimum. Throws Error when
// the system is singular even with the ridge.
LogisticModel fit_irls(const DesignMatrix& design, const FitOptions& opts = {},
                       const Eigen::VectorXd* start = nullptr);

// Fills wald = (beta / se)^2, chi-square(1) p-values, exp(beta), and the
// standardized estimate beta * sqrt(3) / pi for z-scored terms (flags,
// dummies and the intercept have none).
void wald_and_derived(LogisticModel& model);

struct StepwiseOptions {
  double p_enter = 0.01;
  double p_stay = 0.01;
  std::optional<std::size_t> max_terms;
  FitOptions fit;
};

struct StepwiseStep {
  enum class Action { kEnter, kRemove };
  Action action;
  std::string term;
  double p_value = 0.0;
  double sbc_after = 0.0;
};

struct StepwiseResult {
  LogisticModel model;
  std::vector<StepwiseStep> trace;
  // Terms of `model` as indices into the input design.
  std::vector<std::size_t> selected;
};

// Forward entry of the candidate with the smallest likelihood-ratio p-value
// (ties: lower SBC, then name) when p < p_enter and SBC decreases, followed
// by backward removal of in-model terms with Wald p > p_stay. Stops when
// nothing changes or after 2x the candidate count of actions. The final
// model keeps design column order.
StepwiseResult stepwise_select(const DesignMatrix& design, const StepwiseOptions& opts = {});

struct PruneStep {
  std::string kept;
  std::string dropped;
  double correlation = 0.0;
  double cum_captured_top = 0.0;  // first decile, validation, model without `dropped`
};

struct PruneResult {
  LogisticModel model;
  std::vector<PruneStep> steps;
};

// While some pair of in-model columns has |r| > cutoff on the training
// design, refits without each member of the worst pair and keeps the refit
// with the higher validation first-decile cumulative captured response
// (ties: higher first-decile lift, then higher Wald of the surviving term).
PruneResult prune_collinear(const LogisticModel& model, const DesignMatrix& train, const DesignMatrix& validation,
                            double cutoff = 0.40, const FitOptions& opts = {});

struct LikelihoodRatioTest {
  double statistic = 0.0;
  std::size_t df = 0;
  double p_value = 1.0;
};

// 2 (logL_model - logL_intercept_only) against chi-square(#terms).
LikelihoodRatioTest global_null_lr(const LogisticModel& model, const DesignMatrix& design);

// Linear predictor and probabilities for a design encoded with the model's
// terms (columns must match).
Eigen::VectorXd predict_probability(const LogisticModel& model, const DesignMatrix& design);

// Per-term coefficient table plus fit metadata and encoding statistics.
nlohmann::json to_json(const LogisticModel& model);
LogisticModel model_from_json(const nlohmann::json& j);

}  // namespace scorecard
