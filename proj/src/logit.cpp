#include "scorecard/logit.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <tuple>

#include "scorecard/error.hpp"
#include "scorecard/evaluation.hpp"
#include "scorecard/stats.hpp"

namespace scorecard {

namespace {

// Standardized estimate scale for a unit-variance column: sqrt(3) / pi is the
// standard deviation of the standard logistic distribution.
const double kStdEstimateScale = std::sqrt(3.0) / std::numbers::pi;

std::string level_name(const ColumnSpec& spec, double v) { return spec.levels.at(static_cast<std::size_t>(v)); }

void require_complete(const DataTable& table, const std::string& v) {
  for (double x : table.values(v))
    if (is_missing(x)) throw Error("design: column '" + v + "' has missing values; impute before encoding");
}

}  // namespace

std::string_view to_string(Encoding e) {
  switch (e) {
    case Encoding::kStandardized:
      return "standardized";
    case Encoding::kFlag:
      return "flag";
    case Encoding::kDummy:
      return "dummy";
  }
  return "?";
}

Encoding parse_encoding(std::string_view s) {
  if (s == "standardized") return Encoding::kStandardized;
  if (s == "flag") return Encoding::kFlag;
  if (s == "dummy") return Encoding::kDummy;
  throw ConfigError("unknown term encoding '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Design

std::optional<std::size_t> DesignMatrix::find_term(std::string_view name) const {
  for (std::size_t j = 0; j < terms.size(); ++j)
    if (terms[j].name == name) return j;
  return std::nullopt;
}

DesignMatrix DesignMatrix::select(std::span<const std::size_t> term_indices) const {
  DesignMatrix out;
  out.y = y;
  out.ids = ids;
  out.x.resize(x.rows(), static_cast<Eigen::Index>(term_indices.size() + 1));
  out.x.col(0) = x.col(0);
  for (std::size_t k = 0; k < term_indices.size(); ++k) {
    out.terms.push_back(terms.at(term_indices[k]));
    out.x.col(static_cast<Eigen::Index>(k + 1)) = x.col(static_cast<Eigen::Index>(term_indices[k] + 1));
  }
  return out;
}

DesignMatrix encode_design(const DataTable& table, std::span<const std::string> variables, std::string_view target,
                           std::span<const Term> train_terms) {
  DesignMatrix d;
  const std::size_t n = table.n_rows();
  d.ids.assign(table.ids().begin(), table.ids().end());
  if (!target.empty() && table.has_column(target)) {
    const auto y = table.values(target);
    d.y = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  }
  std::vector<Eigen::VectorXd> cols;

  if (train_terms.empty()) {
    for (const auto& v : variables) {
      const auto& spec = table.spec(v);
      require_complete(table, v);
      const auto x = table.values(v);
      Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(n));
      switch (spec.kind) {
        case ColumnKind::kContinuous:
        case ColumnKind::kLikelihood: {
          const double mean = xv.mean();
          const double var = n > 1 ? (xv.array() - mean).square().sum() / static_cast<double>(n - 1) : 0.0;
          if (!(var > 0.0)) {
            d.warnings.push_back("dropped zero-variance column '" + v + "'");
            break;
          }
          Term t{v, v, Encoding::kStandardized, mean, std::sqrt(var), "", ""};
          cols.push_back((xv.array() - t.mean) / t.std);
          d.terms.push_back(std::move(t));
          break;
        }
        case ColumnKind::kBinary: {
          if (xv.minCoeff() == xv.maxCoeff()) {
            d.warnings.push_back("dropped zero-variance column '" + v + "'");
            break;
          }
          cols.push_back(xv);
          d.terms.push_back({v, v, Encoding::kFlag, 0.0, 1.0, "", ""});
          break;
        }
        case ColumnKind::kCategorical: {
          std::vector<std::size_t> counts(spec.levels.size(), 0);
          for (double c : x) ++counts[static_cast<std::size_t>(c)];
          // Most frequent level is the reference; ties go to the first declared.
          const auto ref = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
          std::size_t observed = 0;
          for (auto c : counts) observed += c > 0;
          if (observed < 2) {
            d.warnings.push_back("dropped zero-variance column '" + v + "'");
            break;
          }
          for (std::size_t l = 0; l < spec.levels.size(); ++l) {
            if (l == ref || counts[l] == 0) continue;
            Eigen::VectorXd col(static_cast<Eigen::Index>(n));
            for (std::size_t i = 0; i < n; ++i) col(static_cast<Eigen::Index>(i)) = x[i] == static_cast<double>(l);
            cols.push_back(std::move(col));
            d.terms.push_back({v + "=" + spec.levels[l], v, Encoding::kDummy, 0.0, 1.0, spec.levels[l],
                               spec.levels[ref]});
          }
          break;
        }
      }
    }
  } else {
    std::map<std::string, std::size_t> unseen;
    for (const auto& t : train_terms) {
      const auto& spec = table.spec(t.source);
      require_complete(table, t.source);
      const auto x = table.values(t.source);
      Eigen::VectorXd col(static_cast<Eigen::Index>(n));
      switch (t.encoding) {
        case Encoding::kStandardized:
          for (std::size_t i = 0; i < n; ++i) col(static_cast<Eigen::Index>(i)) = (x[i] - t.mean) / t.std;
          break;
        case Encoding::kFlag:
          for (std::size_t i = 0; i < n; ++i) col(static_cast<Eigen::Index>(i)) = x[i];
          break;
        case Encoding::kDummy: {
          if (spec.kind != ColumnKind::kCategorical)
            throw ConfigError("design: column '" + t.source + "' must be categorical");
          for (std::size_t i = 0; i < n; ++i) col(static_cast<Eigen::Index>(i)) = level_name(spec, x[i]) == t.level;
          break;
        }
      }
      cols.push_back(std::move(col));
      d.terms.push_back(t);
    }
    // Unseen levels: a categorical cell matching neither a dummy nor the
    // reference falls back to the reference (all dummies zero).
    std::map<std::string, std::vector<std::string>> known;
    for (const auto& t : train_terms)
      if (t.encoding == Encoding::kDummy) {
        known[t.source].push_back(t.level);
        known[t.source].push_back(t.reference);
      }
    for (const auto& [source, levels] : known) {
      const auto& spec = table.spec(source);
      for (double c : table.values(source)) {
        const auto& name = level_name(spec, c);
        if (std::find(levels.begin(), levels.end(), name) == levels.end()) ++unseen[source + "=" + name];
      }
    }
    for (const auto& [lv, count] : unseen)
      d.warnings.push_back("unseen level '" + lv + "' (" + std::to_string(count) + " rows) encoded as reference");
  }

  d.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols.size() + 1));
  d.x.col(0).setOnes();
  for (std::size_t j = 0; j < cols.size(); ++j) d.x.col(static_cast<Eigen::Index>(j + 1)) = cols[j];
  return d;
}

// ---------------------------------------------------------------------------
// Likelihood and fitting

LikelihoodEval log_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                              bool with_hessian) {
  if (beta.size() != x.cols()) throw Error("log_likelihood: beta length does not match design columns");
  const Eigen::VectorXd eta = x * beta;
  Eigen::VectorXd p(eta.size());
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    p(i) = stats::logistic(eta(i));
    const double pc = std::clamp(p(i), kProbabilityClamp, 1.0 - kProbabilityClamp);
    ll += y(i) * std::log(pc) + (1.0 - y(i)) * std::log(1.0 - pc);
  }
  LikelihoodEval out;
  out.log_likelihood = ll;
  out.gradient = x.transpose() * (y - p);
  if (with_hessian) {
    const Eigen::ArrayXd w = (p.array() * (1.0 - p.array())).sqrt();
    const Eigen::MatrixXd xw = x.array().colwise() * w;
    out.hessian = Eigen::MatrixXd::Zero(x.cols(), x.cols());
    out.hessian.selfadjointView<Eigen::Lower>().rankUpdate(xw.transpose(), -1.0);
    out.hessian = out.hessian.selfadjointView<Eigen::Lower>();
  }
  return out;
}

double sbc(double log_likelihood, std::size_t k_params, std::size_t n) {
  if (n < 1) throw Error("sbc: n must be >= 1");
  return -2.0 * log_likelihood + static_cast<double>(k_params) * std::log(static_cast<double>(n));
}

LogisticModel fit_irls(const DesignMatrix& design, const FitOptions& opts, const Eigen::VectorXd* start) {
  const auto& x = design.x;
  const auto& y = design.y;
  const auto n = static_cast<std::size_t>(x.rows());
  const auto k = x.cols();
  if (y.size() != x.rows()) throw Error("fit: design has no response vector");
  if (n <= static_cast<std::size_t>(k)) throw Error("fit: need more records than design columns");
  const double ones = y.sum();
  if (ones <= 0.0 || ones >= static_cast<double>(n)) throw Error("fit: response has a single class");

  Eigen::VectorXd beta = start ? *start : Eigen::VectorXd::Zero(k);
  LogisticModel m;
  m.terms = design.terms;
  m.n = n;
  auto eval = log_likelihood(x, y, beta);
  const Eigen::MatrixXd ridge = opts.ridge * Eigen::MatrixXd::Identity(k, k);

  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(-eval.hessian + ridge);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) throw Error("fit: information matrix is singular");
    const Eigen::VectorXd delta = ldlt.solve(eval.gradient);
    if (!delta.allFinite()) throw Error("fit: Newton step is not finite");

    // near the optimum logL changes fall below summation rounding
    const double floor = eval.log_likelihood - 1e-12 * (1.0 + std::abs(eval.log_likelihood));
    double step = 1.0;
    Eigen::VectorXd cand = beta + delta;
    auto next = log_likelihood(x, y, cand);
    for (int halving = 0; halving < 40 && !(next.log_likelihood >= floor); ++halving) {
      step *= 0.5;
      cand = beta + step * delta;
      next = log_likelihood(x, y, cand);
    }
    const bool improved = next.log_likelihood >= floor;
    if (improved) {
      beta = cand;
      eval = std::move(next);
    }
    m.iterations = iter;
    m.deviance_trace.push_back(-2.0 * eval.log_likelihood);
    if (!improved || (step * delta).cwiseAbs().maxCoeff() < opts.tol) {
      m.converged = true;
      break;
    }
  }

  Eigen::LDLT<Eigen::MatrixXd> ldlt(-eval.hessian + ridge);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) throw Error("fit: information matrix is singular");
  const Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(k, k));
  m.beta = beta;
  m.se = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  m.log_likelihood = eval.log_likelihood;
  m.sbc = sbc(eval.log_likelihood, static_cast<std::size_t>(k), n);
  if (!m.converged) m.warnings.push_back("did not converge in " + std::to_string(opts.max_iter) + " iterations");
  if (beta.cwiseAbs().maxCoeff() > opts.separation_threshold)
    m.warnings.push_back("complete or quasi-complete separation: |beta| exceeds " +
                         std::to_string(static_cast<int>(opts.separation_threshold)));
  wald_and_derived(m);
  return m;
}

void wald_and_derived(LogisticModel& model) {
  const auto k = static_cast<std::size_t>(model.beta.size());
  model.wald.assign(k, 0.0);
  model.p_values.assign(k, 1.0);
  model.exp_est.assign(k, 1.0);
  model.standardized_estimate.assign(k, std::nullopt);
  for (std::size_t j = 0; j < k; ++j) {
    const double b = model.beta(static_cast<Eigen::Index>(j));
    const double s = model.se.size() ? model.se(static_cast<Eigen::Index>(j)) : 0.0;
    model.wald[j] = b == 0.0 ? 0.0 : (s > 0.0 ? (b / s) * (b / s) : std::numeric_limits<double>::infinity());
    model.p_values[j] = stats::chi2_upper_tail(model.wald[j], 1.0);
    model.exp_est[j] = std::exp(b);
    if (j > 0 && model.terms.size() >= j && model.terms[j - 1].encoding == Encoding::kStandardized)
      model.standardized_estimate[j] = b * kStdEstimateScale;
  }
}

Eigen::VectorXd predict_probability(const LogisticModel& model, const DesignMatrix& design) {
  if (design.terms.size() != model.terms.size()) throw Error("predict: design does not match model terms");
  for (std::size_t j = 0; j < model.terms.size(); ++j)
    if (design.terms[j].name != model.terms[j].name) throw Error("predict: design does not match model terms");
  const Eigen::VectorXd eta = design.x * model.beta;
  return eta.unaryExpr([](double e) { return stats::logistic(e); });
}

// ---------------------------------------------------------------------------
// Stepwise

StepwiseResult stepwise_select(const DesignMatrix& design, const StepwiseOptions& opts) {
  const std::size_t candidates = design.terms.size();
  if (candidates == 0) throw Error("stepwise: no candidate terms");
  const std::size_t max_actions = 2 * candidates;

  StepwiseResult res;
  std::vector<std::size_t> in;  // entry order
  auto fit_set = [&](const std::vector<std::size_t>& set, const Eigen::VectorXd* start) {
    return fit_irls(design.select(set), opts.fit, start);
  };
  LogisticModel cur = fit_set(in, nullptr);
  std::size_t actions = 0;

  while (actions < max_actions) {
    if (opts.max_terms && in.size() >= *opts.max_terms) break;
    // Forward: evaluate every excluded candidate.
    struct Cand {
      double p;
      double sbc;
      std::size_t term;
      LogisticModel model;
    };
    std::optional<Cand> best;
    Eigen::VectorXd start(cur.beta.size() + 1);
    start << cur.beta, 0.0;
    for (std::size_t c = 0; c < candidates; ++c) {
      if (std::find(in.begin(), in.end(), c) != in.end()) continue;
      auto set = in;
      set.push_back(c);
      LogisticModel m;
      try {
        m = fit_set(set, &start);
      } catch (const Error&) {
        continue;
      }
      const double lr = std::max(0.0, 2.0 * (m.log_likelihood - cur.log_likelihood));
      const double p = stats::chi2_upper_tail(lr, 1.0);
      const auto key = std::make_tuple(p, m.sbc, design.terms[c].name);
      if (!best || key < std::make_tuple(best->p, best->sbc, design.terms[best->term].name))
        best = Cand{p, m.sbc, c, std::move(m)};
    }
    if (!best || !(best->p < opts.p_enter) || !(best->sbc < cur.sbc)) break;
    in.push_back(best->term);
    cur = std::move(best->model);
    res.trace.push_back({StepwiseStep::Action::kEnter, design.terms[best->term].name, best->p, cur.sbc});
    ++actions;

    // Backward: drop the least significant term while any exceeds p_stay.
    while (actions < max_actions && !in.empty()) {
      std::size_t worst = 0;
      for (std::size_t j = 1; j < in.size(); ++j) {
        const double pj = cur.p_values[j + 1], pw = cur.p_values[worst + 1];
        if (pj > pw || (pj == pw && design.terms[in[j]].name < design.terms[in[worst]].name)) worst = j;
      }
      const double p_worst = cur.p_values[worst + 1];
      if (!(p_worst > opts.p_stay)) break;
      const auto removed = in[worst];
      Eigen::VectorXd warm(cur.beta.size() - 1);
      for (Eigen::Index j = 0, w = 0; j < cur.beta.size(); ++j)
        if (j != static_cast<Eigen::Index>(worst + 1)) warm(w++) = cur.beta(j);
      in.erase(in.begin() + static_cast<std::ptrdiff_t>(worst));
      cur = fit_set(in, &warm);
      res.trace.push_back({StepwiseStep::Action::kRemove, design.terms[removed].name, p_worst, cur.sbc});
      ++actions;
    }
  }

  res.selected = in;
  std::sort(res.selected.begin(), res.selected.end());
  res.model = fit_set(res.selected, nullptr);
  return res;
}

// ---------------------------------------------------------------------------
// Collinearity pruning

PruneResult prune_collinear(const LogisticModel& model, const DesignMatrix& train, const DesignMatrix& validation,
                            double cutoff, const FitOptions& opts) {
  std::vector<std::size_t> idx;
  for (const auto& t : model.terms) {
    const auto j = train.find_term(t.name);
    if (!j) throw Error("prune: model term '" + t.name + "' is not in the training design");
    if (validation.find_term(t.name) != j) throw Error("prune: validation design columns differ from training");
    idx.push_back(*j);
  }

  PruneResult res;
  res.model = model;
  while (idx.size() >= 2) {
    double worst_r = 0.0;
    std::size_t wa = 0, wb = 0;
    for (std::size_t a = 0; a < idx.size(); ++a) {
      for (std::size_t b = a + 1; b < idx.size(); ++b) {
        const auto ca = train.x.col(static_cast<Eigen::Index>(idx[a] + 1));
        const auto cb = train.x.col(static_cast<Eigen::Index>(idx[b] + 1));
        const double r = stats::pearson(std::span<const double>(ca.data(), static_cast<std::size_t>(ca.size())),
                                        std::span<const double>(cb.data(), static_cast<std::size_t>(cb.size())));
        if (std::isnan(r)) continue;
        if (std::abs(r) > std::abs(worst_r)) {
          worst_r = r;
          wa = a;
          wb = b;
        }
      }
    }
    if (!(std::abs(worst_r) > cutoff)) break;

    struct Outcome {
      std::vector<std::size_t> set;
      LogisticModel model;
      double cum1 = 0.0, lift1 = 0.0, wald_survivor = 0.0;
      std::size_t survivor = 0, dropped = 0;
    };
    auto evaluate = [&](std::size_t drop_pos, std::size_t keep_pos) {
      Outcome o;
      o.dropped = idx[drop_pos];
      o.survivor = idx[keep_pos];
      for (std::size_t p = 0; p < idx.size(); ++p)
        if (p != drop_pos) o.set.push_back(idx[p]);
      o.model = fit_irls(train.select(o.set), opts);
      const auto val = validation.select(o.set);
      const Eigen::VectorXd prob = predict_probability(o.model, val);
      const auto scores =
          make_score_set(val.ids, std::span<const double>(prob.data(), static_cast<std::size_t>(prob.size())),
                         std::span<const double>(val.y.data(), static_cast<std::size_t>(val.y.size())));
      const auto dec = decile_table(scores);
      o.cum1 = dec[0].cum_captured;
      o.lift1 = dec[0].lift;
      const auto pos = static_cast<std::size_t>(std::find(o.set.begin(), o.set.end(), o.survivor) - o.set.begin());
      o.wald_survivor = o.model.wald[pos + 1];
      return o;
    };
    auto drop_b = evaluate(wb, wa);
    auto drop_a = evaluate(wa, wb);
    auto better = [](const Outcome& x, const Outcome& y) {
      if (x.cum1 != y.cum1) return x.cum1 > y.cum1;
      if (x.lift1 != y.lift1) return x.lift1 > y.lift1;
      return x.wald_survivor >= y.wald_survivor;
    };
    Outcome& chosen = better(drop_b, drop_a) ? drop_b : drop_a;
    res.steps.push_back({train.terms[chosen.survivor].name, train.terms[chosen.dropped].name, worst_r, chosen.cum1});
    idx = chosen.set;
    auto next = std::move(chosen.model);
    next.target = model.target;
    next.preprocessing = model.preprocessing;
    res.model = std::move(next);
  }
  return res;
}

LikelihoodRatioTest global_null_lr(const LogisticModel& model, const DesignMatrix& design) {
  if (model.terms.empty()) throw Error("global null test: model has no terms besides the intercept (df = 0)");
  const double n = static_cast<double>(design.y.size());
  const double n1 = design.y.sum();
  const double n0 = n - n1;
  if (n1 <= 0.0 || n0 <= 0.0) throw Error("global null test: response has a single class");
  const double ll0 = n1 * std::log(n1 / n) + n0 * std::log(n0 / n);
  LikelihoodRatioTest t;
  t.statistic = std::max(0.0, 2.0 * (model.log_likelihood - ll0));
  t.df = model.terms.size();
  t.p_value = stats::chi2_upper_tail(t.statistic, static_cast<double>(t.df));
  return t;
}

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json to_json(const LogisticModel& model) {
  using nlohmann::json;
  json coef = json::array();
  for (std::size_t j = 0; j < static_cast<std::size_t>(model.beta.size()); ++j) {
    const auto e = static_cast<Eigen::Index>(j);
    json row = {{"term", model.term_name(j)},
                {"df", 1},
                {"estimate", model.beta(e)},
                {"std_error", model.se(e)},
                {"wald_chi2", model.wald[j]},
                {"p_value", model.p_values[j]},
                {"standardized_estimate", nullptr},
                {"exp_est", model.exp_est[j]}};
    if (model.standardized_estimate[j]) row["standardized_estimate"] = *model.standardized_estimate[j];
    coef.push_back(std::move(row));
  }
  json terms = json::array();
  for (const auto& t : model.terms) {
    json jt = {{"name", t.name}, {"source", t.source}, {"encoding", std::string(to_string(t.encoding))}};
    if (t.encoding == Encoding::kStandardized) {
      jt["mean"] = t.mean;
      jt["std"] = t.std;
    }
    if (t.encoding == Encoding::kDummy) {
      jt["level"] = t.level;
      jt["reference"] = t.reference;
    }
    terms.push_back(std::move(jt));
  }
  json prep = json::array();
  for (const auto& p : model.preprocessing) {
    json jp = {{"variable", p.variable}, {"kind", std::string(to_string(p.kind))}};
    if (p.impute_value) jp["impute_value"] = *p.impute_value;
    if (!p.level_map.empty()) {
      json lm = json::array();
      for (const auto& [raw, merged] : p.level_map) lm.push_back({raw, merged});
      jp["level_map"] = std::move(lm);
    }
    prep.push_back(std::move(jp));
  }
  return {{"target", model.target},
          {"n", model.n},
          {"log_likelihood", model.log_likelihood},
          {"sbc", model.sbc},
          {"converged", model.converged},
          {"iterations", model.iterations},
          {"warnings", model.warnings},
          {"coefficients", std::move(coef)},
          {"terms", std::move(terms)},
          {"preprocessing", std::move(prep)}};
}

LogisticModel model_from_json(const nlohmann::json& j) {
  LogisticModel m;
  try {
    m.target = j.value("target", std::string{});
    m.n = j.at("n").get<std::size_t>();
    m.log_likelihood = j.at("log_likelihood").get<double>();
    m.sbc = j.at("sbc").get<double>();
    m.converged = j.at("converged").get<bool>();
    m.iterations = j.at("iterations").get<int>();
    m.warnings = j.value("warnings", std::vector<std::string>{});
    for (const auto& jt : j.at("terms")) {
      Term t;
      t.name = jt.at("name").get<std::string>();
      t.source = jt.at("source").get<std::string>();
      t.encoding = parse_encoding(jt.at("encoding").get<std::string>());
      if (t.encoding == Encoding::kStandardized) {
        t.mean = jt.at("mean").get<double>();
        t.std = jt.at("std").get<double>();
        if (!(t.std > 0.0)) throw ConfigError("model: term '" + t.name + "' has non-positive std");
      }
      if (t.encoding == Encoding::kDummy) {
        t.level = jt.at("level").get<std::string>();
        t.reference = jt.at("reference").get<std::string>();
      }
      m.terms.push_back(std::move(t));
    }
    const auto& coef = j.at("coefficients");
    if (coef.size() != m.terms.size() + 1) throw ConfigError("model: coefficient count does not match terms");
    m.beta.resize(static_cast<Eigen::Index>(coef.size()));
    m.se.resize(static_cast<Eigen::Index>(coef.size()));
    for (std::size_t k = 0; k < coef.size(); ++k) {
      m.beta(static_cast<Eigen::Index>(k)) = coef[k].at("estimate").get<double>();
      m.se(static_cast<Eigen::Index>(k)) = coef[k].at("std_error").get<double>();
    }
    for (const auto& jp : j.value("preprocessing", nlohmann::json::array())) {
      SourcePrep p;
      p.variable = jp.at("variable").get<std::string>();
      p.kind = parse_column_kind(jp.at("kind").get<std::string>());
      if (jp.contains("impute_value")) p.impute_value = jp.at("impute_value").get<double>();
      if (jp.contains("level_map"))
        for (const auto& pair : jp.at("level_map"))
          p.level_map.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
      m.preprocessing.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model file: ") + e.what());
  }
  wald_and_derived(m);
  return m;
}

}  // namespace scorecard
