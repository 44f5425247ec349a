#include "scorecard/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "scorecard/error.hpp"
#include "scorecard/rng.hpp"
#include "scorecard/stats.hpp"

namespace scorecard {

namespace {

constexpr const char* kIdColumn = "id";
constexpr const char* kTargetColumn = "y";
constexpr double kInterceptBound = 30.0;
constexpr double kLikelihoodSpan = 98.999;

struct VarStructure {
  std::string name;
  ColumnKind kind = ColumnKind::kContinuous;
  double occupancy = 0.0;          // binary
  std::vector<double> cumulative;  // categorical level cdf
  double gamma = 1.0;              // likelihood skew
  bool planted = false;
  PlantedVariable truth;
  int driver = -1;  // partner columns: index of the driving variable
  double r = 0.0;
};

struct Structure {
  std::vector<VarStructure> vars;
};

// Largest-remainder apportionment of `total` over `weights`, optionally capped.
std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& weights,
                                   const std::vector<std::size_t>* caps = nullptr) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::size_t> out(weights.size(), 0);
  std::vector<double> rem(weights.size(), 0.0);
  std::size_t given = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const double exact = sum > 0.0 ? static_cast<double>(total) * weights[k] / sum : 0.0;
    out[k] = static_cast<std::size_t>(std::floor(exact));
    if (caps) out[k] = std::min(out[k], (*caps)[k]);
    rem[k] = exact - std::floor(exact);
    given += out[k];
  }
  while (given < total) {
    std::size_t best = weights.size();
    for (std::size_t k = 0; k < weights.size(); ++k) {
      if (caps && out[k] >= (*caps)[k]) continue;
      if (best == weights.size() || rem[k] > rem[best]) best = k;
    }
    if (best == weights.size()) throw ConfigError("synthetic: cannot place every informative predictor");
    ++out[best];
    rem[best] = -1.0;
    ++given;
  }
  return out;
}

double likelihood_value(double u, double gamma) { return 1.0 + std::floor(kLikelihoodSpan * std::pow(u, gamma)); }

// Exact pmf of likelihood_value for u ~ U(0, 1).
std::pair<double, double> likelihood_moments(double gamma) {
  double mean = 0.0, sq = 0.0, prev = 0.0;
  for (int m = 0; m < kLikelihoodMax; ++m) {
    const double cdf = std::min(1.0, std::pow((m + 1) / kLikelihoodSpan, 1.0 / gamma));
    const double p = cdf - prev;
    prev = cdf;
    mean += p * (m + 1);
    sq += p * (m + 1) * (m + 1);
  }
  return {mean, std::sqrt(std::max(0.0, sq - mean * mean))};
}

std::string var_name(std::size_t index, std::size_t total) {
  const int width = std::max<int>(3, static_cast<int>(std::to_string(total).size()));
  std::string digits = std::to_string(index + 1);
  return "v" + std::string(static_cast<std::size_t>(width) - digits.size(), '0') + digits;
}

Structure build_structure(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, 0));
  const std::size_t p = spec.n_predictors();
  const std::vector<double> mix{spec.kind_mix.binary, spec.kind_mix.categorical, spec.kind_mix.likelihood,
                                spec.kind_mix.continuous};
  const ColumnKind kinds[4] = {ColumnKind::kBinary, ColumnKind::kCategorical, ColumnKind::kLikelihood,
                               ColumnKind::kContinuous};
  const auto counts = apportion(p, mix);
  std::vector<int> kind_of;
  for (int k = 0; k < 4; ++k) kind_of.insert(kind_of.end(), counts[static_cast<std::size_t>(k)], k);
  rng.shuffle(kind_of);

  const auto planted_counts = apportion(spec.n_informative, mix, &counts);
  std::vector<bool> planted(p, false);
  for (int k = 0; k < 4; ++k) {
    std::vector<std::size_t> positions;
    for (std::size_t j = 0; j < p; ++j)
      if (kind_of[j] == k) positions.push_back(j);
    for (auto pick : rng.sample_without_replacement(positions.size(), planted_counts[static_cast<std::size_t>(k)]))
      planted[positions[pick]] = true;
  }

  Structure s;
  for (std::size_t j = 0; j < p; ++j) {
    VarStructure v;
    v.name = var_name(j, p);
    v.kind = kinds[kind_of[j]];
    v.planted = planted[j];
    v.truth.name = v.name;
    v.truth.kind = v.kind;
    switch (v.kind) {
      case ColumnKind::kBinary:
        v.occupancy = rng.uniform(0.05, 0.6);
        v.truth.mean = v.occupancy;
        v.truth.std = std::sqrt(v.occupancy * (1.0 - v.occupancy));
        break;
      case ColumnKind::kCategorical: {
        const auto levels = 3 + static_cast<std::size_t>(rng.below(6));
        std::vector<double> w(levels);
        for (auto& x : w) x = rng.uniform(0.2, 1.0);
        const double total = std::accumulate(w.begin(), w.end(), 0.0);
        double acc = 0.0;
        for (auto x : w) v.cumulative.push_back(acc += x / total);
        v.cumulative.back() = 1.0;
        v.truth.level_effects.resize(levels);
        for (auto& e : v.truth.level_effects) e = rng.normal();
        double mean = 0.0, sq = 0.0;
        for (std::size_t l = 0; l < levels; ++l) {
          mean += w[l] / total * v.truth.level_effects[l];
          sq += w[l] / total * v.truth.level_effects[l] * v.truth.level_effects[l];
        }
        v.truth.mean = mean;
        v.truth.std = std::sqrt(std::max(sq - mean * mean, 1e-12));
        break;
      }
      case ColumnKind::kLikelihood: {
        v.gamma = rng.uniform(0.5, 2.0);
        std::tie(v.truth.mean, v.truth.std) = likelihood_moments(v.gamma);
        break;
      }
      case ColumnKind::kContinuous:
        v.truth.mean = 0.0;
        v.truth.std = 1.0;
        break;
    }
    const double magnitude = rng.uniform(spec.beta_min, spec.beta_max);
    const bool negative = rng.bernoulli(0.5);
    if (v.planted) v.truth.beta = negative ? -magnitude : magnitude;
    s.vars.push_back(std::move(v));
  }

  std::vector<std::size_t> drivers, partners;
  for (std::size_t j = 0; j < p; ++j) {
    if (s.vars[j].kind != ColumnKind::kContinuous) continue;
    (s.vars[j].planted ? drivers : partners).push_back(j);
  }
  if (spec.correlated_pairs > std::min(drivers.size(), partners.size()))
    throw ConfigError("synthetic.correlated_pairs: only " + std::to_string(std::min(drivers.size(), partners.size())) +
                      " continuous driver/noise pairs are available");
  for (std::size_t k = 0; k < spec.correlated_pairs; ++k) {
    s.vars[partners[k]].driver = static_cast<int>(drivers[k]);
    s.vars[partners[k]].r = spec.pair_correlation;
  }
  return s;
}

Schema make_schema(const Structure& s) {
  Schema schema;
  schema.id_column = kIdColumn;
  schema.target = kTargetColumn;
  schema.columns.push_back({kTargetColumn, ColumnKind::kBinary, {}});
  for (const auto& v : s.vars) {
    ColumnSpec c{v.name, v.kind, {}};
    for (std::size_t l = 0; l < v.cumulative.size(); ++l) c.levels.push_back(std::string(1, static_cast<char>('A' + l)));
    schema.columns.push_back(std::move(c));
  }
  return schema;
}

double planted_z(const PlantedVariable& pv, double x) {
  if (is_missing(x)) return 0.0;
  const double raw = pv.kind == ColumnKind::kCategorical ? pv.level_effects.at(static_cast<std::size_t>(x)) : x;
  return (raw - pv.mean) / pv.std;
}

struct Drawn {
  DataTable table;
  double intercept = 0.0;
  double prevalence = 0.0;
};

Drawn draw(const SyntheticSpec& spec, const Structure& s, std::size_t n, std::uint64_t stream,
           std::optional<double> intercept) {
  Rng rng(derive_seed(spec.seed, stream));
  std::vector<std::vector<double>> cols(s.vars.size(), std::vector<double>(n));
  for (std::size_t j = 0; j < s.vars.size(); ++j) {
    const auto& v = s.vars[j];
    auto& c = cols[j];
    for (std::size_t i = 0; i < n; ++i) {
      switch (v.kind) {
        case ColumnKind::kBinary:
          c[i] = rng.bernoulli(v.occupancy) ? 1.0 : 0.0;
          break;
        case ColumnKind::kCategorical: {
          const double u = rng.uniform();
          c[i] = static_cast<double>(std::upper_bound(v.cumulative.begin(), v.cumulative.end() - 1, u) -
                                     v.cumulative.begin());
          break;
        }
        case ColumnKind::kLikelihood:
          c[i] = likelihood_value(rng.uniform(), v.gamma);
          break;
        case ColumnKind::kContinuous:
          c[i] = rng.normal();
          break;
      }
    }
  }
  for (std::size_t j = 0; j < s.vars.size(); ++j) {
    const auto& v = s.vars[j];
    if (v.driver < 0) continue;
    const auto& d = cols[static_cast<std::size_t>(v.driver)];
    const double e = std::sqrt(1.0 - v.r * v.r);
    for (std::size_t i = 0; i < n; ++i) cols[j][i] = v.r * d[i] + e * cols[j][i];
  }

  std::vector<double> latent(n, 0.0);
  for (std::size_t j = 0; j < s.vars.size(); ++j) {
    if (!s.vars[j].planted) continue;
    for (std::size_t i = 0; i < n; ++i) latent[i] += s.vars[j].truth.beta * planted_z(s.vars[j].truth, cols[j][i]);
  }
  std::vector<double> u(n);
  for (auto& x : u) x = rng.uniform();
  auto prevalence = [&](double b) {
    std::size_t ones = 0;
    for (std::size_t i = 0; i < n; ++i) ones += u[i] < stats::logistic(b + latent[i]);
    return static_cast<double>(ones) / static_cast<double>(n);
  };

  Drawn out;
  if (intercept) {
    out.intercept = *intercept;
  } else {
    const double target = static_cast<double>(spec.n_signal) / static_cast<double>(spec.n_records());
    double lo = -kInterceptBound, hi = kInterceptBound;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (prevalence(mid) < target ? lo : hi) = mid;
    }
    const double plo = prevalence(lo), phi = prevalence(hi);
    out.intercept = std::abs(plo - target) < std::abs(phi - target) ? lo : hi;
    if (std::abs(prevalence(out.intercept) - target) > 0.01)
      throw Error("synthetic: intercept calibration infeasible; no intercept in [-30, 30] reaches prevalence " +
                  std::to_string(target) + " within 0.01 (reduce beta_max)");
  }

  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = u[i] < stats::logistic(out.intercept + latent[i]) ? 1.0 : 0.0;
  out.prevalence = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

  if (spec.missing_rate > 0.0) {
    for (std::size_t j = 0; j < s.vars.size(); ++j) {
      const auto k = s.vars[j].kind;
      if (k != ColumnKind::kContinuous && k != ColumnKind::kLikelihood) continue;
      for (auto& x : cols[j])
        if (rng.uniform() < spec.missing_rate) x = kMissing;
    }
  }

  std::vector<std::vector<double>> all;
  all.reserve(cols.size() + 1);
  all.push_back(std::move(y));
  for (auto& c : cols) all.push_back(std::move(c));
  std::vector<std::uint64_t> ids(n);
  std::iota(ids.begin(), ids.end(), std::uint64_t{0});
  out.table = DataTable(make_schema(s), std::move(ids), std::move(all));
  return out;
}

double field_fraction(const nlohmann::json& j, const char* key, double fallback) {
  return j.contains(key) ? j.at(key).get<double>() : fallback;
}

}  // namespace

void SyntheticSpec::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError("synthetic." + field + ": " + why);
  };
  if (n_signal == 0) fail("n_signal", "must be positive");
  if (n_background == 0) fail("n_background", "must be positive");
  if (n_predictors() == 0) fail("n_noise", "n_informative + n_noise must be positive");
  const double fr[4] = {kind_mix.binary, kind_mix.categorical, kind_mix.likelihood, kind_mix.continuous};
  const char* names[4] = {"binary", "categorical", "likelihood", "continuous"};
  for (int k = 0; k < 4; ++k)
    if (!(fr[k] >= 0.0 && fr[k] <= 1.0)) fail(std::string("kind_mix.") + names[k], "must lie in [0, 1]");
  const double sum = fr[0] + fr[1] + fr[2] + fr[3];
  if (std::abs(sum - 1.0) > 1e-9) fail("kind_mix", "fractions must sum to 1 (got " + std::to_string(sum) + ")");
  if (!(beta_min >= 0.0)) fail("beta_min", "must be >= 0");
  if (!(beta_max >= beta_min)) fail("beta_max", "must be >= beta_min");
  if (!(missing_rate >= 0.0 && missing_rate <= 0.5)) fail("missing_rate", "must lie in [0, 0.5]");
  if (!(pair_correlation > -1.0 && pair_correlation < 1.0)) fail("pair_correlation", "must lie in (-1, 1)");
}

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j) {
  SyntheticSpec s;
  try {
    s.n_signal = j.value("n_signal", s.n_signal);
    s.n_background = j.value("n_background", s.n_background);
    s.n_informative = j.value("n_informative", s.n_informative);
    s.n_noise = j.value("n_noise", s.n_noise);
    if (j.contains("kind_mix")) {
      const auto& m = j.at("kind_mix");
      s.kind_mix = {field_fraction(m, "binary", 0.0), field_fraction(m, "categorical", 0.0),
                    field_fraction(m, "likelihood", 0.0), field_fraction(m, "continuous", 0.0)};
    }
    s.beta_min = j.value("beta_min", s.beta_min);
    s.beta_max = j.value("beta_max", s.beta_max);
    s.missing_rate = j.value("missing_rate", s.missing_rate);
    s.seed = j.value("seed", s.seed);
    s.correlated_pairs = j.value("correlated_pairs", s.correlated_pairs);
    s.pair_correlation = j.value("pair_correlation", s.pair_correlation);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synthetic: ") + e.what());
  }
  s.validate();
  return s;
}

nlohmann::json to_json(const SyntheticSpec& s) {
  return {{"n_signal", s.n_signal},
          {"n_background", s.n_background},
          {"n_informative", s.n_informative},
          {"n_noise", s.n_noise},
          {"kind_mix",
           {{"binary", s.kind_mix.binary},
            {"categorical", s.kind_mix.categorical},
            {"likelihood", s.kind_mix.likelihood},
            {"continuous", s.kind_mix.continuous}}},
          {"beta_min", s.beta_min},
          {"beta_max", s.beta_max},
          {"missing_rate", s.missing_rate},
          {"seed", s.seed},
          {"correlated_pairs", s.correlated_pairs},
          {"pair_correlation", s.pair_correlation}};
}

bool GroundTruth::is_planted(std::string_view name) const {
  return std::any_of(planted.begin(), planted.end(), [&](const auto& p) { return p.name == name; });
}

nlohmann::json to_json(const GroundTruth& t) {
  nlohmann::json planted = nlohmann::json::array();
  for (const auto& p : t.planted) {
    nlohmann::json jp = {{"name", p.name},
                         {"kind", std::string(to_string(p.kind))},
                         {"beta", p.beta},
                         {"mean", p.mean},
                         {"std", p.std}};
    if (!p.level_effects.empty()) jp["level_effects"] = p.level_effects;
    planted.push_back(std::move(jp));
  }
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : t.pairs) pairs.push_back({{"driver", p.driver}, {"partner", p.partner}, {"r", p.r}});
  return {{"intercept", t.intercept},
          {"target_prevalence", t.target_prevalence},
          {"realized_prevalence", t.realized_prevalence},
          {"planted", std::move(planted)},
          {"correlated_pairs", std::move(pairs)}};
}

Synthetic generate(const SyntheticSpec& spec) {
  const auto s = build_structure(spec);
  auto d = draw(spec, s, spec.n_records(), 1, std::nullopt);
  GroundTruth truth;
  for (const auto& v : s.vars) {
    if (v.planted) truth.planted.push_back(v.truth);
    if (v.driver >= 0) truth.pairs.push_back({s.vars[static_cast<std::size_t>(v.driver)].name, v.name, v.r});
  }
  truth.intercept = d.intercept;
  truth.target_prevalence = static_cast<double>(spec.n_signal) / static_cast<double>(spec.n_records());
  truth.realized_prevalence = d.prevalence;
  return {std::move(d.table), std::move(truth)};
}

DataTable generate_sample(const SyntheticSpec& spec, const GroundTruth& truth, std::size_t n_records,
                          std::uint64_t stream) {
  if (stream < 1) throw Error("synthetic: sample stream must be >= 1");
  if (n_records == 0) throw Error("synthetic: sample needs at least one record");
  return draw(spec, build_structure(spec), n_records, 1 + stream, truth.intercept).table;
}

ScoreSet oracle_metrics(const GroundTruth& truth, const DataTable& table) {
  std::vector<double> eta(table.n_rows(), truth.intercept);
  for (const auto& pv : truth.planted) {
    if (!table.has_column(pv.name)) throw Error("oracle: planted column '" + pv.name + "' is not in the table");
    const auto& spec = table.spec(pv.name);
    if (spec.kind != pv.kind) throw Error("oracle: column '" + pv.name + "' has a different kind");
    if (pv.kind == ColumnKind::kCategorical && spec.levels.size() != pv.level_effects.size())
      throw Error("oracle: column '" + pv.name + "' has a different level set");
    const auto x = table.values(pv.name);
    for (std::size_t i = 0; i < eta.size(); ++i) eta[i] += pv.beta * planted_z(pv, x[i]);
  }
  std::vector<double> p(eta.size());
  std::transform(eta.begin(), eta.end(), p.begin(), stats::logistic);
  const bool has_y = !table.schema().target.empty() && table.has_column(table.schema().target);
  return make_score_set(table.ids(), p, has_y ? table.target() : std::span<const double>{});
}

std::vector<std::filesystem::path> write_synthetic(const Synthetic& s, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto data = dir / "data.csv", schema = dir / "schema.json", truth = dir / "ground_truth.json";
  write_csv(s.table, data);
  save_schema(s.table.schema(), schema);
  std::ofstream f(truth, std::ios::binary);
  if (!f) throw Error("cannot write '" + truth.string() + "'");
  f << to_json(s.truth).dump(2) << '\n';
  return {data, schema, truth};
}

}  // namespace scorecard
