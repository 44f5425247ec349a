#include "scorecard/screening.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "scorecard/error.hpp"
#include "scorecard/stats.hpp"

namespace scorecard {

namespace {

struct LevelGroups {
  std::vector<std::string> labels;
  std::vector<int> group;  // -1 for missing
};

std::string bin_label(int bin) {
  // Inverse of likelihood_bin over the integer levels 1..99.
  int lo = kLikelihoodMax, hi = kLikelihoodMin;
  for (int v = kLikelihoodMin; v <= kLikelihoodMax; ++v) {
    if (likelihood_bin(v) == bin) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  return std::to_string(lo) + "-" + std::to_string(hi);
}

LevelGroups level_groups(const DataTable& table, std::string_view variable) {
  const auto& spec = table.spec(variable);
  const auto x = table.values(variable);
  LevelGroups out;
  out.group.resize(x.size(), -1);
  switch (spec.kind) {
    case ColumnKind::kBinary:
      out.labels = {"0", "1"};
      break;
    case ColumnKind::kCategorical:
      out.labels = spec.levels;
      break;
    case ColumnKind::kLikelihood:
      for (int b = 0; b < kLikelihoodBins; ++b) out.labels.push_back(bin_label(b));
      break;
    case ColumnKind::kContinuous:
      throw Error("'" + std::string(variable) + "' is continuous; level statistics need discrete levels");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (is_missing(x[i])) continue;
    out.group[i] = spec.kind == ColumnKind::kLikelihood ? likelihood_bin(x[i]) : static_cast<int>(x[i]);
  }
  return out;
}

// counts[level][class]
std::vector<std::array<std::size_t, 2>> level_counts(const LevelGroups& g, std::span<const double> y) {
  std::vector<std::array<std::size_t, 2>> counts(g.labels.size(), {0, 0});
  for (std::size_t i = 0; i < y.size(); ++i)
    if (g.group[i] >= 0) ++counts[static_cast<std::size_t>(g.group[i])][y[i] == 1.0 ? 1 : 0];
  return counts;
}

std::span<const double> checked_target(const DataTable& table, std::string_view target) {
  const auto& spec = table.spec(target);
  if (spec.kind != ColumnKind::kBinary) throw Error("target '" + std::string(target) + "' must be binary");
  const auto y = table.values(target);
  const auto ones = std::count(y.begin(), y.end(), 1.0);
  const auto zeros = std::count(y.begin(), y.end(), 0.0);
  if (ones == 0 || zeros == 0) throw Error("target '" + std::string(target) + "' is constant");
  return y;
}

void require_kind(const DataTable& table, std::string_view variable, std::initializer_list<ColumnKind> kinds,
                  std::string_view what) {
  const auto kind = table.spec(variable).kind;
  if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end())
    throw Error(std::string(what) + ": '" + std::string(variable) + "' has unsupported kind " +
                std::string(to_string(kind)));
}

std::string join_levels(const std::vector<std::string>& levels, const std::vector<int>& members) {
  std::string out;
  for (auto m : members) {
    if (!out.empty()) out += '+';
    out += levels[static_cast<std::size_t>(m)];
  }
  return out;
}

}  // namespace

int likelihood_bin(double level) {
  const int b = static_cast<int>(std::floor((level - kLikelihoodMin) * kLikelihoodBins / kLikelihoodMax));
  return std::clamp(b, 0, kLikelihoodBins - 1);
}

ChiSquareResult chi_square_2x2(const std::array<std::array<double, 2>, 2>& counts) {
  const double r0 = counts[0][0] + counts[0][1];
  const double r1 = counts[1][0] + counts[1][1];
  const double c0 = counts[0][0] + counts[1][0];
  const double c1 = counts[0][1] + counts[1][1];
  if (r0 <= 0 || r1 <= 0 || c0 <= 0 || c1 <= 0) throw Error("degenerate 2x2 table: a margin is zero");
  const double n = r0 + r1;
  const double rows[2] = {r0, r1};
  const double cols[2] = {c0, c1};
  double stat = 0.0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double e = rows[i] * cols[j] / n;
      const double d = counts[i][j] - e;
      stat += d * d / e;
    }
  }
  return {"", stat, 1, stats::chi2_upper_tail(stat, 1.0)};
}

ChiSquareResult chi_square_binary(const DataTable& table, std::string_view variable, std::string_view target) {
  require_kind(table, variable, {ColumnKind::kBinary}, "chi-square");
  const auto y = checked_target(table, target);
  const auto x = table.values(variable);
  std::array<std::array<double, 2>, 2> counts{};
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!is_missing(x[i])) counts[x[i] == 1.0][y[i] == 1.0] += 1.0;
  ChiSquareResult r;
  try {
    r = chi_square_2x2(counts);
  } catch (const Error&) {
    throw Error("chi-square: degenerate table for '" + std::string(variable) + "' (zero margin)");
  }
  r.variable = std::string(variable);
  return r;
}

TTestResult t_test_multivalued(const DataTable& table, std::string_view variable, std::string_view target) {
  require_kind(table, variable, {ColumnKind::kContinuous, ColumnKind::kLikelihood}, "t-test");
  const auto y = checked_target(table, target);
  const auto x = table.values(variable);
  double sum[2] = {0, 0};
  std::size_t n[2] = {0, 0};
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (is_missing(x[i])) continue;
    const int g = y[i] == 1.0;
    sum[g] += x[i];
    ++n[g];
  }
  if (n[0] < 2 || n[1] < 2)
    throw Error("t-test: '" + std::string(variable) + "' needs at least 2 values in each target group");
  const double m0 = sum[0] / static_cast<double>(n[0]);
  const double m1 = sum[1] / static_cast<double>(n[1]);
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (is_missing(x[i])) continue;
    const double d = x[i] - (y[i] == 1.0 ? m1 : m0);
    ss += d * d;
  }
  const int df = static_cast<int>(n[0] + n[1] - 2);
  const double pooled = ss / df;
  const double diff = m1 - m0;
  TTestResult r;
  r.variable = std::string(variable);
  r.df = df;
  if (pooled <= 0.0) {
    if (diff != 0.0) throw Error("t-test: '" + std::string(variable) + "' has zero pooled variance (infinite t)");
    return r;
  }
  r.t_statistic = diff / std::sqrt(pooled * (1.0 / static_cast<double>(n[0]) + 1.0 / static_cast<double>(n[1])));
  r.abs_rank_key = std::abs(r.t_statistic);
  return r;
}

IvResult woe_iv(const DataTable& table, std::string_view variable, std::string_view target, double smoothing) {
  require_kind(table, variable, {ColumnKind::kCategorical, ColumnKind::kBinary, ColumnKind::kLikelihood},
               "information value");
  if (smoothing < 0.0) throw Error("information value: smoothing must be >= 0");
  const auto y = checked_target(table, target);
  const auto groups = level_groups(table, variable);
  const auto counts = level_counts(groups, y);

  IvResult r;
  r.variable = std::string(variable);
  std::size_t n1 = 0, n0 = 0, levels = 0;
  for (const auto& c : counts) {
    if (c[0] + c[1] == 0) continue;
    n1 += c[1];
    n0 += c[0];
    ++levels;
  }
  const double L = static_cast<double>(levels);
  for (std::size_t l = 0; l < counts.size(); ++l) {
    const auto& c = counts[l];
    if (c[0] + c[1] == 0) continue;
    IvLevel lv;
    lv.level = groups.labels[l];
    lv.n_signal = c[1];
    lv.n_background = c[0];
    lv.signal_share = (static_cast<double>(c[1]) + smoothing) / (static_cast<double>(n1) + smoothing * L);
    lv.background_share = (static_cast<double>(c[0]) + smoothing) / (static_cast<double>(n0) + smoothing * L);
    lv.woe = std::log(lv.signal_share / lv.background_share);
    lv.iv_contribution = (lv.signal_share - lv.background_share) * lv.woe;
    if (!std::isfinite(lv.iv_contribution))
      throw Error("information value: level '" + lv.level + "' of '" + r.variable +
                  "' is empty in one class; use smoothing > 0");
    r.total_iv += lv.iv_contribution;
    r.levels.push_back(std::move(lv));
  }
  return r;
}

std::vector<std::string> occupancy_filter(const DataTable& table, std::span<const std::string> variables,
                                          double min_frac) {
  std::vector<std::string> kept;
  for (const auto& v : variables) {
    require_kind(table, v, {ColumnKind::kBinary}, "occupancy filter");
    std::size_t ones = 0, present = 0;
    for (double x : table.values(v)) {
      if (is_missing(x)) continue;
      ++present;
      ones += x == 1.0;
    }
    // ones >= min_frac * present, kept exact at the boundary
    if (present > 0 && static_cast<double>(ones) >= min_frac * static_cast<double>(present) * (1.0 - 1e-12))
      kept.push_back(v);
  }
  return kept;
}

LevelMapping merge_levels(const DataTable& table, std::string_view variable, std::string_view target, double alpha) {
  require_kind(table, variable, {ColumnKind::kCategorical}, "level merge");
  if (alpha < 0.0 || alpha > 1.0) throw Error("level merge: alpha must lie in [0, 1]");
  const auto y = checked_target(table, target);
  const auto groups = level_groups(table, variable);
  const auto counts = level_counts(groups, y);

  struct Group {
    std::vector<int> members;
    double n1 = 0, n0 = 0;
    double rate() const { return n1 / (n1 + n0); }
  };
  std::vector<Group> active;
  std::vector<Group> fixed;  // unobserved levels
  for (std::size_t l = 0; l < counts.size(); ++l) {
    Group g{{static_cast<int>(l)}, static_cast<double>(counts[l][1]), static_cast<double>(counts[l][0])};
    (g.n1 + g.n0 > 0 ? active : fixed).push_back(std::move(g));
  }

  while (alpha > 0.0 && active.size() >= 2) {
    struct Pair {
      double gap;
      std::size_t a, b;
    };
    std::vector<Pair> pairs;
    for (std::size_t a = 0; a < active.size(); ++a)
      for (std::size_t b = a + 1; b < active.size(); ++b)
        pairs.push_back({std::abs(active[a].rate() - active[b].rate()), a, b});
    std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& p, const Pair& q) { return p.gap < q.gap; });

    bool merged = false;
    for (const auto& pr : pairs) {
      const auto& A = active[pr.a];
      const auto& B = active[pr.b];
      double p = 1.0;  // identical all-0 or all-1 rates: indistinguishable
      if ((A.n1 + B.n1) > 0 && (A.n0 + B.n0) > 0) p = chi_square_2x2({{{A.n1, A.n0}, {B.n1, B.n0}}}).p_value;
      if (p > alpha) {
        Group g;
        g.members = A.members;
        g.members.insert(g.members.end(), B.members.begin(), B.members.end());
        std::sort(g.members.begin(), g.members.end());
        g.n1 = A.n1 + B.n1;
        g.n0 = A.n0 + B.n0;
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(pr.b));
        active[pr.a] = std::move(g);
        merged = true;
        break;
      }
    }
    if (!merged) break;
  }

  active.insert(active.end(), fixed.begin(), fixed.end());
  std::sort(active.begin(), active.end(), [](const Group& a, const Group& b) { return a.members[0] < b.members[0]; });
  LevelMapping out;
  out.variable = std::string(variable);
  out.original_levels = groups.labels;
  out.merged_id.assign(groups.labels.size(), -1);
  for (std::size_t id = 0; id < active.size(); ++id) {
    for (auto m : active[id].members) out.merged_id[static_cast<std::size_t>(m)] = static_cast<int>(id);
    out.merged_levels.push_back(join_levels(groups.labels, active[id].members));
  }
  return out;
}

DataTable apply_level_mapping(const DataTable& table, const LevelMapping& mapping) {
  const auto& spec = table.spec(mapping.variable);
  if (spec.kind != ColumnKind::kCategorical || spec.levels != mapping.original_levels)
    throw Error("level mapping for '" + mapping.variable + "' does not match the table's levels");
  if (mapping.is_identity()) return table;
  const auto x = table.values(mapping.variable);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = is_missing(x[i]) ? kMissing : mapping.merged_id[static_cast<std::size_t>(x[i])];
  ColumnSpec merged = spec;
  merged.levels = mapping.merged_levels;
  if (merged.levels.size() < 2) {
    // A fully merged variable carries no information; keep a schema-valid
    // second level that never occurs.
    merged.levels.push_back("<unused>");
  }
  return table.with_column(mapping.variable, std::move(out), std::move(merged));
}

std::vector<ProportionPoint> proportion_curve(const DataTable& table, std::string_view variable,
                                              std::string_view target) {
  require_kind(table, variable, {ColumnKind::kCategorical, ColumnKind::kBinary, ColumnKind::kLikelihood},
               "proportion curve");
  const auto y = checked_target(table, target);
  const auto groups = level_groups(table, variable);
  const auto counts = level_counts(groups, y);
  std::size_t n1 = 0, n0 = 0;
  for (const auto& c : counts) {
    n1 += c[1];
    n0 += c[0];
  }
  std::vector<ProportionPoint> out;
  for (std::size_t l = 0; l < counts.size(); ++l) {
    const auto& c = counts[l];
    if (c[0] + c[1] == 0) continue;
    ProportionPoint pt{groups.labels[l], c[1], c[0], std::nullopt};
    if (c[0] > 0 && n1 > 0) {
      const double share1 = static_cast<double>(c[1]) / static_cast<double>(n1);
      const double share0 = static_cast<double>(c[0]) / static_cast<double>(n0);
      pt.proportion = 100.0 * share1 / share0;
    }
    out.push_back(std::move(pt));
  }
  return out;
}

void write_proportion_curve(std::span<const ProportionPoint> curve, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "level,count_signal,count_background,proportion,defined\n";
  for (const auto& pt : curve) {
    out << pt.level << ',' << pt.count_signal << ',' << pt.count_background << ',';
    if (pt.proportion) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6f", *pt.proportion);
      out << buf << ",1\n";
    } else {
      out << ",0\n";
    }
  }
}

// ---------------------------------------------------------------------------
// Cascade

void StagePlan::validate() const {
  if (!(retain_after_chi2 > retain_after_t && retain_after_t > retain_after_iv && retain_after_iv > final_retain &&
        final_retain > 0))
    throw ConfigError("stage plan: retained counts must strictly decrease and stay positive");
  if (!(iv_min > 0.0 && iv_min < iv_max)) throw ConfigError("stage plan: need 0 < iv_min < iv_max");
  if (occupancy_min < 0.0 || occupancy_min > 1.0) throw ConfigError("stage plan: occupancy_min must lie in [0, 1]");
  if (level_merge_alpha < 0.0 || level_merge_alpha > 1.0)
    throw ConfigError("stage plan: level_merge_alpha must lie in [0, 1]");
  if (iv_smoothing < 0.0) throw ConfigError("stage plan: iv_smoothing must be >= 0");
}

namespace {

struct Ranked {
  std::string name;
  double key;
};

// Keeps the current set minus the lowest-ranked `drop` variables of `ranked`.
std::vector<std::string> drop_lowest(const std::vector<std::string>& current, std::vector<Ranked> ranked,
                                     std::size_t drop) {
  std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.key != b.key) return a.key < b.key;
    return a.name > b.name;
  });
  drop = std::min(drop, ranked.size());
  std::vector<std::string> gone;
  for (std::size_t i = 0; i < drop; ++i) gone.push_back(ranked[i].name);
  std::vector<std::string> kept;
  for (const auto& v : current)
    if (std::find(gone.begin(), gone.end(), v) == gone.end()) kept.push_back(v);
  return kept;
}

void check_count(std::string_view stage, std::size_t requested, std::size_t available) {
  if (requested > available)
    throw ConfigError("screening stage '" + std::string(stage) + "' requests " + std::to_string(requested) +
                      " predictors but only " + std::to_string(available) + " are available");
}

void check_nonempty(std::string_view stage, const std::vector<std::string>& set) {
  if (set.empty()) throw Error("screening stage '" + std::string(stage) + "' retained no predictors");
}

}  // namespace

ScreeningReport run_screening(const DataTable& table, const StagePlan& plan) {
  plan.validate();
  const auto& target = table.schema().target;
  checked_target(table, target);

  ScreeningReport rep;
  rep.input = table.schema().predictor_names();
  auto kind_of = [&](const std::string& v) { return table.spec(v).kind; };
  std::vector<std::string> current = rep.input;

  // 1. chi-square on binaries
  check_count("chi2", plan.retain_after_chi2, current.size());
  {
    std::vector<Ranked> ranked;
    for (const auto& v : current) {
      if (kind_of(v) != ColumnKind::kBinary) continue;
      try {
        auto r = chi_square_binary(table, v, target);
        ranked.push_back({v, r.statistic});
        rep.chi_square.push_back(std::move(r));
      } catch (const Error& e) {
        ranked.push_back({v, -1.0});
        rep.notes.emplace_back(v, e.what());
      }
    }
    const std::size_t excess = current.size() - plan.retain_after_chi2;
    current = drop_lowest(current, std::move(ranked), excess);
    check_nonempty("chi2", current);
    rep.stages.push_back({"chi2", plan.retain_after_chi2, current});
  }

  // 2. t-test on multivalued
  check_count("t_test", plan.retain_after_t, current.size());
  {
    std::vector<Ranked> ranked;
    for (const auto& v : current) {
      const auto k = kind_of(v);
      if (k != ColumnKind::kContinuous && k != ColumnKind::kLikelihood) continue;
      try {
        auto r = t_test_multivalued(table, v, target);
        ranked.push_back({v, r.abs_rank_key});
        rep.t_tests.push_back(std::move(r));
      } catch (const Error& e) {
        ranked.push_back({v, -1.0});
        rep.notes.emplace_back(v, e.what());
      }
    }
    const std::size_t excess = current.size() - std::min(current.size(), plan.retain_after_t);
    current = drop_lowest(current, std::move(ranked), excess);
    check_nonempty("t_test", current);
    rep.stages.push_back({"t_test", plan.retain_after_t, current});
  }

  // 3. information value band on categoricals
  check_count("information_value", plan.retain_after_iv, current.size());
  {
    std::vector<Ranked> in_band;
    std::vector<std::string> kept;
    for (const auto& v : current) {
      if (kind_of(v) != ColumnKind::kCategorical) {
        kept.push_back(v);
        continue;
      }
      auto r = woe_iv(table, v, target, plan.iv_smoothing);
      if (r.total_iv >= plan.iv_min && r.total_iv <= plan.iv_max) {
        in_band.push_back({v, r.total_iv});
        kept.push_back(v);
      }
      rep.information_values.push_back(std::move(r));
    }
    const std::size_t excess = kept.size() - std::min(kept.size(), plan.retain_after_iv);
    current = drop_lowest(kept, std::move(in_band), excess);
    check_nonempty("information_value", current);
    rep.stages.push_back({"information_value", plan.retain_after_iv, current});
  }

  // 4. clustering, occupancy, level merge
  check_count("final", plan.final_retain, current.size());
  {
    std::vector<std::string> numeric, categorical;
    for (const auto& v : current) {
      if (kind_of(v) == ColumnKind::kCategorical) {
        categorical.push_back(v);
        continue;
      }
      std::size_t present = 0;
      double first = kMissing;
      bool varies = false;
      for (double x : table.values(v)) {
        if (is_missing(x)) continue;
        if (present++ == 0) first = x;
        varies = varies || x != first;
      }
      if (varies)
        numeric.push_back(v);
      else
        rep.notes.emplace_back(v, "constant on non-missing rows; excluded from clustering");
    }

    // Categoricals bypass clustering; when they alone would fill the final
    // count, the lowest-IV ones give way so one numeric slot remains.
    const std::size_t cat_cap = numeric.empty() ? plan.final_retain : plan.final_retain - 1;
    if (categorical.size() > cat_cap) {
      std::vector<Ranked> ranked;
      for (const auto& r : rep.information_values)
        if (std::find(categorical.begin(), categorical.end(), r.variable) != categorical.end())
          ranked.push_back({r.variable, r.total_iv});
      categorical = drop_lowest(categorical, std::move(ranked), categorical.size() - cat_cap);
    }

    std::vector<std::string> kept;
    if (!numeric.empty()) {
      const std::size_t slots = plan.final_retain > categorical.size() ? plan.final_retain - categorical.size() : 1;
      const auto corr = correlation_matrix(table, numeric);
      const auto clusters = cluster_variables(corr, plan.cluster_split_threshold, slots);
      rep.clusters = select_representatives(clusters, corr);
      kept = rep.clusters.representatives;
    }
    kept.insert(kept.end(), categorical.begin(), categorical.end());

    std::vector<std::string> binaries;
    for (const auto& v : kept)
      if (kind_of(v) == ColumnKind::kBinary) binaries.push_back(v);
    const auto occupied = occupancy_filter(table, binaries, plan.occupancy_min);
    for (const auto& b : binaries)
      if (std::find(occupied.begin(), occupied.end(), b) == occupied.end()) rep.occupancy_dropped.push_back(b);

    std::vector<std::string> final_set;
    for (const auto& v : current) {  // schema order
      if (std::find(kept.begin(), kept.end(), v) == kept.end()) continue;
      if (std::find(rep.occupancy_dropped.begin(), rep.occupancy_dropped.end(), v) != rep.occupancy_dropped.end())
        continue;
      final_set.push_back(v);
    }
    for (const auto& v : final_set)
      if (kind_of(v) == ColumnKind::kCategorical)
        rep.level_mappings.push_back(merge_levels(table, v, target, plan.level_merge_alpha));
    check_nonempty("final", final_set);
    rep.stages.push_back({"final", plan.final_retain, final_set});
  }
  return rep;
}

nlohmann::json to_json(const ScreeningReport& report) {
  using nlohmann::json;
  json stages = json::array();
  for (const auto& s : report.stages)
    stages.push_back({{"stage", s.name}, {"requested", s.requested}, {"retained_count", s.retained.size()},
                      {"retained", s.retained}});
  json chi = json::array();
  for (const auto& r : report.chi_square)
    chi.push_back({{"variable", r.variable}, {"statistic", r.statistic}, {"df", r.df}, {"p_value", r.p_value}});
  json tt = json::array();
  for (const auto& r : report.t_tests)
    tt.push_back({{"variable", r.variable}, {"t", r.t_statistic}, {"df", r.df}});
  json iv = json::array();
  for (const auto& r : report.information_values) {
    json levels = json::array();
    for (const auto& l : r.levels)
      levels.push_back({{"level", l.level},
                        {"n_signal", l.n_signal},
                        {"n_background", l.n_background},
                        {"signal_share", l.signal_share},
                        {"background_share", l.background_share},
                        {"woe", l.woe},
                        {"iv", l.iv_contribution}});
    iv.push_back({{"variable", r.variable}, {"total_iv", r.total_iv}, {"levels", levels}});
  }
  json maps = json::array();
  for (const auto& m : report.level_mappings) {
    json entries = json::object();
    for (std::size_t i = 0; i < m.original_levels.size(); ++i)
      entries[m.original_levels[i]] = m.merged_levels[static_cast<std::size_t>(m.merged_id[i])];
    maps.push_back({{"variable", m.variable}, {"merged_count", m.merged_count()}, {"mapping", entries}});
  }
  json notes = json::array();
  for (const auto& [v, why] : report.notes) notes.push_back({{"variable", v}, {"note", why}});
  return {{"input_count", report.input.size()},
          {"stages", stages},
          {"chi_square", chi},
          {"t_test", tt},
          {"information_value", iv},
          {"clusters", to_json(report.clusters)},
          {"occupancy_dropped", report.occupancy_dropped},
          {"level_mappings", maps},
          {"notes", notes}};
}

}  // namespace scorecard
