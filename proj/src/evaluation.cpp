#include "scorecard/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "scorecard/error.hpp"
#include "scorecard/stats.hpp"

namespace scorecard {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& out) {
  std::ofstream f(out, std::ios::binary);
  if (!f) throw Error("cannot write '" + out.string() + "'");
  return f;
}

void require_outcomes(const ScoreSet& scores, std::string_view what) {
  for (const auto& r : scores.records)
    if (r.y != 0 && r.y != 1) throw Error(std::string(what) + ": every record needs a known outcome");
}

// Applies stored imputation and level merges to one source column.
DataTable prepare_source(const DataTable& table, const SourcePrep& prep) {
  const auto& spec = table.spec(prep.variable);
  if (spec.kind != prep.kind)
    throw ConfigError("column '" + prep.variable + "' is " + std::string(to_string(spec.kind)) + ", model expects " +
                      std::string(to_string(prep.kind)));
  const auto src = table.values(prep.variable);
  if (prep.kind == ColumnKind::kCategorical && !prep.level_map.empty()) {
    ColumnSpec merged{prep.variable, ColumnKind::kCategorical, {}};
    auto level_id = [&](const std::string& name) {
      auto it = std::find(merged.levels.begin(), merged.levels.end(), name);
      if (it != merged.levels.end()) return static_cast<double>(it - merged.levels.begin());
      merged.levels.push_back(name);
      return static_cast<double>(merged.levels.size() - 1);
    };
    for (const auto& [raw, to] : prep.level_map) level_id(to);
    std::vector<double> out(src.size());
    for (std::size_t i = 0; i < src.size(); ++i) {
      if (is_missing(src[i])) {
        out[i] = kMissing;
        continue;
      }
      const auto& raw = spec.levels.at(static_cast<std::size_t>(src[i]));
      auto it = std::find_if(prep.level_map.begin(), prep.level_map.end(),
                             [&](const auto& p) { return p.first == raw; });
      out[i] = level_id(it == prep.level_map.end() ? raw : it->second);
    }
    return table.with_column(prep.variable, std::move(out), merged);
  }
  if (prep.impute_value && std::any_of(src.begin(), src.end(), is_missing)) {
    std::vector<double> out(src.begin(), src.end());
    for (double& x : out)
      if (is_missing(x)) x = *prep.impute_value;
    return table.with_column(prep.variable, std::move(out));
  }
  return table;
}

}  // namespace

void ScoreSet::validate() const {
  std::unordered_set<std::uint64_t> seen;
  for (const auto& r : records) {
    if (!(r.p >= 0.0 && r.p <= 1.0)) throw Error("score set: probability outside [0, 1] for id " + std::to_string(r.id));
    if (r.y < -1 || r.y > 1) throw Error("score set: outcome must be 0, 1 or unknown");
    if (!seen.insert(r.id).second) throw Error("score set: duplicate id " + std::to_string(r.id));
  }
}

ScoreSet make_score_set(std::span<const std::uint64_t> ids, std::span<const double> p, std::span<const double> y) {
  if (ids.size() != p.size() || (!y.empty() && y.size() != p.size()))
    throw Error("score set: ids, probabilities and outcomes differ in length");
  ScoreSet s;
  s.records.reserve(p.size());
  for (std::size_t i = 0; i < p.size(); ++i)
    s.records.push_back({ids[i], p[i], y.empty() || is_missing(y[i]) ? -1 : static_cast<int>(y[i])});
  s.validate();
  return s;
}

ScoreSet score(const LogisticModel& model, const DataTable& table) {
  for (const auto& prep : model.preprocessing)
    if (!table.has_column(prep.variable)) throw ConfigError("missing required column '" + prep.variable + "'");
  for (const auto& t : model.terms)
    if (!table.has_column(t.source)) throw ConfigError("missing required column '" + t.source + "'");

  DataTable prepared = table;
  for (const auto& prep : model.preprocessing) prepared = prepare_source(prepared, prep);
  const auto design = encode_design(prepared, {}, model.target, model.terms);
  const Eigen::VectorXd p = predict_probability(model, design);
  return make_score_set(design.ids, std::span<const double>(p.data(), static_cast<std::size_t>(p.size())),
                        std::span<const double>(design.y.data(), static_cast<std::size_t>(design.y.size())));
}

std::vector<int> assign_deciles(const ScoreSet& scores) {
  const auto& rec = scores.records;
  std::vector<std::size_t> order(rec.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (rec[a].p != rec[b].p) return rec[a].p > rec[b].p;
    return rec[a].id < rec[b].id;
  });
  const std::size_t base = rec.size() / 10, extra = rec.size() % 10;
  std::vector<int> decile(rec.size());
  std::size_t pos = 0;
  for (int d = 1; d <= 10; ++d) {
    const std::size_t size = base + (static_cast<std::size_t>(d) <= extra ? 1 : 0);
    for (std::size_t k = 0; k < size; ++k) decile[order[pos++]] = d;
  }
  return decile;
}

std::vector<DecileRow> decile_table(const ScoreSet& scores) {
  if (scores.size() < 10) throw Error("decile table: need at least 10 records");
  require_outcomes(scores, "decile table");
  const auto dec = assign_deciles(scores);
  std::vector<DecileRow> rows(10);
  for (int d = 0; d < 10; ++d) rows[static_cast<std::size_t>(d)].decile = d + 1;
  std::size_t total = 0;
  for (std::size_t i = 0; i < dec.size(); ++i) {
    auto& row = rows[static_cast<std::size_t>(dec[i] - 1)];
    ++row.n;
    row.responders += static_cast<std::size_t>(scores.records[i].y);
    total += static_cast<std::size_t>(scores.records[i].y);
  }
  if (total == 0) throw Error("decile table: no responders, lift is undefined");
  const double overall = static_cast<double>(total) / static_cast<double>(scores.size());
  std::size_t cum = 0;
  for (auto& row : rows) {
    row.response_rate = static_cast<double>(row.responders) / static_cast<double>(row.n);
    row.lift = row.response_rate / overall;
    row.captured = static_cast<double>(row.responders) / static_cast<double>(total);
    cum += row.responders;
    row.cum_captured = static_cast<double>(cum) / static_cast<double>(total);
  }
  return rows;
}

ConfusionMatrix confusion_matrix(const ScoreSet& scores, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("threshold must lie in [0, 1]");
  require_outcomes(scores, "confusion matrix");
  ConfusionMatrix cm;
  for (const auto& r : scores.records) {
    const bool pred = r.p >= threshold;
    if (pred)
      ++(r.y == 1 ? cm.tp : cm.fp);
    else
      ++(r.y == 1 ? cm.fn : cm.tn);
  }
  return cm;
}

Metrics metrics(const ConfusionMatrix& cm) {
  auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  return {ratio(cm.tp + cm.tn, cm.total()), ratio(cm.tp, cm.tp + cm.fn), ratio(cm.tn, cm.fp + cm.tn)};
}

void export_chart_data(std::span<const DecileRow> deciles, const std::filesystem::path& out) {
  auto f = open_out(out);
  f << "decile,n,responders,response_rate,lift,captured,cum_captured,baseline\n";
  for (const auto& r : deciles)
    f << r.decile << ',' << r.n << ',' << r.responders << ',' << fmt_double(r.response_rate) << ','
      << fmt_double(r.lift) << ',' << fmt_double(r.captured) << ',' << fmt_double(r.cum_captured) << ','
      << fmt_double(r.decile / 10.0) << '\n';
  if (!f) throw Error("write failed for '" + out.string() + "'");
}

nlohmann::json to_json(std::span<const DecileRow> deciles) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : deciles)
    rows.push_back({{"decile", r.decile},
                    {"n", r.n},
                    {"responders", r.responders},
                    {"response_rate", r.response_rate},
                    {"lift", r.lift},
                    {"captured", r.captured},
                    {"cum_captured", r.cum_captured}});
  return rows;
}

nlohmann::json to_json(const ConfusionMatrix& cm, const Metrics& m, double threshold) {
  auto opt = [](const std::optional<double>& v) -> nlohmann::json { return v ? nlohmann::json(*v) : nullptr; };
  return {{"threshold", threshold},
          {"tp", cm.tp},
          {"fp", cm.fp},
          {"tn", cm.tn},
          {"fn", cm.fn},
          {"accuracy", opt(m.accuracy)},
          {"sensitivity", opt(m.sensitivity)},
          {"specificity", opt(m.specificity)}};
}

void write_scores(const ScoreSet& scores, const std::filesystem::path& out) {
  const auto dec = assign_deciles(scores);
  const bool known = !scores.records.empty() &&
                     std::all_of(scores.records.begin(), scores.records.end(), [](const auto& r) { return r.y >= 0; });
  auto f = open_out(out);
  f << "id,probability,decile" << (known ? ",actual" : "") << '\n';
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& r = scores.records[i];
    f << r.id << ',' << fmt_double(r.p) << ',' << dec[i];
    if (known) f << ',' << r.y;
    f << '\n';
  }
  if (!f) throw Error("write failed for '" + out.string() + "'");
}

}  // namespace scorecard
