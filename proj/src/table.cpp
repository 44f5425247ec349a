#include "scorecard/table.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "scorecard/error.hpp"
#include "scorecard/rng.hpp"

namespace scorecard {

namespace {

constexpr double kFloorSlack = 1e-9;

std::string quote_csv(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

// Minimal RFC 4180 reader: quoted fields, doubled quotes, CRLF tolerant.
class CsvReader {
 public:
  explicit CsvReader(std::string text) : text_(std::move(text)) {}

  // Reads the next record into `fields`; false at end of input.
  bool next(std::vector<std::string>& fields) {
    fields.clear();
    if (pos_ >= text_.size()) return false;
    ++line_;
    std::string field;
    bool quoted = false;
    while (pos_ < text_.size()) {
      const char c = text_[pos_++];
      if (quoted) {
        if (c == '"') {
          if (pos_ < text_.size() && text_[pos_] == '"') {
            field += '"';
            ++pos_;
          } else {
            quoted = false;
          }
        } else {
          if (c == '\n') ++line_;
          field += c;
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        fields.push_back(std::move(field));
        field.clear();
      } else if (c == '\n') {
        break;
      } else if (c != '\r') {
        field += c;
      }
    }
    fields.push_back(std::move(field));
    return true;
  }

  std::size_t line() const { return line_; }

 private:
  std::string text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 0;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

[[noreturn]] void bad_cell(std::size_t line, std::string_view column, std::string_view token,
                           std::string_view why) {
  throw ConfigError("line " + std::to_string(line) + ", column '" + std::string(column) +
                    "': " + std::string(why) + " (token '" + std::string(token) + "')");
}

bool parse_double(std::string_view token, double& out) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

bool parse_int(std::string_view token, long long& out) {
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size();
}

double parse_cell(const ColumnSpec& spec, std::string_view token, std::size_t line) {
  if (token.empty() || token == "NA") return kMissing;
  switch (spec.kind) {
    case ColumnKind::kBinary: {
      if (token == "0") return 0.0;
      if (token == "1") return 1.0;
      bad_cell(line, spec.name, token, "binary value must be 0 or 1");
    }
    case ColumnKind::kLikelihood: {
      long long v = 0;
      if (!parse_int(token, v)) bad_cell(line, spec.name, token, "not an integer level");
      if (v < kLikelihoodMin || v > kLikelihoodMax)
        bad_cell(line, spec.name, token, "likelihood level outside [1, 99]");
      return static_cast<double>(v);
    }
    case ColumnKind::kContinuous: {
      double v = 0.0;
      if (!parse_double(token, v)) bad_cell(line, spec.name, token, "not a finite number");
      return v;
    }
    case ColumnKind::kCategorical: {
      const auto it = std::find(spec.levels.begin(), spec.levels.end(), token);
      if (it == spec.levels.end()) bad_cell(line, spec.name, token, "undeclared level");
      return static_cast<double>(it - spec.levels.begin());
    }
  }
  return kMissing;
}

std::string format_cell(const ColumnSpec& spec, double v) {
  if (is_missing(v)) return "";
  switch (spec.kind) {
    case ColumnKind::kBinary:
    case ColumnKind::kLikelihood:
      return std::to_string(static_cast<long long>(v));
    case ColumnKind::kCategorical:
      return quote_csv(spec.levels.at(static_cast<std::size_t>(v)));
    case ColumnKind::kContinuous: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      return buf;
    }
  }
  return "";
}

}  // namespace

std::string_view to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::kBinary:
      return "binary";
    case ColumnKind::kCategorical:
      return "categorical";
    case ColumnKind::kLikelihood:
      return "likelihood";
    case ColumnKind::kContinuous:
      return "continuous";
  }
  return "?";
}

ColumnKind parse_column_kind(std::string_view text) {
  if (text == "binary") return ColumnKind::kBinary;
  if (text == "categorical") return ColumnKind::kCategorical;
  if (text == "likelihood") return ColumnKind::kLikelihood;
  if (text == "continuous") return ColumnKind::kContinuous;
  throw ConfigError("unknown column kind '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// Schema

void Schema::validate() const {
  std::set<std::string_view> seen;
  if (!id_column.empty()) seen.insert(id_column);
  for (const auto& c : columns) {
    if (c.name.empty()) throw ConfigError("schema: empty column name");
    if (!seen.insert(c.name).second) throw ConfigError("schema: duplicate column '" + c.name + "'");
    if (c.kind == ColumnKind::kCategorical) {
      if (c.levels.size() < 2)
        throw ConfigError("schema: categorical column '" + c.name + "' needs at least 2 levels");
      std::set<std::string_view> lv(c.levels.begin(), c.levels.end());
      if (lv.size() != c.levels.size())
        throw ConfigError("schema: duplicate level in column '" + c.name + "'");
    } else if (!c.levels.empty()) {
      throw ConfigError("schema: levels declared on non-categorical column '" + c.name + "'");
    }
  }
  if (!target.empty()) {
    const auto idx = find(target);
    if (!idx) throw ConfigError("schema: target '" + target + "' is not a column");
    if (columns[*idx].kind != ColumnKind::kBinary)
      throw ConfigError("schema: target '" + target + "' must be binary");
  }
}

std::optional<std::size_t> Schema::find(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i].name == name) return i;
  return std::nullopt;
}

std::size_t Schema::index_of(std::string_view name) const {
  const auto idx = find(name);
  if (!idx) throw ConfigError("no column named '" + std::string(name) + "'");
  return *idx;
}

const ColumnSpec& Schema::spec(std::string_view name) const { return columns[index_of(name)]; }

std::vector<std::string> Schema::predictor_names() const {
  std::vector<std::string> out;
  for (const auto& c : columns)
    if (c.name != target) out.push_back(c.name);
  return out;
}

nlohmann::json schema_to_json(const Schema& schema) {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : schema.columns) {
    nlohmann::json jc = {{"name", c.name}, {"kind", std::string(to_string(c.kind))}};
    if (c.kind == ColumnKind::kCategorical) jc["levels"] = c.levels;
    cols.push_back(std::move(jc));
  }
  nlohmann::json j = {{"target", schema.target}, {"columns", std::move(cols)}};
  if (!schema.id_column.empty()) j["id_column"] = schema.id_column;
  return j;
}

Schema schema_from_json(const nlohmann::json& j) {
  Schema s;
  try {
    s.target = j.value("target", std::string{});
    s.id_column = j.value("id_column", std::string{});
    for (const auto& jc : j.at("columns")) {
      ColumnSpec c;
      c.name = jc.at("name").get<std::string>();
      c.kind = parse_column_kind(jc.at("kind").get<std::string>());
      if (jc.contains("levels")) c.levels = jc.at("levels").get<std::vector<std::string>>();
      s.columns.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("schema: ") + e.what());
  }
  s.validate();
  return s;
}

Schema load_schema(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("schema " + path.string() + ": " + e.what());
  }
  return schema_from_json(j);
}

void save_schema(const Schema& schema, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << schema_to_json(schema).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// DataTable

DataTable::DataTable(Schema schema, std::vector<std::uint64_t> ids,
                     std::vector<std::vector<double>> columns)
    : schema_(std::move(schema)), ids_(std::move(ids)), columns_(std::move(columns)) {
  validate();
}

void DataTable::validate() const {
  schema_.validate();
  if (columns_.size() != schema_.columns.size())
    throw ConfigError("table: column count does not match schema");
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    const auto& spec = schema_.columns[c];
    const auto& col = columns_[c];
    if (col.size() != ids_.size())
      throw ConfigError("table: column '" + spec.name + "' has wrong length");
    for (double v : col) {
      if (is_missing(v)) {
        if (spec.name == schema_.target)
          throw ConfigError("table: target column '" + spec.name + "' has missing values");
        continue;
      }
      bool ok = true;
      switch (spec.kind) {
        case ColumnKind::kBinary:
          ok = v == 0.0 || v == 1.0;
          break;
        case ColumnKind::kLikelihood:
          ok = v == std::floor(v) && v >= kLikelihoodMin && v <= kLikelihoodMax;
          break;
        case ColumnKind::kCategorical:
          ok = v == std::floor(v) && v >= 0.0 && v < static_cast<double>(spec.levels.size());
          break;
        case ColumnKind::kContinuous:
          ok = std::isfinite(v);
          break;
      }
      if (!ok) throw ConfigError("table: column '" + spec.name + "' holds an out-of-domain value");
    }
  }
}

std::span<const double> DataTable::values(std::string_view name) const {
  return columns_[schema_.index_of(name)];
}

std::span<const double> DataTable::target() const {
  if (schema_.target.empty()) throw ConfigError("table has no target column");
  return values(schema_.target);
}

std::size_t DataTable::count_target(int label) const {
  const auto y = target();
  return static_cast<std::size_t>(std::count(y.begin(), y.end(), static_cast<double>(label)));
}

void DataTable::require_both_classes() const {
  if (count_target(0) == 0 || count_target(1) == 0)
    throw Error("target '" + schema_.target + "' is constant; both classes are required");
}

DataTable DataTable::select_rows(std::span<const std::size_t> rows) const {
  std::vector<std::uint64_t> ids;
  ids.reserve(rows.size());
  for (auto r : rows) ids.push_back(ids_.at(r));
  std::vector<std::vector<double>> cols(columns_.size());
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    cols[c].reserve(rows.size());
    for (auto r : rows) cols[c].push_back(columns_[c][r]);
  }
  return DataTable(schema_, std::move(ids), std::move(cols));
}

DataTable DataTable::with_column(std::string_view name, std::vector<double> values,
                                 std::optional<ColumnSpec> spec) const {
  const auto idx = schema_.index_of(name);
  Schema schema = schema_;
  if (spec) {
    if (spec->name != name && schema.target == name) schema.target = spec->name;
    schema.columns[idx] = std::move(*spec);
  }
  auto cols = columns_;
  cols[idx] = std::move(values);
  return DataTable(std::move(schema), ids_, std::move(cols));
}

bool DataTable::identical(const DataTable& other) const {
  if (!(schema_ == other.schema_) || ids_ != other.ids_) return false;
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    const auto& a = columns_[c];
    const auto& b = other.columns_[c];
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (is_missing(a[i]) != is_missing(b[i])) return false;
      if (!is_missing(a[i]) && a[i] != b[i]) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// CSV

DataTable load_table(const std::filesystem::path& csv_path, const Schema& schema, HeaderMode mode) {
  schema.validate();
  CsvReader reader(read_file(csv_path));
  std::vector<std::string> fields;
  if (!reader.next(fields)) throw ConfigError(csv_path.string() + ": empty file");

  std::vector<std::string> expected;
  if (!schema.id_column.empty()) expected.push_back(schema.id_column);
  for (const auto& c : schema.columns) expected.push_back(c.name);

  // position[k] = field index holding expected[k]
  std::vector<std::size_t> position(expected.size());
  if (mode == HeaderMode::kExact) {
    if (fields != expected) {
      std::string msg = csv_path.string() + ": header does not match schema";
      for (std::size_t k = 0; k < std::max(fields.size(), expected.size()); ++k) {
        const std::string got = k < fields.size() ? fields[k] : "<none>";
        const std::string want = k < expected.size() ? expected[k] : "<none>";
        if (got != want) {
          msg += " (position " + std::to_string(k + 1) + ": expected '" + want + "', found '" + got + "')";
          break;
        }
      }
      throw ConfigError(msg);
    }
    for (std::size_t k = 0; k < expected.size(); ++k) position[k] = k;
  } else {
    std::unordered_map<std::string, std::size_t> where;
    for (std::size_t f = 0; f < fields.size(); ++f) where.emplace(fields[f], f);
    for (std::size_t k = 0; k < expected.size(); ++k) {
      const auto it = where.find(expected[k]);
      if (it == where.end())
        throw ConfigError(csv_path.string() + ": missing required column '" + expected[k] + "'");
      position[k] = it->second;
    }
  }
  const std::size_t width = fields.size();
  const std::size_t offset = schema.id_column.empty() ? 0 : 1;

  std::vector<std::uint64_t> ids;
  std::vector<std::vector<double>> cols(schema.columns.size());
  std::set<std::uint64_t> seen_ids;
  while (reader.next(fields)) {
    if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
    if (fields.size() != width)
      throw ConfigError("line " + std::to_string(reader.line()) + ": expected " + std::to_string(width) +
                        " fields, found " + std::to_string(fields.size()));
    if (offset) {
      long long id = 0;
      const auto& tok = fields[position[0]];
      if (!parse_int(tok, id) || id < 0) bad_cell(reader.line(), schema.id_column, tok, "id must be a non-negative integer");
      if (!seen_ids.insert(static_cast<std::uint64_t>(id)).second)
        bad_cell(reader.line(), schema.id_column, tok, "duplicate id");
      ids.push_back(static_cast<std::uint64_t>(id));
    } else {
      ids.push_back(ids.size());
    }
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
      const auto& spec = schema.columns[c];
      const double v = parse_cell(spec, fields[position[c + offset]], reader.line());
      if (is_missing(v) && spec.name == schema.target)
        bad_cell(reader.line(), spec.name, fields[position[c + offset]], "target may not be missing");
      cols[c].push_back(v);
    }
  }
  return DataTable(schema, std::move(ids), std::move(cols));
}

void write_csv(const DataTable& table, const std::filesystem::path& csv_path) {
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw Error("cannot write " + csv_path.string());
  const auto& schema = table.schema();
  const bool with_id = !schema.id_column.empty();
  std::string line;
  if (with_id) line = quote_csv(schema.id_column);
  for (std::size_t c = 0; c < schema.columns.size(); ++c) {
    if (with_id || c > 0) line += ',';
    line += quote_csv(schema.columns[c].name);
  }
  out << line << '\n';
  const auto ids = table.ids();
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    line.clear();
    if (with_id) line = std::to_string(ids[r]);
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
      if (with_id || c > 0) line += ',';
      line += format_cell(schema.columns[c], table.values(c)[r]);
    }
    out << line << '\n';
  }
  if (!out) throw Error("write failed: " + csv_path.string());
}

// ---------------------------------------------------------------------------
// Imputation

double column_median(const DataTable& table, std::string_view column) {
  const auto& spec = table.spec(column);
  if (spec.kind != ColumnKind::kContinuous && spec.kind != ColumnKind::kLikelihood)
    throw Error("median imputation applies to continuous or likelihood columns, not '" +
                std::string(column) + "' (" + std::string(to_string(spec.kind)) + ")");
  std::vector<double> v;
  for (double x : table.values(column))
    if (!is_missing(x)) v.push_back(x);
  if (v.empty()) throw Error("column '" + std::string(column) + "' has no non-missing values");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  double m = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  if (spec.kind == ColumnKind::kLikelihood)
    m = std::clamp(std::floor(m + 0.5), double(kLikelihoodMin), double(kLikelihoodMax));
  return m;
}

DataTable impute_median(const DataTable& table, std::string_view column) {
  const double m = column_median(table, column);
  const auto src = table.values(column);
  if (std::none_of(src.begin(), src.end(), is_missing)) return table;
  std::vector<double> out(src.begin(), src.end());
  for (double& x : out)
    if (is_missing(x)) x = m;
  return table.with_column(column, std::move(out));
}

// ---------------------------------------------------------------------------
// Splitting and sampling

SplitResult split_train_validation(const DataTable& table, double frac, std::uint64_t seed) {
  if (!(frac > 0.0 && frac < 1.0)) throw ConfigError("split fraction must lie in (0, 1)");
  const auto y = table.target();
  const std::size_t n = table.n_rows();

  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < n; ++i) by_class[y[i] == 1.0 ? 1 : 0].push_back(i);
  if (n < 2) throw Error("split: need at least 2 records");
  for (int c = 0; c < 2; ++c)
    if (by_class[c].empty()) throw Error("split: target class " + std::to_string(c) + " has no records");

  const auto n_train = static_cast<std::size_t>(std::floor(frac * static_cast<double>(n) + 0.5));
  std::size_t take[2];
  double remainder[2];
  for (int c = 0; c < 2; ++c) {
    const double exact = frac * static_cast<double>(by_class[c].size());
    take[c] = static_cast<std::size_t>(std::floor(exact + kFloorSlack));
    remainder[c] = exact - static_cast<double>(take[c]);
  }
  std::size_t extra = n_train - (take[0] + take[1]);
  // Larger fractional part first; ties go to the positive class.
  const int first = remainder[1] >= remainder[0] ? 1 : 0;
  for (int k = 0; k < 2 && extra > 0; ++k) {
    const int c = k == 0 ? first : 1 - first;
    if (take[c] < by_class[c].size()) {
      ++take[c];
      --extra;
    }
  }

  Rng rng(seed);
  SplitResult out;
  out.seed = seed;
  for (int c = 0; c < 2; ++c) {
    auto idx = by_class[c];
    rng.shuffle(idx);
    out.train_rows.insert(out.train_rows.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take[c]));
    out.validation_rows.insert(out.validation_rows.end(), idx.begin() + static_cast<std::ptrdiff_t>(take[c]), idx.end());
  }
  std::sort(out.train_rows.begin(), out.train_rows.end());
  std::sort(out.validation_rows.begin(), out.validation_rows.end());
  out.train = table.select_rows(out.train_rows);
  out.validation = table.select_rows(out.validation_rows);
  return out;
}

DataTable stratified_sample(const DataTable& signal_pool, const DataTable& background_pool,
                            std::size_t n_signal, std::size_t n_background, std::uint64_t seed) {
  if (!(signal_pool.schema() == background_pool.schema()))
    throw ConfigError("sample: signal and background pools have different schemas");
  if (n_signal > signal_pool.n_rows())
    throw ConfigError("sample: requested " + std::to_string(n_signal) + " signal records from a pool of " +
                      std::to_string(signal_pool.n_rows()));
  if (n_background > background_pool.n_rows())
    throw ConfigError("sample: requested " + std::to_string(n_background) + " background records from a pool of " +
                      std::to_string(background_pool.n_rows()));
  if (signal_pool.count_target(1) != signal_pool.n_rows())
    throw ConfigError("sample: signal pool contains records with target 0");
  if (background_pool.count_target(0) != background_pool.n_rows())
    throw ConfigError("sample: background pool contains records with target 1");

  Rng rng(seed);
  auto sig = rng.sample_without_replacement(signal_pool.n_rows(), n_signal);
  auto bg = rng.sample_without_replacement(background_pool.n_rows(), n_background);
  std::sort(sig.begin(), sig.end());
  std::sort(bg.begin(), bg.end());

  const auto& schema = signal_pool.schema();
  std::vector<std::vector<double>> cols(schema.columns.size());
  for (std::size_t c = 0; c < cols.size(); ++c) {
    cols[c].reserve(n_signal + n_background);
    for (auto r : sig) cols[c].push_back(signal_pool.values(c)[r]);
    for (auto r : bg) cols[c].push_back(background_pool.values(c)[r]);
  }
  std::vector<std::uint64_t> ids(n_signal + n_background);
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  return DataTable(schema, std::move(ids), std::move(cols));
}

}  // namespace scorecard
