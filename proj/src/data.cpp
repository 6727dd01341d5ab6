#include "deepfht/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace deepfht::data {
namespace {

bool is_missing_token(std::string_view s) {
  return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "NULL" || s == "null";
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string csv_escape(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string location(const std::string& source, std::size_t row, std::string_view column) {
  return source + ": row " + std::to_string(row) + ", column '" + std::string(column) + "'";
}

bool column_is_numeric(const RawColumn& col) {
  if (col.forced_categorical) return false;
  return std::all_of(col.cells.begin(), col.cells.end(), [](const auto& cell) {
    return !cell || parse_double(*cell).has_value();
  });
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

void validate(const SurvivalRecord& r) {
  if (!std::isfinite(r.time) || r.time <= 0.0) {
    throw DataError("survival time must be finite and > 0");
  }
  for (double v : r.x) {
    if (!std::isfinite(v)) throw DataError("covariates must be finite");
  }
}

Matrix feature_matrix(std::span<const SurvivalRecord> records) {
  const std::size_t m = records.empty() ? 0 : records.front().x.size();
  Matrix out(records.size(), m);
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].x.size() != m) throw DataError("records have inconsistent feature counts");
    std::copy(records[i].x.begin(), records[i].x.end(), out.row(i).begin());
  }
  return out;
}

std::vector<SurvivalRecord> subset(std::span<const SurvivalRecord> records,
                                   std::span<const std::size_t> indices) {
  std::vector<SurvivalRecord> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(records[i]);
  return out;
}

double censoring_ratio(std::span<const SurvivalRecord> records) {
  if (records.empty()) return 0.0;
  const auto censored = std::count_if(records.begin(), records.end(), [](const auto& r) { return !r.event; });
  return static_cast<double>(censored) / static_cast<double>(records.size());
}

// --- CSV ---

bool read_csv_row(std::istream& in, std::vector<std::string>& fields, bool& quoted_any) {
  fields.clear();
  quoted_any = false;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  char c = 0;
  while (in.get(c)) {
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      in_quotes = true;
      quoted_any = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      fields.push_back(std::move(field));
      return true;
    } else if (c != '\r') {
      field += c;
    }
  }
  if (in_quotes) throw DataError("unterminated quoted field at end of input");
  if (!any) return false;
  fields.push_back(std::move(field));
  return true;
}

const RawColumn* RawTable::find(std::string_view name) const {
  for (const auto& col : features) {
    if (col.name == name) return &col;
  }
  return nullptr;
}

RawTable RawTable::select_rows(std::span<const std::size_t> rows) const {
  RawTable out;
  out.features.resize(features.size());
  for (std::size_t c = 0; c < features.size(); ++c) {
    out.features[c].name = features[c].name;
    out.features[c].forced_categorical = features[c].forced_categorical;
  }
  for (std::size_t r : rows) {
    out.time.push_back(time.at(r));
    out.event.push_back(event.at(r));
    for (std::size_t c = 0; c < features.size(); ++c) out.features[c].cells.push_back(features[c].cells.at(r));
  }
  return out;
}

RawTable parse_csv(std::istream& in, const CsvSchema& schema, const std::string& source) {
  std::vector<std::string> header;
  bool quoted = false;
  if (!read_csv_row(in, header, quoted)) throw DataError(source + ": empty file (no header row)");
  for (auto& h : header) h = std::string(trim(h));

  auto column_index = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError(source + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t time_col = column_index(schema.time_column);
  const std::size_t event_col = column_index(schema.event_column);

  std::vector<std::size_t> feature_cols;
  if (schema.feature_columns.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c != time_col && c != event_col) feature_cols.push_back(c);
    }
  } else {
    for (const auto& name : schema.feature_columns) feature_cols.push_back(column_index(name));
  }
  for (const auto& name : schema.categorical_columns) column_index(name);

  RawTable table;
  for (std::size_t c : feature_cols) {
    RawColumn col;
    col.name = header[c];
    col.forced_categorical = std::find(schema.categorical_columns.begin(), schema.categorical_columns.end(),
                                       col.name) != schema.categorical_columns.end();
    table.features.push_back(std::move(col));
  }

  std::vector<std::string> fields;
  std::size_t row = 1;  // header is row 1
  while (read_csv_row(in, fields, quoted)) {
    ++row;
    if (fields.size() == 1 && trim(fields[0]).empty() && !quoted) continue;  // blank line
    if (fields.size() != header.size()) {
      throw DataError(source + ": row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                      " fields, header has " + std::to_string(header.size()));
    }
    const auto time = parse_double(fields[time_col]);
    if (!time || !std::isfinite(*time) || *time <= 0.0) {
      throw DataError(location(source, row, schema.time_column) + ": time must be a number > 0, got '" +
                      fields[time_col] + "'");
    }
    const auto event = parse_double(fields[event_col]);
    if (!event || (*event != 0.0 && *event != 1.0)) {
      throw DataError(location(source, row, schema.event_column) + ": event must be 0 or 1, got '" +
                      fields[event_col] + "'");
    }
    table.time.push_back(*time);
    table.event.push_back(*event == 1.0);
    for (std::size_t k = 0; k < feature_cols.size(); ++k) {
      const std::string_view cell = trim(fields[feature_cols[k]]);
      if (is_missing_token(cell)) {
        table.features[k].cells.emplace_back(std::nullopt);
      } else {
        table.features[k].cells.emplace_back(std::string(cell));
      }
    }
  }
  return table;
}

RawTable load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return parse_csv(in, schema, path.string());
}

void write_csv(std::ostream& out, std::span<const SurvivalRecord> records,
               std::span<const std::string> feature_names) {
  out << "time,event";
  for (const auto& name : feature_names) out << ',' << csv_escape(name);
  out << '\n';
  for (const auto& r : records) {
    if (r.x.size() != feature_names.size()) throw DataError("feature name count does not match records");
    out << format_double(r.time) << ',' << (r.event ? 1 : 0);
    for (double v : r.x) out << ',' << format_double(v);
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, std::span<const SurvivalRecord> records,
               std::span<const std::string> feature_names) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  write_csv(out, records, feature_names);
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

// --- Preprocessing ---

std::vector<std::string> PreprocessRecipe::output_names() const {
  std::vector<std::string> names;
  names.reserve(outputs.size());
  for (const auto& o : outputs) names.push_back(o.name);
  return names;
}

double sample_skewness(std::span<const double> values) {
  const double n = static_cast<double>(values.size());
  if (values.size() < 3) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double m2 = 0.0;
  double m3 = 0.0;
  for (double v : values) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;
  if (m2 <= 0.0) return 0.0;
  return m3 / std::pow(m2, 1.5);
}

PreprocessRecipe fit_preprocess(const RawTable& train) {
  if (train.rows() == 0) throw DataError("cannot fit preprocessing on an empty table");
  PreprocessRecipe recipe;

  for (const auto& col : train.features) {
    ColumnRecipe cr;
    cr.name = col.name;
    if (column_is_numeric(col)) {
      cr.type = ColumnType::Numeric;
      std::vector<double> observed;
      for (const auto& cell : col.cells) {
        if (cell) observed.push_back(*parse_double(*cell));
      }
      if (observed.empty()) {
        recipe.warnings.push_back("column '" + col.name + "' has no observed values; dropped");
        continue;
      }
      if (std::abs(sample_skewness(observed)) <= 1.0) {
        cr.rule = ImputeRule::Mean;
        cr.fill_value = std::accumulate(observed.begin(), observed.end(), 0.0) / static_cast<double>(observed.size());
      } else {
        cr.rule = ImputeRule::Median;
        cr.fill_value = median_of(std::move(observed));
      }
    } else {
      cr.type = ColumnType::Categorical;
      cr.rule = ImputeRule::Mode;
      std::map<std::string, std::size_t> counts;
      for (const auto& cell : col.cells) {
        if (cell) ++counts[*cell];
      }
      if (counts.empty()) {
        recipe.warnings.push_back("column '" + col.name + "' has no observed values; dropped");
        continue;
      }
      std::size_t best = 0;
      for (const auto& [category, count] : counts) {
        cr.categories.push_back(category);
        if (count > best) {  // map order breaks ties towards the smallest label
          best = count;
          cr.fill_category = category;
        }
      }
    }
    recipe.columns.push_back(std::move(cr));
  }

  for (std::size_t c = 0; c < recipe.columns.size(); ++c) {
    const auto& cr = recipe.columns[c];
    if (cr.type == ColumnType::Numeric) {
      recipe.outputs.push_back({c, "", cr.name, 0.0, 1.0});
    } else {
      for (const auto& category : cr.categories) {
        recipe.outputs.push_back({c, category, cr.name + "=" + category, 0.0, 1.0});
      }
    }
  }

  const Matrix encoded = encode(recipe, train);
  const double n = static_cast<double>(encoded.rows());
  std::vector<OutputColumn> kept;
  for (std::size_t j = 0; j < recipe.outputs.size(); ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < encoded.rows(); ++i) mean += encoded(i, j);
    mean /= n;
    double var = 0.0;
    for (std::size_t i = 0; i < encoded.rows(); ++i) var += (encoded(i, j) - mean) * (encoded(i, j) - mean);
    const double sd = std::sqrt(var / n);
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
      recipe.warnings.push_back("column '" + recipe.outputs[j].name + "' is constant on the training data; dropped");
      continue;
    }
    OutputColumn out = recipe.outputs[j];
    out.mean = mean;
    out.scale = sd;
    kept.push_back(std::move(out));
  }
  recipe.outputs = std::move(kept);
  return recipe;
}

Matrix encode(const PreprocessRecipe& recipe, const RawTable& table) {
  std::vector<const RawColumn*> sources;
  for (const auto& cr : recipe.columns) {
    const RawColumn* col = table.find(cr.name);
    if (!col) throw DataError("input is missing column '" + cr.name + "' required by the preprocessing recipe");
    sources.push_back(col);
  }

  Matrix out(table.rows(), recipe.outputs.size());
  for (std::size_t j = 0; j < recipe.outputs.size(); ++j) {
    const auto& oc = recipe.outputs[j];
    const auto& cr = recipe.columns[oc.source];
    const RawColumn& col = *sources[oc.source];
    for (std::size_t i = 0; i < table.rows(); ++i) {
      const auto& cell = col.cells[i];
      if (cr.type == ColumnType::Numeric) {
        double v = cr.fill_value;
        if (cell) {
          const auto parsed = parse_double(*cell);
          if (!parsed || !std::isfinite(*parsed)) {
            throw DataError("row " + std::to_string(i + 2) + ", column '" + cr.name +
                            "': expected a number, got '" + *cell + "'");
          }
          v = *parsed;
        }
        out(i, j) = v;
      } else {
        const std::string& value = cell ? *cell : cr.fill_category;
        out(i, j) = value == oc.category ? 1.0 : 0.0;
      }
    }
  }
  return out;
}

Matrix apply_preprocess(const PreprocessRecipe& recipe, const RawTable& table) {
  Matrix out = encode(recipe, table);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (std::size_t j = 0; j < out.cols(); ++j) {
      out(i, j) = (out(i, j) - recipe.outputs[j].mean) / recipe.outputs[j].scale;
    }
  }
  return out;
}

std::vector<SurvivalRecord> to_records(const PreprocessRecipe& recipe, const RawTable& table) {
  const Matrix x = apply_preprocess(recipe, table);
  std::vector<SurvivalRecord> out(table.rows());
  for (std::size_t i = 0; i < table.rows(); ++i) {
    out[i].x.assign(x.row(i).begin(), x.row(i).end());
    out[i].event = table.event[i];
    out[i].time = table.time[i];
  }
  return out;
}

RawTable to_raw_table(std::span<const SurvivalRecord> records, std::span<const std::string> feature_names) {
  RawTable table;
  for (const auto& name : feature_names) table.features.push_back({name, {}, false});
  for (const auto& r : records) {
    if (r.x.size() != feature_names.size()) throw DataError("feature name count does not match records");
    table.time.push_back(r.time);
    table.event.push_back(r.event);
    for (std::size_t c = 0; c < r.x.size(); ++c) table.features[c].cells.emplace_back(format_double(r.x[c]));
  }
  return table;
}

// --- Splits ---

namespace {

struct Strata {
  std::vector<std::size_t> events;
  std::vector<std::size_t> censored;
};

Strata shuffled_strata(std::span<const SurvivalRecord> records, std::uint64_t seed) {
  Strata s;
  for (std::size_t i = 0; i < records.size(); ++i) (records[i].event ? s.events : s.censored).push_back(i);
  std::mt19937_64 rng(seed);
  std::shuffle(s.events.begin(), s.events.end(), rng);
  std::shuffle(s.censored.begin(), s.censored.end(), rng);
  return s;
}

}  // namespace

Split stratified_split(std::span<const SurvivalRecord> records, double test_frac, std::uint64_t seed) {
  if (!(test_frac > 0.0 && test_frac < 1.0)) throw DataError("test fraction must lie in (0, 1)");
  const Strata strata = shuffled_strata(records, seed);
  Split split;
  for (const auto* group : {&strata.events, &strata.censored}) {
    const auto n_test = static_cast<std::size_t>(std::llround(test_frac * static_cast<double>(group->size())));
    split.test.insert(split.test.end(), group->begin(), group->begin() + static_cast<std::ptrdiff_t>(n_test));
    split.train.insert(split.train.end(), group->begin() + static_cast<std::ptrdiff_t>(n_test), group->end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

std::vector<Split> cv_folds(std::span<const SurvivalRecord> records, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw DataError("cross-validation needs at least 2 folds");
  if (records.size() < k) throw DataError("fewer records than folds");
  const Strata strata = shuffled_strata(records, seed);
  std::vector<std::size_t> fold_of(records.size());
  std::size_t slot = 0;
  for (std::size_t i : strata.events) fold_of[i] = slot++ % k;
  for (std::size_t i : strata.censored) fold_of[i] = slot++ % k;

  std::vector<Split> folds(k);
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (std::size_t f = 0; f < k; ++f) (fold_of[i] == f ? folds[f].test : folds[f].train).push_back(i);
  }
  return folds;
}

}  // namespace deepfht::data
