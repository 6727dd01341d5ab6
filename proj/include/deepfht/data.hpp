#pragma once

// Survival records, CSV ingestion, preprocessing and censoring-preserving
// splits.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "deepfht/matrix.hpp"

namespace deepfht::data {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One subject: encoded covariates, event indicator and observed time.
struct SurvivalRecord {
  std::vector<double> x;
  bool event = false;
  double time = 1.0;
};

void validate(const SurvivalRecord& r);
Matrix feature_matrix(std::span<const SurvivalRecord> records);
std::vector<SurvivalRecord> subset(std::span<const SurvivalRecord> records,
                                   std::span<const std::size_t> indices);
double censoring_ratio(std::span<const SurvivalRecord> records);

// --- CSV ---

struct CsvSchema {
  std::string time_column = "time";
  std::string event_column = "event";
  /// Feature columns to read; empty means every other column.
  std::vector<std::string> feature_columns;
  /// Columns forced to categorical. Others are categorical only when some
  /// non-missing cell fails to parse as a number.
  std::vector<std::string> categorical_columns;
};

/// Feature column as read from disk; missing cells are nullopt.
struct RawColumn {
  std::string name;
  std::vector<std::optional<std::string>> cells;
  bool forced_categorical = false;
};

struct RawTable {
  std::vector<double> time;
  std::vector<bool> event;
  std::vector<RawColumn> features;

  std::size_t rows() const { return time.size(); }
  const RawColumn* find(std::string_view name) const;
  RawTable select_rows(std::span<const std::size_t> rows) const;
};

RawTable parse_csv(std::istream& in, const CsvSchema& schema, const std::string& source = "<stream>");
RawTable load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});

/// Writes `time,event,<feature_names...>` with round-trip precision.
void write_csv(const std::filesystem::path& path, std::span<const SurvivalRecord> records,
               std::span<const std::string> feature_names);
void write_csv(std::ostream& out, std::span<const SurvivalRecord> records,
               std::span<const std::string> feature_names);

/// Splits one CSV line set into fields. Handles quoting, doubled quotes and
/// quoted newlines. Returns false at end of input.
bool read_csv_row(std::istream& in, std::vector<std::string>& fields, bool& quoted_any);

// --- Preprocessing ---

enum class ColumnType { Numeric, Categorical };
enum class ImputeRule { Mean, Median, Mode };

struct ColumnRecipe {
  std::string name;
  ColumnType type = ColumnType::Numeric;
  ImputeRule rule = ImputeRule::Mean;
  double fill_value = 0.0;        // numeric columns
  std::string fill_category;      // categorical columns
  std::vector<std::string> categories;  // sorted; one output column each
};

/// Output column after encoding: the source column plus the category it
/// indicates (empty for numeric columns), with train-set scaling.
struct OutputColumn {
  std::size_t source = 0;
  std::string category;
  std::string name;
  double mean = 0.0;
  double scale = 1.0;
};

struct PreprocessRecipe {
  std::vector<ColumnRecipe> columns;
  std::vector<OutputColumn> outputs;
  std::vector<std::string> warnings;

  std::size_t output_dim() const { return outputs.size(); }
  std::vector<std::string> output_names() const;
};

double sample_skewness(std::span<const double> values);

PreprocessRecipe fit_preprocess(const RawTable& train);
/// Imputed and one-hot encoded values before scaling. A category unseen at
/// fit time encodes as an all-zero block.
Matrix encode(const PreprocessRecipe& recipe, const RawTable& table);
Matrix apply_preprocess(const PreprocessRecipe& recipe, const RawTable& table);
std::vector<SurvivalRecord> to_records(const PreprocessRecipe& recipe, const RawTable& table);

/// Raw table whose cells are the numeric values of already-encoded records.
RawTable to_raw_table(std::span<const SurvivalRecord> records,
                      std::span<const std::string> feature_names);

// --- Splits ---

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Holds out round(test_frac * n_stratum) subjects of each event stratum.
Split stratified_split(std::span<const SurvivalRecord> records, double test_frac, std::uint64_t seed);

/// k folds whose validation parts partition the input; each stratum is
/// dealt round-robin so every fold keeps the global censoring ratio.
std::vector<Split> cv_folds(std::span<const SurvivalRecord> records, std::size_t k, std::uint64_t seed);

}  // namespace deepfht::data
