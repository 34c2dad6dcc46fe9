#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "geodemo/matrix.hpp"
#include "geodemo/variables.hpp"

namespace geodemo {

struct DistrictCode {
  std::string code;  // GSS code, e.g. "E08000035"
  std::string name;

  bool operator==(const DistrictCode&) const = default;
};

enum class MeasureKind { Count, Percent };

/// One measure column of the survey table.
struct MeasureSpec {
  VariableMeta meta;
  std::string column;       // CSV header name; defaults to meta.name
  MeasureKind kind = MeasureKind::Count;
  std::string group;        // measure group sharing a total; empty for none
  std::string denominator;  // CSV column the count is divided by (Count only)
  bool feature = true;      // false: kept for reconstruction only
};

struct GroupSpec {
  std::string name;
  std::string total_column;
};

struct TableSchema {
  std::vector<MeasureSpec> measures;
  std::vector<GroupSpec> groups;
  std::string code_column;  // empty: first CSV column
  std::string name_column;  // empty: second CSV column
  std::string sentinel = "!";
  /// Count cells strictly below this are treated as suppressed; 0 disables.
  double suppression_threshold = 500.0;
  std::vector<std::string> region_prefixes = {"E06", "E07", "E08", "E09", "W06", "S12"};

  const GroupSpec* find_group(const std::string& name) const;
  std::vector<VariableMeta> feature_variables() const;
};

/// Reads the INI schema. Measures keep the order of their [measure.*]
/// sections. Throws ConfigError on unknown keys or dangling group names.
TableSchema load_schema(const std::filesystem::path& path);
TableSchema parse_schema(const std::string& text);

struct CellValue {
  std::optional<double> value;
  bool suppressed = false;
  bool reconstructed = false;
  bool clamped = false;  // reconstruction residual was negative and set to 0
};

/// District x measure cells, plus the auxiliary columns (group totals and
/// denominators) that the schema references.
struct RawTable {
  TableSchema schema;
  std::vector<DistrictCode> districts;
  std::vector<std::vector<CellValue>> cells;  // [district][measure]
  std::vector<std::string> auxiliary_columns;
  std::vector<std::vector<double>> auxiliary;  // [column][district]

  std::size_t district_count() const { return districts.size(); }
  std::size_t measure_count() const { return schema.measures.size(); }
  const std::vector<double>& auxiliary_column(const std::string& name) const;
  std::size_t suppressed_count() const;
  std::size_t reconstructed_count() const;
  std::size_t clamped_count() const;
};

/// Percentage rates, districts x measures (all schema measures, features or
/// not). `is_feature` mirrors the schema flag per column.
struct RateTable {
  std::vector<DistrictCode> districts;
  std::vector<VariableMeta> variables;
  std::vector<bool> is_feature;
  Matrix values;

  /// Copy restricted to columns flagged as features.
  RateTable features_only() const;
  /// Copy restricted to the named columns, in the given order.
  RateTable select(const std::vector<std::string>& names) const;
  std::optional<std::size_t> index_of(const std::string& name) const;
};

/// Parses the district CSV against `schema`.
/// Errors: MissingColumn, DuplicateDistrict, EmptyTable, InvalidDistrictCode,
/// BadValue, MissingValue, TotalsInconsistent (known cells exceed the group
/// total by more than 0.5).
RawTable load_district_table(const std::filesystem::path& path, const TableSchema& schema);
RawTable parse_district_table(const std::string& csv_text, const TableSchema& schema);

/// Fills suppressed cells from their group totals: a single gap gets
/// total - sum(known); m gaps share the residual equally. Negative
/// residuals are clamped to 0 and flagged. Throws DataError{NoGroupTotal}.
RawTable reconstruct_suppressed(const RawTable& table);

/// 100 * count / denominator for Count measures; Percent measures pass
/// through. Errors: ZeroDenominator, RateOutOfRange, UnresolvedSuppression.
RateTable to_percentages(const RawTable& table);

/// CSV listing every suppressed cell and what became of it.
std::string ingestion_report_csv(const RawTable& table);

}  // namespace geodemo
