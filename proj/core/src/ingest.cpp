#include "geodemo/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "geodemo/csv.hpp"
#include "geodemo/error.hpp"
#include "geodemo/ini.hpp"

namespace geodemo {

namespace {

constexpr double kTotalsTolerance = 0.5;

bool has_prefix(const std::string& code, const std::vector<std::string>& prefixes) {
  return std::any_of(prefixes.begin(), prefixes.end(),
                     [&](const std::string& p) { return code.rfind(p, 0) == 0; });
}

}  // namespace

const GroupSpec* TableSchema::find_group(const std::string& name) const {
  for (const auto& g : groups) {
    if (g.name == name) return &g;
  }
  return nullptr;
}

std::vector<VariableMeta> TableSchema::feature_variables() const {
  std::vector<VariableMeta> out;
  for (const auto& m : measures) {
    if (m.feature) out.push_back(m.meta);
  }
  return out;
}

TableSchema parse_schema(const std::string& text) {
  const IniTree tree = parse_ini(text, "schema");
  TableSchema schema;
  for (const auto& [section, body] : tree) {
    if (section == "table") {
      for (const auto& [key, node] : body) {
        const std::string value = trim(node.data());
        if (key == "code_column") {
          schema.code_column = value;
        } else if (key == "name_column") {
          schema.name_column = value;
        } else if (key == "sentinel") {
          schema.sentinel = value;
        } else if (key == "suppression_threshold") {
          schema.suppression_threshold = parse_config_number(key, value);
          if (schema.suppression_threshold < 0) {
            throw ConfigError("BadConfig", "suppression_threshold must be >= 0");
          }
        } else if (key == "region_prefixes") {
          schema.region_prefixes = split_list(value);
        } else {
          throw ConfigError("BadConfig", "unknown [table] key '" + key + "'");
        }
      }
    } else if (section.rfind("group.", 0) == 0) {
      GroupSpec group{section.substr(6), {}};
      for (const auto& [key, node] : body) {
        if (key != "total") throw ConfigError("BadConfig", "unknown group key '" + key + "'");
        group.total_column = trim(node.data());
      }
      if (group.total_column.empty()) {
        throw ConfigError("BadConfig", "group '" + group.name + "' has no total column");
      }
      schema.groups.push_back(std::move(group));
    } else if (section.rfind("measure.", 0) == 0) {
      MeasureSpec m;
      m.meta.name = section.substr(8);
      for (const auto& [key, node] : body) {
        const std::string value = trim(node.data());
        if (key == "column") {
          m.column = value;
        } else if (key == "kind") {
          if (value == "count") {
            m.kind = MeasureKind::Count;
          } else if (value == "percent") {
            m.kind = MeasureKind::Percent;
          } else {
            throw ConfigError("BadConfig", "measure kind must be count or percent");
          }
        } else if (key == "group") {
          m.group = value;
        } else if (key == "denominator") {
          m.denominator = value;
        } else if (key == "feature") {
          m.feature = parse_bool(key, value);
        } else if (key == "domain") {
          m.meta.domain = parse_domain(value);
        } else if (key == "dimension") {
          m.meta.dimension = value;
        } else if (key == "polarity") {
          m.meta.polarity = parse_polarity(value);
        } else {
          throw ConfigError("BadConfig", "unknown measure key '" + key + "'");
        }
      }
      if (m.column.empty()) m.column = m.meta.name;
      schema.measures.push_back(std::move(m));
    } else {
      throw ConfigError("BadConfig", "unknown schema section '" + section + "'");
    }
  }

  if (schema.measures.empty()) throw ConfigError("BadConfig", "schema declares no measures");
  std::vector<VariableMeta> metas;
  for (const auto& m : schema.measures) {
    metas.push_back(m.meta);
    if (!m.group.empty() && !schema.find_group(m.group)) {
      throw ConfigError("BadConfig", "measure '" + m.meta.name + "' names unknown group '" +
                                         m.group + "'");
    }
    if (m.kind == MeasureKind::Count && m.denominator.empty()) {
      throw ConfigError("BadConfig", "count measure '" + m.meta.name + "' has no denominator");
    }
  }
  check_unique_names(metas);
  return schema;
}

TableSchema load_schema(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const DataError&) {
    throw ConfigError("FileNotFound", "cannot open schema " + path.string());
  }
  return parse_schema(text);
}

const std::vector<double>& RawTable::auxiliary_column(const std::string& name) const {
  for (std::size_t i = 0; i < auxiliary_columns.size(); ++i) {
    if (auxiliary_columns[i] == name) return auxiliary[i];
  }
  throw DataError("MissingColumn", "auxiliary column '" + name + "' not loaded");
}

namespace {

template <typename Pred>
std::size_t count_cells(const RawTable& t, Pred pred) {
  std::size_t n = 0;
  for (const auto& row : t.cells) {
    n += static_cast<std::size_t>(std::count_if(row.begin(), row.end(), pred));
  }
  return n;
}

}  // namespace

std::size_t RawTable::suppressed_count() const {
  return count_cells(*this, [](const CellValue& c) { return c.suppressed; });
}
std::size_t RawTable::reconstructed_count() const {
  return count_cells(*this, [](const CellValue& c) { return c.reconstructed; });
}
std::size_t RawTable::clamped_count() const {
  return count_cells(*this, [](const CellValue& c) { return c.clamped; });
}

RawTable parse_district_table(const std::string& csv_text, const TableSchema& schema) {
  const CsvDocument doc = parse_csv(csv_text);
  if (doc.header.size() < 2) {
    throw DataError("MissingColumn", "table needs a district code and name column");
  }

  auto require = [&](const std::string& name) {
    auto idx = doc.column(name);
    if (!idx) throw DataError("MissingColumn", "column '" + name + "' not in table header");
    return *idx;
  };
  const std::size_t code_col = schema.code_column.empty() ? 0 : require(schema.code_column);
  const std::size_t name_col = schema.name_column.empty() ? 1 : require(schema.name_column);

  std::vector<std::size_t> measure_cols;
  for (const auto& m : schema.measures) measure_cols.push_back(require(m.column));

  RawTable table;
  table.schema = schema;
  std::vector<std::size_t> aux_cols;
  auto add_aux = [&](const std::string& name) {
    if (std::find(table.auxiliary_columns.begin(), table.auxiliary_columns.end(), name) !=
        table.auxiliary_columns.end()) {
      return;
    }
    aux_cols.push_back(require(name));
    table.auxiliary_columns.push_back(name);
  };
  for (const auto& g : schema.groups) add_aux(g.total_column);
  for (const auto& m : schema.measures) {
    if (m.kind == MeasureKind::Count) add_aux(m.denominator);
  }

  if (doc.rows.empty()) throw DataError("EmptyTable", "table has no data rows");

  table.auxiliary.assign(aux_cols.size(), {});
  std::set<std::string> seen;
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    const auto& row = doc.rows[r];
    const std::string where = "line " + std::to_string(doc.row_lines[r]);
    if (row.size() != doc.header.size()) {
      throw DataError("BadValue", where + ": expected " + std::to_string(doc.header.size()) +
                                      " fields, found " + std::to_string(row.size()));
    }
    DistrictCode district{trim(row[code_col]), trim(row[name_col])};
    if (district.code.empty()) throw DataError("InvalidDistrictCode", where + ": empty code");
    if (!schema.region_prefixes.empty() && !has_prefix(district.code, schema.region_prefixes)) {
      throw DataError("InvalidDistrictCode",
                      where + ": code '" + district.code + "' has no configured region prefix");
    }
    if (!seen.insert(district.code).second) {
      throw DataError("DuplicateDistrict", where + ": district '" + district.code + "' repeated");
    }

    std::vector<CellValue> cells;
    cells.reserve(measure_cols.size());
    for (std::size_t j = 0; j < measure_cols.size(); ++j) {
      const auto& spec = schema.measures[j];
      const std::string raw = trim(row[measure_cols[j]]);
      CellValue cell;
      if (raw == schema.sentinel) {
        cell.suppressed = true;
      } else if (raw.empty()) {
        throw DataError("MissingValue", where + ": no value for '" + spec.column + "'");
      } else {
        auto v = parse_number(raw);
        if (!v || !std::isfinite(*v) || *v < 0) {
          throw DataError("BadValue", where + ": '" + raw + "' in '" + spec.column +
                                          "' is not a non-negative number");
        }
        if (spec.kind == MeasureKind::Count && *v < schema.suppression_threshold) {
          cell.suppressed = true;
        } else {
          cell.value = *v;
        }
      }
      cells.push_back(cell);
    }

    for (std::size_t a = 0; a < aux_cols.size(); ++a) {
      const std::string raw = trim(row[aux_cols[a]]);
      auto v = parse_number(raw);
      if (!v || !std::isfinite(*v) || *v < 0) {
        throw DataError("BadValue", where + ": '" + raw + "' in '" + table.auxiliary_columns[a] +
                                        "' is not a non-negative number");
      }
      table.auxiliary[a].push_back(*v);
    }

    table.districts.push_back(std::move(district));
    table.cells.push_back(std::move(cells));
  }

  // Known cells may not exceed their group total beyond rounding.
  for (const auto& g : schema.groups) {
    const auto& totals = table.auxiliary_column(g.total_column);
    for (std::size_t i = 0; i < table.districts.size(); ++i) {
      double known = 0.0;
      for (std::size_t j = 0; j < schema.measures.size(); ++j) {
        if (schema.measures[j].group == g.name && table.cells[i][j].value) {
          known += *table.cells[i][j].value;
        }
      }
      if (known > totals[i] + kTotalsTolerance) {
        throw DataError("TotalsInconsistent",
                        table.districts[i].code + ": group '" + g.name + "' cells sum to " +
                            format_number(known) + " above total " + format_number(totals[i]));
      }
    }
  }
  return table;
}

RawTable load_district_table(const std::filesystem::path& path, const TableSchema& schema) {
  return parse_district_table(read_text_file(path), schema);
}

RawTable reconstruct_suppressed(const RawTable& table) {
  RawTable out = table;
  const auto& measures = table.schema.measures;
  for (std::size_t i = 0; i < out.districts.size(); ++i) {
    auto& row = out.cells[i];
    for (std::size_t j = 0; j < measures.size(); ++j) {
      if (row[j].suppressed && !row[j].value && measures[j].group.empty()) {
        throw DataError("NoGroupTotal", out.districts[i].code + ": suppressed '" +
                                            measures[j].meta.name + "' belongs to no group");
      }
    }
    for (const auto& g : table.schema.groups) {
      double known = 0.0;
      std::vector<std::size_t> missing;
      for (std::size_t j = 0; j < measures.size(); ++j) {
        if (measures[j].group != g.name) continue;
        if (row[j].value) {
          known += *row[j].value;
        } else {
          missing.push_back(j);
        }
      }
      if (missing.empty()) continue;
      const double total = out.auxiliary_column(g.total_column)[i];
      double share = (total - known) / static_cast<double>(missing.size());
      const bool clamp = share < 0.0;
      if (clamp) share = 0.0;
      for (std::size_t j : missing) {
        row[j].value = share;
        row[j].reconstructed = true;
        row[j].clamped = clamp;
      }
    }
  }
  return out;
}

RateTable to_percentages(const RawTable& table) {
  const auto& measures = table.schema.measures;
  RateTable rates;
  rates.districts = table.districts;
  for (const auto& m : measures) {
    rates.variables.push_back(m.meta);
    rates.is_feature.push_back(m.feature);
  }
  rates.values.resize(static_cast<Eigen::Index>(table.districts.size()),
                      static_cast<Eigen::Index>(measures.size()));
  for (std::size_t i = 0; i < table.districts.size(); ++i) {
    const auto& code = table.districts[i].code;
    for (std::size_t j = 0; j < measures.size(); ++j) {
      const auto& spec = measures[j];
      const auto& cell = table.cells[i][j];
      if (!cell.value) {
        throw DataError("UnresolvedSuppression",
                        code + ": '" + spec.meta.name + "' is suppressed and not reconstructed");
      }
      double rate = *cell.value;
      if (spec.kind == MeasureKind::Count) {
        const double denom = table.auxiliary_column(spec.denominator)[i];
        if (!(denom > 0.0)) {
          throw DataError("ZeroDenominator",
                          code + ": denominator '" + spec.denominator + "' is not positive");
        }
        rate = 100.0 * *cell.value / denom;
      }
      if (!(rate >= 0.0 && rate <= 100.0)) {
        throw DataError("RateOutOfRange", code + ": '" + spec.meta.name + "' rate " +
                                              format_number(rate) + " outside [0, 100]");
      }
      rates.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rate;
    }
  }
  return rates;
}

std::optional<std::size_t> RateTable::index_of(const std::string& name) const {
  for (std::size_t j = 0; j < variables.size(); ++j) {
    if (variables[j].name == name) return j;
  }
  return std::nullopt;
}

RateTable RateTable::select(const std::vector<std::string>& names) const {
  RateTable out;
  out.districts = districts;
  out.values.resize(values.rows(), static_cast<Eigen::Index>(names.size()));
  for (std::size_t c = 0; c < names.size(); ++c) {
    auto j = index_of(names[c]);
    if (!j) throw ConfigError("UnknownVariable", "no variable named '" + names[c] + "'");
    out.variables.push_back(variables[*j]);
    out.is_feature.push_back(is_feature[*j]);
    out.values.col(static_cast<Eigen::Index>(c)) = values.col(static_cast<Eigen::Index>(*j));
  }
  return out;
}

RateTable RateTable::features_only() const {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < variables.size(); ++j) {
    if (is_feature[j]) names.push_back(variables[j].name);
  }
  return select(names);
}

std::string ingestion_report_csv(const RawTable& table) {
  std::string out = csv_line({"district_code", "measure", "status", "value"});
  for (std::size_t i = 0; i < table.districts.size(); ++i) {
    for (std::size_t j = 0; j < table.schema.measures.size(); ++j) {
      const auto& cell = table.cells[i][j];
      if (!cell.suppressed) continue;
      const char* status = cell.clamped ? "clamped" : cell.reconstructed ? "reconstructed"
                                                                         : "suppressed";
      out += csv_line({table.districts[i].code, table.schema.measures[j].meta.name, status,
                       cell.value ? format_number(*cell.value) : ""});
    }
  }
  return out;
}

}  // namespace geodemo
