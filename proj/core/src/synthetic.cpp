#include "geodemo/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "geodemo/csv.hpp"
#include "geodemo/error.hpp"
#include "geodemo/rng.hpp"

namespace geodemo {

namespace {

// Percent = base + scale * value for each default variable.
struct Scale {
  double base;
  double scale;
};

const std::vector<Scale>& variable_scales() {
  static const std::vector<Scale> scales = {
      {12.0, 2.0}, {14.0, 2.0}, {13.0, 1.5},                          // ages
      {4.0, 1.0},  {4.0, 1.0},  {4.0, 1.0},  {4.0, 1.0}, {4.0, 1.0},  // ethnicity counts
      {55.0, 7.0}, {5.0, 1.2},  {21.0, 3.0},                          // nvq3+, unemployed, inactive
  };
  return scales;
}

const char* const kPrefixes[] = {"E07", "E06", "E08", "E08", "W06", "E09", "E08"};

double round_to(double value, double step) { return std::round(value / step) * step; }

}  // namespace

const std::vector<Archetype>& planted_archetypes() {
  // Columns follow default_variables(): aged_16_24, aged_25_34, aged_35_44,
  // mixed, indian, pakistani_bangladeshi, black, other_minority, nvq3_plus,
  // unemployed, inactive.
  static const std::vector<Archetype> archetypes = {
      {"Archetype 1", 137, {-2.0, -0.5, 0.0, -0.5, -0.5, -0.5, -0.5, -0.5, 3.0, 0.5, 1.0}, false},
      {"Archetype 2", 151, {1.5, 0.5, 3.0, -0.5, -0.5, -0.5, -0.5, -0.5, 1.0, 0.0, 1.0}, false},
      {"Archetype 3", 9, {-1.5, 0.0, 0.5, 2.0, 0.0, 0.0, 3.0, 0.5, -2.0, 2.5, 2.5}, true},
      {"Archetype 4", 4, {-1.0, -1.0, -1.0, 0.0, 3.0, 0.0, 0.0, 0.0, -2.0, 0.5, 3.0}, true},
      {"Archetype 5", 25, {3.0, -2.0, -1.0, 0.0, 0.0, 0.0, 0.0, 1.5, 0.0, -1.5, 0.5}, false},
      {"Archetype 6", 38, {3.0, 2.0, -1.5, 1.5, 0.5, -0.5, -0.5, 0.0, 3.5, 1.5, 1.0}, false},
      {"Archetype 7", 6, {3.0, -0.5, 1.5, 0.0, 1.0, 4.0, 0.0, 0.0, -1.5, 4.0, 0.0}, true},
  };
  return archetypes;
}

PlantedData planted_data(std::uint64_t seed, double noise_sd) {
  const auto& archetypes = planted_archetypes();
  PlantedData data;
  data.variables = default_variables();
  const std::size_t d = data.variables.size();
  for (std::size_t a = 0; a < archetypes.size(); ++a) {
    data.labels.insert(data.labels.end(), archetypes[a].size, static_cast<int>(a));
  }
  const std::size_t n = data.labels.size();

  Rng rng(derive_seed(seed, 1));
  for (std::size_t i = n; i > 1; --i) {
    std::swap(data.labels[i - 1], data.labels[static_cast<std::size_t>(rng.below(i))]);
  }

  Rng noise(derive_seed(seed, 2));
  data.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& arch = archetypes[static_cast<std::size_t>(data.labels[i])];
    for (std::size_t j = 0; j < d; ++j) {
      data.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          arch.mean[j] + noise_sd * noise.normal();
    }
    data.districts.push_back({fmt::format("{}{:06d}", kPrefixes[data.labels[i]], 100 + i),
                              fmt::format("District {:03d}", i + 1)});
  }
  return data;
}

FixtureFiles fixture_files(const PlantedData& data, std::uint64_t seed) {
  const auto& scales = variable_scales();
  const std::size_t n = data.districts.size();
  const std::size_t d = data.variables.size();
  if (d != scales.size()) throw ConfigError("BadFixture", "fixture expects the default variables");
  FixtureFiles files;

  // District table: ethnicity as counts over population, the rest as
  // percentages. A handful of minority counts carry the suppression marker;
  // each is the only suppressed cell in its group, so it reconstructs exactly.
  Rng rng(derive_seed(seed, 3));
  std::vector<std::string> header = {"code", "name", "population"};
  for (std::size_t j = 0; j < d; ++j) header.push_back(data.variables[j].name);
  header.push_back("white");
  files.districts_csv = csv_line(header);
  std::size_t suppressed = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double population = 60000.0 + static_cast<double>(rng.below(340001));
    std::vector<std::string> row = {data.districts[i].code, data.districts[i].name, format_number(population)};
    double minorities = 0.0;
    const bool suppress = data.labels[i] <= 1 && suppressed < 6 && rng.below(20) == 0;
    for (std::size_t j = 0; j < d; ++j) {
      const double x = data.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      const double pct = scales[j].base + scales[j].scale * x;
      if (data.variables[j].dimension == "Ethnicity") {
        const double count = std::round(pct / 100.0 * population);
        minorities += count;
        row.push_back(suppress && j == 7 ? "!" : format_number(count));
      } else {
        row.push_back(format_number(round_to(pct, 1e-4)));
      }
    }
    if (suppress) ++suppressed;
    row.push_back(format_number(population - minorities));
    files.districts_csv += csv_line(row);
  }

  files.schema_ini = "[table]\ncode_column = code\nname_column = name\nsentinel = !\nsuppression_threshold = 500\n\n"
                     "[group.ethnicity]\ntotal = population\n\n";
  for (const auto& v : data.variables) {
    files.schema_ini += fmt::format("[measure.{}]\n", v.name);
    if (v.dimension == "Ethnicity") {
      files.schema_ini += "kind = count\ngroup = ethnicity\ndenominator = population\n";
    } else {
      files.schema_ini += "kind = percent\n";
    }
    files.schema_ini += fmt::format("domain = {}\ndimension = {}\n\n", to_string(v.domain), v.dimension);
  }
  files.schema_ini +=
      "[measure.white]\nkind = count\ngroup = ethnicity\ndenominator = population\nfeature = false\n"
      "domain = demographic\ndimension = Ethnicity\n";

  // Boundaries: one square cell per district on a 20-column grid.
  nlohmann::ordered_json features = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < n; ++i) {
    const double lon = -5.5 + 0.3 * static_cast<double>(i % 20);
    const double lat = 50.2 + 0.4 * static_cast<double>(i / 20);
    const auto r = [](double v) { return round_to(v, 1e-6); };
    nlohmann::ordered_json ring = nlohmann::ordered_json::array(
        {{r(lon), r(lat)}, {r(lon + 0.3), r(lat)}, {r(lon + 0.3), r(lat + 0.4)}, {r(lon), r(lat + 0.4)}, {r(lon), r(lat)}});
    nlohmann::ordered_json feature;
    feature["type"] = "Feature";
    feature["properties"] = {{"code", data.districts[i].code}, {"name", data.districts[i].name}};
    feature["geometry"] = {{"type", "Polygon"}, {"coordinates", nlohmann::ordered_json::array({ring})}};
    features.push_back(std::move(feature));
  }
  nlohmann::ordered_json collection;
  collection["type"] = "FeatureCollection";
  collection["features"] = std::move(features);
  files.boundaries_geojson = collection.dump(1) + "\n";

  // Broadband speeds: at-risk archetypes sit lowest on upload.
  const double upload_mean[] = {7.5, 11.0, 6.5, 7.0, 12.0, 14.0, 6.0};
  const double download_mean[] = {40.0, 62.0, 45.0, 48.0, 66.0, 75.0, 42.0};
  Rng speed(derive_seed(seed, 4));
  files.performance_csv = csv_line({"code", "upload_mbits", "download_mbits"});
  for (std::size_t i = 0; i < n; ++i) {
    const double up = std::max(0.5, upload_mean[data.labels[i]] + speed.normal());
    const double down = std::max(2.0, download_mean[data.labels[i]] + 6.0 * speed.normal());
    if (i % 125 == 7) continue;  // a few districts without speed records
    files.performance_csv +=
        csv_line({data.districts[i].code, format_number(round_to(up, 0.01)), format_number(round_to(down, 0.01))});
  }
  files.performance_csv += csv_line({"E06999999", "9.5", "50"});

  // Internet usage for 40 coarser areas and the district lookup.
  Rng usage(derive_seed(seed, 5));
  const std::size_t areas = 40;
  files.usage_csv = csv_line({"area_code", "used_pct", "lapsed_pct"});
  for (std::size_t a = 0; a < areas; ++a) {
    files.usage_csv += csv_line({fmt::format("UKZ{:02d}", a + 1), format_number(round_to(usage.uniform(80.0, 96.0), 0.1)),
                                 format_number(round_to(usage.uniform(3.0, 15.0), 0.1))});
  }
  files.lookup_csv = csv_line({"district_code", "area_code", "same_boundary"});
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t area = (i * 7) % areas;
    files.lookup_csv += csv_line({data.districts[i].code, fmt::format("UKZ{:02d}", area + 1), area % 5 == 0 ? "true" : "false"});
  }

  files.config_ini = fmt::format(
      "; Full-protocol run over the synthetic fixture.\n"
      "[input]\n"
      "districts = districts.csv\n"
      "schema = schema.ini\n"
      "boundaries = boundaries.geojson\n"
      "performance = performance.csv\n"
      "usage = usage.csv\n"
      "lookup = lookup.csv\n\n"
      "[preprocess]\n"
      "correlation_threshold = 0.7\n\n"
      "[cluster]\n"
      "k = 7\n"
      "restarts = 1000\n\n"
      "[kselect]\n"
      "run = always\n"
      "gap_reps = 500\n"
      "reference_sets = 50\n"
      "restarts = 1\n"
      "clustergram_reps = 100\n\n"
      "[export]\n"
      "bbox = -0.7, 56.0, 0.6, 57.0\n\n"
      "[run]\n"
      "seed = {}\n",
      seed);
  return files;
}

void write_fixture(const std::filesystem::path& dir, const FixtureFiles& files) {
  std::filesystem::create_directories(dir);
  const std::pair<const char*, const std::string*> entries[] = {
      {"districts.csv", &files.districts_csv},   {"schema.ini", &files.schema_ini},
      {"boundaries.geojson", &files.boundaries_geojson}, {"performance.csv", &files.performance_csv},
      {"usage.csv", &files.usage_csv},           {"lookup.csv", &files.lookup_csv},
      {"config.ini", &files.config_ini},
  };
  for (const auto& [name, text] : entries) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw DataError("WriteFailed", "cannot write " + (dir / name).string());
    out << *text;
  }
}

Matrix three_blobs(std::uint64_t seed, std::size_t per_blob, std::vector<int>* labels) {
  const double centers[3][2] = {{0.0, 0.0}, {10.0, 0.0}, {5.0, 8.660254037844386}};
  Rng rng(seed);
  Matrix points(static_cast<Eigen::Index>(3 * per_blob), 2);
  if (labels) labels->clear();
  for (std::size_t b = 0; b < 3; ++b) {
    for (std::size_t i = 0; i < per_blob; ++i) {
      const auto row = static_cast<Eigen::Index>(b * per_blob + i);
      points(row, 0) = centers[b][0] + 0.3 * rng.normal();
      points(row, 1) = centers[b][1] + 0.3 * rng.normal();
      if (labels) labels->push_back(static_cast<int>(b));
    }
  }
  return points;
}

}  // namespace geodemo
