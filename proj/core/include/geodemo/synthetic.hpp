#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "geodemo/ingest.hpp"
#include "geodemo/matrix.hpp"
#include "geodemo/variables.hpp"

namespace geodemo {

/// A planted district type: mean z-vector over the default variables.
struct Archetype {
  std::string name;
  std::size_t size = 0;
  std::vector<double> mean;
  bool at_risk = false;  // built to satisfy the default risk rule
};

/// Seven archetypes over default_variables(), 370 districts in total.
const std::vector<Archetype>& planted_archetypes();

struct PlantedData {
  std::vector<DistrictCode> districts;
  std::vector<VariableMeta> variables;
  Matrix values;            // archetype mean + noise, generator scale
  std::vector<int> labels;  // planted archetype index per district
};

/// Draws every archetype's districts (noise sd `noise_sd`) and shuffles the
/// district order. Codes are unique nine-character GSS-style codes.
PlantedData planted_data(std::uint64_t seed, double noise_sd = 0.3);

/// Text of every input file the pipeline reads, built around `data`.
struct FixtureFiles {
  std::string districts_csv;
  std::string schema_ini;
  std::string boundaries_geojson;
  std::string performance_csv;
  std::string usage_csv;
  std::string lookup_csv;
  std::string config_ini;
};

FixtureFiles fixture_files(const PlantedData& data, std::uint64_t seed);

/// Writes fixture_files() into `dir` under their canonical names
/// (districts.csv, schema.ini, boundaries.geojson, performance.csv,
/// usage.csv, lookup.csv, config.ini).
void write_fixture(const std::filesystem::path& dir, const FixtureFiles& files);

/// Three 2-D blobs of `per_blob` points, centres 10 apart, sd 0.3.
Matrix three_blobs(std::uint64_t seed, std::size_t per_blob = 30, std::vector<int>* labels = nullptr);

}  // namespace geodemo
