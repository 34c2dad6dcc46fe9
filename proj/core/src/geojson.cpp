#include "geodemo/geojson.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <nlohmann/json.hpp>

#include "geodemo/csv.hpp"
#include "geodemo/error.hpp"

namespace geodemo {

namespace {

using Json = nlohmann::ordered_json;

struct Extent {
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = std::numeric_limits<double>::infinity();
  double max_x = -std::numeric_limits<double>::infinity();
  double max_y = -std::numeric_limits<double>::infinity();
  bool empty() const { return min_x > max_x; }
};

// Walks nested coordinate arrays down to [x, y, ...] positions.
void extend(const Json& coords, Extent& e) {
  if (!coords.is_array() || coords.empty()) return;
  if (coords[0].is_number()) {
    if (coords.size() < 2 || !coords[1].is_number()) throw DataError("InvalidGeoJSON", "malformed position");
    const double x = coords[0].get<double>();
    const double y = coords[1].get<double>();
    e.min_x = std::min(e.min_x, x);
    e.max_x = std::max(e.max_x, x);
    e.min_y = std::min(e.min_y, y);
    e.max_y = std::max(e.max_y, y);
    return;
  }
  for (const auto& child : coords) extend(child, e);
}

void extend_geometry(const Json& geometry, Extent& e) {
  if (geometry.is_null()) return;
  if (!geometry.is_object()) throw DataError("InvalidGeoJSON", "geometry is not an object");
  if (geometry.contains("geometries")) {
    for (const auto& g : geometry["geometries"]) extend_geometry(g, e);
    return;
  }
  if (geometry.contains("coordinates")) extend(geometry["coordinates"], e);
}

std::string code_text(const Json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_integer()) return std::to_string(value.get<long long>());
  return {};
}

}  // namespace

BoundingBox parse_bounding_box(const std::string& text) {
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string part = trim(text.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    const auto v = parse_number(part);
    if (!v) throw ConfigError("BadBoundingBox", "bbox value '" + part + "' is not a number");
    values.push_back(*v);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (values.size() != 4 || values[0] > values[2] || values[1] > values[3]) {
    throw ConfigError("BadBoundingBox", "bbox needs min_x, min_y, max_x, max_y with min <= max");
  }
  return {values[0], values[1], values[2], values[3]};
}

GeoJsonExport export_geojson(const DistrictAttributes& attributes, const std::vector<ClusterProfile>& profiles,
                             const std::string& boundaries, const GeoJsonOptions& options) {
  if (attributes.assignments.empty()) throw DataError("NothingToExport", "no cluster assignments to export");
  if (attributes.districts.size() != attributes.assignments.size() ||
      attributes.distances.size() != attributes.assignments.size()) {
    throw DataError("DimensionMismatch", "district, assignment and distance counts differ");
  }

  Json doc;
  try {
    doc = Json::parse(boundaries);
  } catch (const Json::parse_error& e) {
    throw DataError("InvalidGeoJSON", std::string("boundary file is not JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
      !doc["features"].is_array()) {
    throw DataError("InvalidGeoJSON", "boundary file is not a FeatureCollection");
  }

  std::map<int, const ClusterProfile*> by_id;
  for (const auto& p : profiles) by_id[p.cluster_id] = &p;
  std::map<int, std::pair<double, std::size_t>> distance_sums;
  std::map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < attributes.districts.size(); ++i) {
    row_of[attributes.districts[i].code] = i;
    auto& [sum, count] = distance_sums[attributes.assignments[i]];
    sum += attributes.distances[i];
    ++count;
  }

  GeoJsonExport result;
  std::map<std::string, bool> seen;
  Json features = Json::array();
  for (const auto& feature : doc["features"]) {
    if (!feature.is_object() || feature.value("type", "") != "Feature") {
      throw DataError("InvalidGeoJSON", "FeatureCollection member is not a Feature");
    }
    const Json properties = feature.contains("properties") && feature["properties"].is_object()
                                ? feature["properties"]
                                : Json::object();
    const std::string code =
        properties.contains(options.code_property) ? code_text(properties[options.code_property]) : std::string();
    if (code.empty()) {
      throw DataError("NoCodeProperty", "feature lacks a '" + options.code_property + "' property");
    }

    if (options.bbox) {
      Extent e;
      extend_geometry(feature.contains("geometry") ? feature["geometry"] : Json(), e);
      if (e.empty() || !options.bbox->contains(0.5 * (e.min_x + e.max_x), 0.5 * (e.min_y + e.max_y))) continue;
    }

    Json out = feature;
    Json props = properties;
    const auto row = row_of.find(code);
    if (row == row_of.end()) {
      result.unmatched_boundaries.push_back(code);
      props["cluster_id"] = nullptr;
      props["cluster_name"] = nullptr;
      props["at_risk"] = nullptr;
      props["distance_to_center"] = nullptr;
      props["cluster_mean_distance"] = nullptr;
    } else {
      seen[code] = true;
      const std::size_t i = row->second;
      const int cluster = attributes.assignments[i];
      const auto profile = by_id.find(cluster);
      const auto& [sum, count] = distance_sums[cluster];
      props["cluster_id"] = cluster;
      props["cluster_name"] =
          profile != by_id.end() ? profile->second->name : "Cluster " + std::to_string(cluster + 1);
      props["at_risk"] = profile != by_id.end() && profile->second->at_risk;
      props["distance_to_center"] = attributes.distances[i];
      props["cluster_mean_distance"] = sum / static_cast<double>(count);
    }
    out["properties"] = std::move(props);
    features.push_back(std::move(out));
  }

  if (!options.bbox) {
    for (const auto& d : attributes.districts) {
      if (!seen.count(d.code)) result.unmatched_districts.push_back(d.code);
    }
  }

  Json collection;
  collection["type"] = "FeatureCollection";
  for (const auto& [key, value] : doc.items()) {
    if (key != "type" && key != "features") collection[key] = value;
  }
  result.features = features.size();
  collection["features"] = std::move(features);
  result.text = collection.dump(1) + "\n";
  return result;
}

}  // namespace geodemo
