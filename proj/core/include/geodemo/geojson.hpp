#pragma once

#include <optional>
#include <string>
#include <vector>

#include "geodemo/ingest.hpp"
#include "geodemo/profile.hpp"

namespace geodemo {

/// Axis-aligned box in the boundary file's coordinate system.
struct BoundingBox {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;
  bool contains(double x, double y) const { return x >= min_x && x <= max_x && y >= min_y && y <= max_y; }
};

/// Parses "min_x, min_y, max_x, max_y". Errors: ConfigError{BadBoundingBox}.
BoundingBox parse_bounding_box(const std::string& text);

struct GeoJsonOptions {
  std::string code_property = "code";
  std::optional<BoundingBox> bbox;  // keep features whose extent centre lies inside
};

/// Per-district values joined onto the boundaries.
struct DistrictAttributes {
  std::vector<DistrictCode> districts;
  std::vector<int> assignments;
  std::vector<double> distances;  // distance to own centre, same order
};

struct GeoJsonExport {
  std::string text;
  std::size_t features = 0;                      // written features
  std::vector<std::string> unmatched_boundaries;  // boundary codes without an assignment
  std::vector<std::string> unmatched_districts;   // assigned districts without a boundary
};

/// Copies every boundary feature, adding cluster_id, cluster_name, at_risk,
/// distance_to_center and cluster_mean_distance. Boundaries without an
/// assignment are kept with null cluster properties.
/// Errors: DataError{NothingToExport, InvalidGeoJSON, NoCodeProperty, DimensionMismatch}.
GeoJsonExport export_geojson(const DistrictAttributes& attributes, const std::vector<ClusterProfile>& profiles,
                             const std::string& boundaries, const GeoJsonOptions& options = {});

}  // namespace geodemo
