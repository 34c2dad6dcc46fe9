#include <doctest.h>

#include <nlohmann/json.hpp>

#include "geodemo/charts.hpp"
#include "geodemo/error.hpp"
#include "geodemo/geojson.hpp"

using namespace geodemo;

namespace {

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

std::string square(const std::string& code, double x, double y) {
  return R"({"type":"Feature","properties":{"code":")" + code +
         R"("},"geometry":{"type":"Polygon","coordinates":[[[)" + std::to_string(x) + "," + std::to_string(y) +
         "],[" + std::to_string(x + 1) + "," + std::to_string(y) + "],[" + std::to_string(x + 1) + "," +
         std::to_string(y + 1) + "],[" + std::to_string(x) + "," + std::to_string(y) + "]]]}}";
}

std::string collection(const std::vector<std::string>& features) {
  std::string out = R"({"type":"FeatureCollection","features":[)";
  for (std::size_t i = 0; i < features.size(); ++i) out += (i ? "," : "") + features[i];
  return out + "]}";
}

}  // namespace

TEST_CASE("a matched polygon gains the cluster attributes") {
  ClusterProfile p;
  p.cluster_id = 5;
  p.name = "Student Central";
  const DistrictAttributes attrs{{{"E08000035", "Leeds"}}, {5}, {1.25}};
  const GeoJsonExport out = export_geojson(attrs, {p}, collection({square("E08000035", 0, 0)}), {});
  const auto doc = nlohmann::json::parse(out.text);
  const auto& props = doc["features"][0]["properties"];
  CHECK(props["code"] == "E08000035");
  CHECK(props["cluster_id"] == 5);
  CHECK(props["cluster_name"] == "Student Central");
  CHECK(props["at_risk"] == false);
  CHECK(props["distance_to_center"] == 1.25);
  CHECK(props["cluster_mean_distance"] == 1.25);
  CHECK(out.unmatched_boundaries.empty());
  CHECK(out.unmatched_districts.empty());
}

TEST_CASE("nothing to export without assignments") {
  try {
    export_geojson({}, {}, collection({}), {});
    FAIL("expected NothingToExport");
  } catch (const DataError& e) {
    CHECK(e.kind() == "NothingToExport");
  }
}

TEST_CASE("boundaries need the code property and valid JSON") {
  const DistrictAttributes attrs{{{"E08000035", "Leeds"}}, {0}, {1.0}};
  GeoJsonOptions o;
  o.code_property = "lad_code";
  try {
    export_geojson(attrs, {}, collection({square("E08000035", 0, 0)}), o);
    FAIL("expected NoCodeProperty");
  } catch (const DataError& e) {
    CHECK(e.kind() == "NoCodeProperty");
  }
  try {
    export_geojson(attrs, {}, "{not json", {});
    FAIL("expected InvalidGeoJSON");
  } catch (const DataError& e) {
    CHECK(e.kind() == "InvalidGeoJSON");
  }
}

TEST_CASE("the bounding box keeps features centred inside it") {
  const DistrictAttributes attrs{{{"E09000001", "a"}, {"E06000001", "b"}}, {0, 1}, {1.0, 2.0}};
  GeoJsonOptions o;
  o.bbox = parse_bounding_box("-0.5, -0.5, 1.5, 1.5");
  const auto out =
      export_geojson(attrs, {}, collection({square("E09000001", 0, 0), square("E06000001", 10, 10)}), o);
  CHECK(out.features == 1);
  CHECK(out.text.find("E09000001") != std::string::npos);
  CHECK(out.text.find("E06000001") == std::string::npos);
  CHECK_THROWS_AS(parse_bounding_box("1,2,3"), ConfigError);
}

TEST_CASE("unmatched codes are listed both ways") {
  const DistrictAttributes attrs{{{"E09000001", "a"}, {"E06000001", "b"}}, {0, 1}, {1.0, 2.0}};
  const auto out = export_geojson(attrs, {}, collection({square("E09000001", 0, 0), square("W06000001", 3, 3)}), {});
  CHECK(out.unmatched_boundaries == std::vector<std::string>{"W06000001"});
  CHECK(out.unmatched_districts == std::vector<std::string>{"E06000001"});
}

TEST_CASE("gap chart has one point and error bar per k") {
  GapReport r;
  r.k_min = 1;
  r.k_max = 10;
  r.modal_k = 3;
  for (std::size_t k = 1; k <= 10; ++k) r.rows.push_back({k, 0.1 * static_cast<double>(k), 0.02, 0, 0, 0, 0});
  const std::string svg = gap_curve_svg(r);
  CHECK(count(svg, "class=\"point") == 10);
  CHECK(count(svg, "class=\"errorbar") == 10);
  CHECK(gap_curve_svg(r) == svg);
}

TEST_CASE("boxplot chart has one box per cluster") {
  BoxplotStats b;
  for (int c = 0; c < 7; ++c) {
    ClusterBox box;
    box.cluster_id = c;
    box.size = 3;
    box.quartiles = {1, 2, 3, 4, 5};
    box.whisker_low = 1;
    box.whisker_high = 5;
    b.clusters.push_back(box);
  }
  const std::string svg = boxplot_svg(b);
  CHECK(count(svg, "class=\"box\"") == 7);
  CHECK(svg.find("<svg") != std::string::npos);
}
