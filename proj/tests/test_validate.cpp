#include <doctest.h>

#include "geodemo/error.hpp"
#include "geodemo/validate.hpp"

using namespace geodemo;

TEST_CASE("districts without speed records are unmatched") {
  const std::vector<DistrictCode> d{{"E06000001", "a"}, {"E06000002", "b"}, {"E06000003", "c"}};
  const auto j = join_performance(d, {0, 0, 1}, {{"E06000001", 5, 30}, {"E06000003", 7, 40}});
  CHECK(j.rows.size() == 2);
  CHECK(j.unmatched_districts == std::vector<std::string>{"E06000002"});
}

TEST_CASE("an empty performance table leaves every district unmatched") {
  const std::vector<DistrictCode> d{{"E06000001", "a"}, {"E06000002", "b"}};
  const auto j = join_performance(d, {0, 1}, {});
  CHECK(j.rows.empty());
  CHECK(j.unmatched_districts.size() == 2);
  CHECK_FALSE(j.warnings.empty());
}

TEST_CASE("per-cluster mean and median speeds") {
  const std::vector<DistrictCode> d{{"E06000001", "a"}, {"E06000002", "b"}, {"E06000003", "c"}};
  const auto s = cluster_speed_summary(
      join_performance(d, {0, 0, 0}, {{"E06000001", 8, 50}, {"E06000002", 10, 60}, {"E06000003", 12, 70}}));
  REQUIRE(s.clusters.size() == 1);
  CHECK(s.clusters[0].mean_upload == 10.0);
  CHECK(s.clusters[0].median_upload == 10.0);
  CHECK(s.clusters[0].mean_download == 60.0);
  CHECK(s.reference.upload == 10.0);
  CHECK(s.reference.download == 58.0);
}

TEST_CASE("equal speeds everywhere give zero deviation") {
  const std::vector<DistrictCode> d{{"E06000001", "a"}, {"E06000002", "b"}};
  const auto s = cluster_speed_summary(join_performance(d, {0, 1}, {{"E06000001", 9, 40}, {"E06000002", 9, 40}}));
  for (const auto& c : s.clusters) {
    CHECK(c.mean_upload == 9.0);
    CHECK(c.median_upload == 9.0);
    CHECK(c.upload_deviation == 0.0);
  }
}

TEST_CASE("usage ranks run from highest to lowest") {
  const auto r = rank_areas({{"A", 90, 1}, {"B", 80, 2}, {"C", 70, 3}});
  CHECK(r[0].usage_rank == 1);
  CHECK(r[1].usage_rank == 2);
  CHECK(r[2].usage_rank == 3);
  CHECK(r[2].lapsed_rank == 1);
}

TEST_CASE("a single area ranks first on both measures") {
  const auto r = rank_areas({{"A", 50, 5}});
  CHECK(r[0].usage_rank == 1);
  CHECK(r[0].lapsed_rank == 1);
}

TEST_CASE("ties rank by area code") {
  const auto r = rank_areas({{"B", 80, 1}, {"A", 80, 1}});
  CHECK(r[0].area_code == "A");
  CHECK(r[0].usage_rank == 1);
  CHECK(r[1].usage_rank == 2);
}

TEST_CASE("case ranks resolve districts through the lookup") {
  const auto c = usage_ranks({{"A", 90, 1}, {"B", 80, 2}}, {{"E06000001", "B", true}}, {"E06000001"},
                             {{"E06000001", 4}});
  REQUIRE(c.size() == 1);
  CHECK(c[0].area.usage_rank == 2);
  CHECK(c[0].cluster_id == 4);
  CHECK(c[0].area_count == 2);
  CHECK_THROWS_AS(usage_ranks({{"A", 90, 1}}, {}, {"E06000009"}), DataError);
}

TEST_CASE("performance files need their columns") {
  CHECK(parse_performance("code,upload_mbits,download_mbits\nE06000001,1.5,20\n")[0].upload == 1.5);
  CHECK_THROWS_AS(parse_performance("code,upload\nE06000001,1.5\n"), DataError);
}
