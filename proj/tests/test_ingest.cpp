#include <doctest.h>

#include "geodemo/error.hpp"
#include "geodemo/ingest.hpp"

using namespace geodemo;

namespace {

const char* kSchema = R"(
[table]
code_column = code
name_column = name
suppression_threshold = 0

[group.eth]
total = pop

[measure.a]
kind = count
group = eth
denominator = pop

[measure.b]
kind = count
group = eth
denominator = pop

[measure.c]
kind = count
group = eth
denominator = pop

[measure.rate]
kind = percent
)";

RawTable table(const std::string& rows) {
  return parse_district_table("code,name,a,b,c,rate,pop\n" + rows, parse_schema(kSchema));
}

}  // namespace

TEST_CASE("a fully observed row parses without suppression flags") {
  const RawTable t = table("E08000035,Leeds,612,14,30,20.5,656\n");
  REQUIRE(t.district_count() == 1);
  CHECK(t.districts[0] == DistrictCode{"E08000035", "Leeds"});
  CHECK(t.suppressed_count() == 0);
  CHECK(*t.cells[0][0].value == 612.0);
  CHECK(*t.cells[0][3].value == 20.5);
}

TEST_CASE("the sentinel marks a cell as suppressed") {
  const RawTable t = table("E08000035,Leeds,!,14,30,20.5,656\n");
  CHECK(t.cells[0][0].suppressed);
  CHECK_FALSE(t.cells[0][0].value.has_value());
  CHECK(t.suppressed_count() == 1);
}

TEST_CASE("counts under the threshold are suppressed") {
  TableSchema schema = parse_schema(kSchema);
  schema.suppression_threshold = 20;
  const RawTable t = parse_district_table("code,name,a,b,c,rate,pop\nE08000035,Leeds,612,14,30,20.5,656\n", schema);
  CHECK(t.cells[0][1].suppressed);
  CHECK_FALSE(t.cells[0][2].suppressed);
  CHECK_FALSE(t.cells[0][3].suppressed);  // percent measures are never threshold-suppressed
}

TEST_CASE("an empty table is rejected") {
  try {
    table("");
    FAIL("expected EmptyTable");
  } catch (const DataError& e) {
    CHECK(e.kind() == "EmptyTable");
  }
}

TEST_CASE("a single suppressed cell takes the remainder of the group total") {
  const RawTable t = reconstruct_suppressed(table("E08000035,Leeds,60,30,!,20,100\n"));
  CHECK(*t.cells[0][2].value == 10.0);
  CHECK(t.cells[0][2].reconstructed);
  CHECK(t.reconstructed_count() == 1);
}

TEST_CASE("two suppressed cells split the remainder equally") {
  const RawTable t = reconstruct_suppressed(table("E08000035,Leeds,90,!,!,20,100\n"));
  CHECK(*t.cells[0][1].value == 5.0);
  CHECK(*t.cells[0][2].value == 5.0);
}

TEST_CASE("a table without suppression is unchanged by reconstruction") {
  const RawTable in = table("E08000035,Leeds,60,30,10,20,100\n");
  const RawTable out = reconstruct_suppressed(in);
  CHECK(out.reconstructed_count() == 0);
  for (std::size_t j = 0; j < in.measure_count(); ++j) CHECK(*out.cells[0][j].value == *in.cells[0][j].value);
}

TEST_CASE("known cells above the total are inconsistent") {
  CHECK_THROWS_AS(table("E08000035,Leeds,90,30,!,20,100\n"), DataError);
}

TEST_CASE("counts become percentages of their denominator") {
  const RateTable r = to_percentages(reconstruct_suppressed(table("E08000035,Leeds,25,175,0,20,200\n")));
  CHECK(r.values(0, 0) == 12.5);
  CHECK(r.values(0, 3) == 20.0);
  const RateTable full = to_percentages(table("E08000035,Leeds,200,0,0,20,200\n"));
  CHECK(full.values(0, 0) == 100.0);
}

TEST_CASE("a zero denominator is an error") {
  try {
    to_percentages(table("E08000035,Leeds,0,0,0,20,0\n"));
    FAIL("expected ZeroDenominator");
  } catch (const DataError& e) {
    CHECK(e.kind() == "ZeroDenominator");
  }
}

TEST_CASE("a missing column names the column") {
  try {
    parse_district_table("code,name,a,b,rate,pop\nE08000035,Leeds,1,2,3,4\n", parse_schema(kSchema));
    FAIL("expected MissingColumn");
  } catch (const DataError& e) {
    CHECK(e.kind() == "MissingColumn");
  }
}

TEST_CASE("duplicate districts are rejected") {
  CHECK_THROWS_AS(table("E08000035,Leeds,60,30,10,20,100\nE08000035,Leeds,60,30,10,20,100\n"), DataError);
}
