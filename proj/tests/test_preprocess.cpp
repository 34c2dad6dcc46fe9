#include <doctest.h>

#include <cmath>
#include <random>

#include "geodemo/error.hpp"
#include "geodemo/preprocess.hpp"
#include "oracles.hpp"

using namespace geodemo;

namespace {

RateTable rates_from(const std::vector<std::vector<double>>& columns, std::vector<std::string> names = {}) {
  RateTable t;
  const std::size_t n = columns[0].size();
  t.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    const std::string name = j < names.size() ? names[j] : "v" + std::to_string(j);
    t.variables.push_back({name, Domain::Demographic, "", Polarity::AsIs});
    t.is_feature.push_back(true);
    for (std::size_t i = 0; i < n; ++i) t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = columns[j][i];
  }
  for (std::size_t i = 0; i < n; ++i) t.districts.push_back({"E0600000" + std::to_string(i), "d"});
  return t;
}

CorrMatrix corr_of(const Matrix& r, std::vector<std::string> names) {
  CorrMatrix c;
  c.variables = std::move(names);
  c.r = r;
  c.p_values = Matrix::Zero(r.rows(), r.cols());
  c.observations = 10;
  return c;
}

}  // namespace

TEST_CASE("Pearson correlation of (1,2,3) and (1,2,4)") {
  const CorrMatrix c = correlation_matrix(rates_from({{1, 2, 3}, {1, 2, 4}}));
  CHECK(c.r(0, 1) == doctest::Approx(0.9819805060619657).epsilon(1e-15));
  CHECK(std::round(c.r(0, 1) * 1e4) / 1e4 == 0.9820);
  CHECK(c.r(0, 0) == 1.0);
}

TEST_CASE("a column against its negation has r = -1") {
  const CorrMatrix c = correlation_matrix(rates_from({{1, 5, 2, 8}, {-1, -5, -2, -8}}));
  CHECK(c.r(0, 1) == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("correlations match the direct formula on random data") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0, 1);
  std::vector<std::vector<double>> cols(4, std::vector<double>(40));
  for (auto& c : cols) for (auto& v : c) v = g(rng);
  const CorrMatrix c = correlation_matrix(rates_from(cols));
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) CHECK(std::abs(c.r(a, b) - oracle::pearson(cols[a], cols[b])) < 1e-12);
  }
}

TEST_CASE("pruning keeps everything under the threshold") {
  Matrix r(3, 3);
  r << 1, 0.6, 0.3, 0.6, 1, 0.695, 0.3, 0.695, 1;
  const PruneResult p = prune_multicollinear(corr_of(r, {"a", "b", "c"}), 0.7);
  CHECK(p.kept.size() == 3);
  CHECK(p.log.empty());
}

TEST_CASE("the variable shared by two strong pairs is removed") {
  Matrix r(3, 3);
  r << 1, 0.9, 0.5, 0.9, 1, 0.9, 0.5, 0.9, 1;
  const PruneResult p = prune_multicollinear(corr_of(r, {"A", "B", "C"}), 0.7);
  CHECK(p.kept == std::vector<std::string>{"A", "C"});
  REQUIRE(p.log.size() == 1);
  CHECK(p.log[0].removed == "B");
}

TEST_CASE("one of an exactly duplicated pair is removed") {
  const CorrMatrix c = correlation_matrix(rates_from({{1, 2, 3, 5}, {1, 2, 3, 5}, {4, 1, 3, 1}}));
  const PruneResult p = prune_multicollinear(c, 0.7);
  CHECK(p.kept.size() == 2);
  CHECK(p.log.size() == 1);
}

TEST_CASE("z-scores of (1,2,3) are (-1,0,1)") {
  const RateTable t = rates_from({{1, 2, 3}});
  const FeatureMatrix f = zscore(t, t.variables);
  CHECK(f.z(0, 0) == -1.0);
  CHECK(f.z(1, 0) == 0.0);
  CHECK(f.z(2, 0) == 1.0);
}

TEST_CASE("a constant column cannot be standardised") {
  const RateTable t = rates_from({{4, 4, 4}});
  try {
    zscore(t, t.variables);
    FAIL("expected ConstantColumn");
  } catch (const NumericalError& e) {
    CHECK(e.kind() == "ConstantColumn");
  }
}

TEST_CASE("z-scored columns have mean 0 and sd 1") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 100);
  std::vector<std::vector<double>> cols(5, std::vector<double>(60));
  for (auto& c : cols) for (auto& v : c) v = u(rng);
  const RateTable t = rates_from(cols);
  const FeatureMatrix f = zscore(t, t.variables);
  for (Eigen::Index j = 0; j < 5; ++j) {
    std::vector<double> col(60);
    for (Eigen::Index i = 0; i < 60; ++i) col[static_cast<std::size_t>(i)] = f.z(i, j);
    CHECK(std::abs(static_cast<double>(oracle::mean(col))) < 1e-10);
    CHECK(std::abs(oracle::sample_sd(col) - 1.0) < 1e-10);
  }
}
