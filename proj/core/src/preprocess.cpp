#include "geodemo/preprocess.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

#include "geodemo/csv.hpp"
#include "geodemo/error.hpp"

namespace geodemo {

namespace {

using Index = Eigen::Index;

double column_mean(const Matrix& m, Index j) {
  double sum = 0.0;
  for (Index i = 0; i < m.rows(); ++i) sum += m(i, j);
  return sum / static_cast<double>(m.rows());
}

double two_sided_p(double r, std::size_t n) {
  if (n < 3) return std::numeric_limits<double>::quiet_NaN();
  const double abs_r = std::abs(r);
  if (abs_r >= 1.0) return 0.0;
  const double df = static_cast<double>(n - 2);
  const double t = abs_r * std::sqrt(df / (1.0 - r * r));
  const boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, t));
}

}  // namespace

double CorrMatrix::max_off_diagonal_abs() const {
  double best = 0.0;
  for (Index i = 0; i < r.rows(); ++i) {
    for (Index j = i + 1; j < r.cols(); ++j) best = std::max(best, std::abs(r(i, j)));
  }
  return best;
}

CorrMatrix correlation_matrix(const RateTable& rates) {
  const Matrix& x = rates.values;
  const Index n = x.rows();
  const Index d = x.cols();
  if (n < 3) throw DataError("TooFewDistricts", "correlation needs at least 3 districts");

  Matrix centered(n, d);
  Vector norms(d);
  for (Index j = 0; j < d; ++j) {
    const double mean = column_mean(x, j);
    double ss = 0.0;
    for (Index i = 0; i < n; ++i) {
      centered(i, j) = x(i, j) - mean;
      ss += centered(i, j) * centered(i, j);
    }
    if (!(ss > 0.0)) {
      throw NumericalError("ConstantColumn", "variable '" + rates.variables[j].name +
                                                 "' has zero variance");
    }
    norms(j) = std::sqrt(ss);
  }

  CorrMatrix corr;
  corr.observations = static_cast<std::size_t>(n);
  for (const auto& v : rates.variables) corr.variables.push_back(v.name);
  corr.r = Matrix::Identity(d, d);
  corr.p_values = Matrix::Zero(d, d);
  for (Index a = 0; a < d; ++a) {
    for (Index b = a + 1; b < d; ++b) {
      double cross = 0.0;
      for (Index i = 0; i < n; ++i) cross += centered(i, a) * centered(i, b);
      const double r = std::clamp(cross / (norms(a) * norms(b)), -1.0, 1.0);
      corr.r(a, b) = corr.r(b, a) = r;
      corr.p_values(a, b) = corr.p_values(b, a) = two_sided_p(r, corr.observations);
    }
  }
  return corr;
}

PruneResult prune_multicollinear(const CorrMatrix& corr, double threshold,
                                 const std::vector<std::string>& keep) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw ConfigError("ThresholdOutOfRange", "correlation threshold must lie in (0, 1]");
  }
  const std::size_t d = corr.variables.size();
  auto protected_var = [&](std::size_t j) {
    return std::find(keep.begin(), keep.end(), corr.variables[j]) != keep.end();
  };
  auto abs_r = [&](std::size_t a, std::size_t b) {
    return std::abs(corr.r(static_cast<Index>(a), static_cast<Index>(b)));
  };

  std::vector<bool> alive(d, true);
  PruneResult result;
  for (;;) {
    std::vector<bool> violating(d, false);
    bool any = false;
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = a + 1; b < d; ++b) {
        if (alive[a] && alive[b] && abs_r(a, b) > threshold) {
          violating[a] = violating[b] = true;
          any = true;
        }
      }
    }
    if (!any) break;

    const std::size_t remaining =
        static_cast<std::size_t>(std::count(alive.begin(), alive.end(), true));
    std::size_t victim = d;
    double victim_score = -1.0;
    for (std::size_t j = 0; j < d; ++j) {
      if (!violating[j] || protected_var(j)) continue;
      double sum = 0.0;
      for (std::size_t o = 0; o < d; ++o) {
        if (o != j && alive[o]) sum += abs_r(j, o);
      }
      const double score = sum / static_cast<double>(remaining - 1);
      // >= so that ties fall to the later variable.
      if (score >= victim_score) {
        victim_score = score;
        victim = j;
      }
    }
    if (victim == d) {
      throw ConfigError("KeepListConflict",
                        "every variable in a violating pair is on the keep-list");
    }

    PruneStep step;
    step.removed = corr.variables[victim];
    std::size_t partner = d;
    for (std::size_t o = 0; o < d; ++o) {
      if (o == victim || !alive[o] || abs_r(victim, o) <= threshold) continue;
      if (partner == d || abs_r(victim, o) > abs_r(victim, partner)) partner = o;
    }
    step.pair_first = corr.variables[std::min(victim, partner)];
    step.pair_second = corr.variables[std::max(victim, partner)];
    step.abs_r = abs_r(victim, partner);
    result.log.push_back(step);
    alive[victim] = false;

    if (std::none_of(alive.begin(), alive.end(), [](bool a) { return a; })) {
      throw DataError("AllVariablesRemoved", "pruning removed every variable");
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    if (alive[j]) result.kept.push_back(corr.variables[j]);
  }
  return result;
}

FeatureMatrix zscore(const RateTable& rates, const std::vector<VariableMeta>& meta) {
  check_unique_names(meta);
  const Index n = rates.values.rows();
  if (n < 2) throw DataError("TooFewDistricts", "z-scoring needs at least 2 districts");
  const Index d = static_cast<Index>(meta.size());

  FeatureMatrix out;
  out.districts = rates.districts;
  out.variables = meta;
  out.z.resize(n, d);
  out.column_means.resize(d);
  out.column_sds.resize(d);
  for (Index j = 0; j < d; ++j) {
    const auto& v = meta[static_cast<std::size_t>(j)];
    auto src = rates.index_of(v.name);
    if (!src) throw ConfigError("UnknownVariable", "no rate column named '" + v.name + "'");
    const double sign = v.polarity == Polarity::Inverted ? -1.0 : 1.0;
    for (Index i = 0; i < n; ++i) out.z(i, j) = sign * rates.values(i, static_cast<Index>(*src));

    const double mean = column_mean(out.z, j);
    double ss = 0.0;
    for (Index i = 0; i < n; ++i) ss += (out.z(i, j) - mean) * (out.z(i, j) - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0)) {
      throw NumericalError("ConstantColumn", "variable '" + v.name + "' has zero variance");
    }
    for (Index i = 0; i < n; ++i) out.z(i, j) = (out.z(i, j) - mean) / sd;
    out.column_means(j) = mean;
    out.column_sds(j) = sd;
  }
  return out;
}

FeatureMatrix make_features(Matrix z, std::vector<VariableMeta> variables,
                            std::vector<DistrictCode> districts) {
  FeatureMatrix out;
  const auto n = static_cast<std::size_t>(z.rows());
  const auto d = static_cast<std::size_t>(z.cols());
  if (variables.empty()) {
    for (std::size_t j = 0; j < d; ++j) variables.push_back({"v" + std::to_string(j + 1), Domain::Demographic, "", Polarity::AsIs});
  }
  if (districts.empty()) {
    for (std::size_t i = 0; i < n; ++i) {
      districts.push_back({"D" + std::to_string(i + 1), "District " + std::to_string(i + 1)});
    }
  }
  if (variables.size() != d || districts.size() != n) {
    throw ConfigError("DimensionMismatch", "labels do not match matrix shape");
  }
  out.z = std::move(z);
  out.variables = std::move(variables);
  out.districts = std::move(districts);
  out.column_means = Vector::Zero(static_cast<Index>(d));
  out.column_sds = Vector::Ones(static_cast<Index>(d));
  return out;
}

std::string corr_matrix_csv(const CorrMatrix& corr) {
  std::vector<std::string> header{"variable"};
  header.insert(header.end(), corr.variables.begin(), corr.variables.end());
  std::string out = csv_line(header);
  for (std::size_t a = 0; a < corr.variables.size(); ++a) {
    std::vector<std::string> row{corr.variables[a]};
    for (std::size_t b = 0; b < corr.variables.size(); ++b) {
      row.push_back(format_number(corr.r(static_cast<Index>(a), static_cast<Index>(b))));
    }
    out += csv_line(row);
  }
  return out;
}

std::string pruning_log_csv(const PruneResult& result) {
  std::string out = csv_line({"removed_variable", "trigger_pair", "abs_r"});
  for (const auto& s : result.log) {
    out += csv_line({s.removed, s.pair_first + "|" + s.pair_second, format_number(s.abs_r)});
  }
  return out;
}

}  // namespace geodemo
