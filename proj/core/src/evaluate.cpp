#include "geodemo/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "geodemo/csv.hpp"
#include "geodemo/error.hpp"

namespace geodemo {

namespace {
using Index = Eigen::Index;
}  // namespace

bool AnovaRow::infinite() const { return std::isinf(f); }

AnovaReport anova_f(const FeatureMatrix& features, const std::vector<int>& assignments, std::size_t k) {
  const std::size_t n = features.rows();
  if (assignments.size() != n) throw DataError("DimensionMismatch", "one label per district required");
  if (k < 2) throw DataError("SingleCluster", "ANOVA needs at least 2 clusters");
  if (n <= k) throw DataError("TooFewDistricts", "ANOVA needs more districts than clusters");

  std::vector<std::size_t> count(k, 0);
  for (int a : assignments) {
    if (a < 0 || static_cast<std::size_t>(a) >= k) throw DataError("DimensionMismatch", "label outside [0, k)");
    ++count[static_cast<std::size_t>(a)];
  }

  AnovaReport report;
  const double df_between = static_cast<double>(k - 1);
  const double df_within = static_cast<double>(n - k);
  for (std::size_t j = 0; j < features.cols(); ++j) {
    const auto col = features.z.col(static_cast<Index>(j));
    std::vector<double> sum(k, 0.0);
    double grand = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum[static_cast<std::size_t>(assignments[i])] += col(static_cast<Index>(i));
      grand += col(static_cast<Index>(i));
    }
    grand /= static_cast<double>(n);
    std::vector<double> mean(k, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c]) mean[c] = sum[c] / static_cast<double>(count[c]);
    }

    AnovaRow row;
    row.variable = features.variables[j].name;
    row.df_between = k - 1;
    row.df_within = n - k;
    for (std::size_t c = 0; c < k; ++c) {
      row.between_ss += static_cast<double>(count[c]) * (mean[c] - grand) * (mean[c] - grand);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double dev = col(static_cast<Index>(i)) - mean[static_cast<std::size_t>(assignments[i])];
      row.within_ss += dev * dev;
    }
    if (row.within_ss > 0.0) {
      row.f = (row.between_ss / df_between) / (row.within_ss / df_within);
    } else {
      row.f = std::numeric_limits<double>::infinity();
    }
    report.rows.push_back(row);
  }

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  std::size_t finite = 0;
  for (const auto& row : report.rows) {
    if (row.infinite()) {
      ++report.infinite_count;
      continue;
    }
    report.mean_f += row.f;
    lo = std::min(lo, row.f);
    hi = std::max(hi, row.f);
    ++finite;
  }
  if (finite) {
    report.mean_f /= static_cast<double>(finite);
    report.spread_f = hi - lo;
  }
  return report;
}

std::vector<std::size_t> cluster_sizes(const std::vector<int>& assignments, std::size_t k) {
  for (int a : assignments) {
    if (a < 0) throw DataError("DimensionMismatch", "negative cluster id");
    k = std::max(k, static_cast<std::size_t>(a) + 1);
  }
  std::vector<std::size_t> sizes(k, 0);
  for (int a : assignments) ++sizes[static_cast<std::size_t>(a)];
  return sizes;
}

double type7_quantile(const std::vector<double>& sorted, double p) {
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Quartiles type7_quartiles(std::vector<double> values) {
  if (values.empty()) throw DataError("EmptySample", "quartiles of an empty sample");
  std::sort(values.begin(), values.end());
  return {values.front(), type7_quantile(values, 0.25), type7_quantile(values, 0.5),
          type7_quantile(values, 0.75), values.back()};
}

BoxplotStats boxplot_from_distances(const std::vector<double>& distances, const std::vector<int>& assignments,
                                    std::size_t k, const std::vector<std::string>& labels) {
  if (distances.size() != assignments.size() || labels.size() != assignments.size()) {
    throw DataError("DimensionMismatch", "distances, labels and assignments differ in length");
  }
  std::vector<std::vector<std::size_t>> members(k);
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    members[static_cast<std::size_t>(assignments[i])].push_back(i);
  }
  BoxplotStats stats;
  for (std::size_t c = 0; c < k; ++c) {
    if (members[c].empty()) throw DataError("EmptyCluster", "cluster " + std::to_string(c) + " has no members");
    std::vector<double> d;
    for (std::size_t i : members[c]) d.push_back(distances[i]);
    ClusterBox box;
    box.cluster_id = static_cast<int>(c);
    box.size = d.size();
    box.quartiles = type7_quartiles(d);
    double sum = 0.0;
    for (double v : d) sum += v;
    box.mean = sum / static_cast<double>(d.size());
    const double iqr = box.quartiles.q3 - box.quartiles.q1;
    box.lower_fence = box.quartiles.q1 - 1.5 * iqr;
    box.upper_fence = box.quartiles.q3 + 1.5 * iqr;
    box.whisker_low = box.quartiles.max;
    box.whisker_high = box.quartiles.min;
    for (std::size_t i : members[c]) {
      const double v = distances[i];
      if (v < box.lower_fence || v > box.upper_fence) {
        box.outliers.push_back({labels[i], v});
      } else {
        box.whisker_low = std::min(box.whisker_low, v);
        box.whisker_high = std::max(box.whisker_high, v);
      }
    }
    stats.clusters.push_back(std::move(box));
  }
  return stats;
}

BoxplotStats distance_distribution(const FeatureMatrix& features, const ClusterModel& model) {
  const auto distances = distances_to_center(features, model);
  std::vector<std::string> labels;
  for (const auto& d : features.districts) labels.push_back(d.code);
  return boxplot_from_distances(distances, model.assignments, model.k, labels);
}

std::string anova_csv(const AnovaReport& report) {
  std::string out = csv_line({"variable", "F", "df1", "df2", "between_ss", "within_ss"});
  for (const auto& row : report.rows) {
    out += csv_line({row.variable, row.infinite() ? "Infinite" : format_number(row.f),
                     std::to_string(row.df_between), std::to_string(row.df_within),
                     format_number(row.between_ss), format_number(row.within_ss)});
  }
  return out;
}

std::string sizes_csv(const std::vector<std::size_t>& sizes) {
  std::string out = csv_line({"cluster_id", "districts"});
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    out += csv_line({std::to_string(c), std::to_string(sizes[c])});
  }
  return out;
}

std::string boxplot_csv(const BoxplotStats& stats) {
  std::string out = csv_line({"cluster_id", "size", "min", "q1", "median", "q3", "max", "mean",
                              "lower_fence", "upper_fence", "outlier_count", "outliers"});
  for (const auto& b : stats.clusters) {
    std::string outliers;
    for (const auto& o : b.outliers) {
      if (!outliers.empty()) outliers += ';';
      outliers += o.district + "=" + format_number(o.distance);
    }
    out += csv_line({std::to_string(b.cluster_id), std::to_string(b.size), format_number(b.quartiles.min),
                     format_number(b.quartiles.q1), format_number(b.quartiles.median),
                     format_number(b.quartiles.q3), format_number(b.quartiles.max), format_number(b.mean),
                     format_number(b.lower_fence), format_number(b.upper_fence),
                     std::to_string(b.outliers.size()), outliers});
  }
  return out;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw DataError("DimensionMismatch", "labelings differ in length");
  const std::size_t n = a.size();
  if (n < 2) return 1.0;
  const auto ka = static_cast<std::size_t>(*std::max_element(a.begin(), a.end())) + 1;
  const auto kb = static_cast<std::size_t>(*std::max_element(b.begin(), b.end())) + 1;
  std::vector<double> table(ka * kb, 0.0);
  std::vector<double> rows(ka, 0.0);
  std::vector<double> cols(kb, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = static_cast<std::size_t>(a[i]);
    const auto y = static_cast<std::size_t>(b[i]);
    table[x * kb + y] += 1.0;
    rows[x] += 1.0;
    cols[y] += 1.0;
  }
  const auto pairs = [](double m) { return m * (m - 1.0) / 2.0; };
  double index = 0.0;
  for (double c : table) index += pairs(c);
  double sum_a = 0.0;
  for (double c : rows) sum_a += pairs(c);
  double sum_b = 0.0;
  for (double c : cols) sum_b += pairs(c);
  const double expected = sum_a * sum_b / pairs(static_cast<double>(n));
  const double maximum = 0.5 * (sum_a + sum_b);
  if (maximum == expected) return 1.0;
  return (index - expected) / (maximum - expected);
}

}  // namespace geodemo
