#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "geodemo/cluster.hpp"
#include "geodemo/preprocess.hpp"

namespace geodemo {

struct AnovaRow {
  std::string variable;
  double f = 0.0;  // +inf when the within-group SS is zero
  double between_ss = 0.0;
  double within_ss = 0.0;
  std::size_t df_between = 0;  // k - 1
  std::size_t df_within = 0;   // n - k
  bool infinite() const;
};

struct AnovaReport {
  std::vector<AnovaRow> rows;
  double mean_f = 0.0;    // over finite F values
  double spread_f = 0.0;  // max F - min F over finite values
  std::size_t infinite_count = 0;
};

/// One-way ANOVA of every feature column against the cluster labels.
/// `k` is the number of clusters (labels in [0, k)).
/// Errors: SingleCluster (k < 2), TooFewDistricts (n <= k), DimensionMismatch.
AnovaReport anova_f(const FeatureMatrix& features, const std::vector<int>& assignments, std::size_t k);

/// Counts per cluster id in [0, k); zero-count ids stay in the output.
/// With k = 0 the size is inferred from the largest id.
std::vector<std::size_t> cluster_sizes(const std::vector<int>& assignments, std::size_t k = 0);

/// Adjusted Rand index between two labelings of the same items (Hubert and
/// Arabie). Labels are arbitrary non-negative ints. Two single-cluster
/// labelings score 1. Errors: DimensionMismatch.
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

/// Five-number summary with type-7 (linear interpolation) quartiles.
struct Quartiles {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

/// Errors: EmptySample.
Quartiles type7_quartiles(std::vector<double> values);
/// Type-7 sample quantile of sorted data, p in [0, 1].
double type7_quantile(const std::vector<double>& sorted, double p);

struct Outlier {
  std::string district;
  double distance = 0.0;
};

struct ClusterBox {
  int cluster_id = 0;
  std::size_t size = 0;
  Quartiles quartiles;
  double mean = 0.0;
  double lower_fence = 0.0;  // Q1 - 1.5 IQR
  double upper_fence = 0.0;  // Q3 + 1.5 IQR
  double whisker_low = 0.0;  // most extreme non-outlier values
  double whisker_high = 0.0;
  std::vector<Outlier> outliers;  // ordered by row
};

struct BoxplotStats {
  std::vector<ClusterBox> clusters;
};

/// Tukey boxplot of Euclidean distances to the assigned centre, per cluster.
/// Errors: EmptyCluster, DimensionMismatch.
BoxplotStats distance_distribution(const FeatureMatrix& features, const ClusterModel& model);

/// Same, from precomputed distances and labels.
BoxplotStats boxplot_from_distances(const std::vector<double>& distances, const std::vector<int>& assignments,
                                    std::size_t k, const std::vector<std::string>& labels);

std::string anova_csv(const AnovaReport& report);
std::string sizes_csv(const std::vector<std::size_t>& sizes);
std::string boxplot_csv(const BoxplotStats& stats);

}  // namespace geodemo
