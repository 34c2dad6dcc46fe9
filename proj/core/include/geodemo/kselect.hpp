#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geodemo/cluster.hpp"
#include "geodemo/matrix.hpp"
#include "geodemo/preprocess.hpp"

namespace geodemo {

/// First principal component of the feature matrix.
struct PC1 {
  Vector loadings;  // unit length, largest-|entry| positive
  Vector scores;    // z * loadings
  double eigenvalue = 0.0;
  int iterations = 0;
};

/// Top eigenpair of the sample covariance by power iteration.
/// Errors: TooFewDistricts, DegenerateCovariance.
PC1 pca_first_component(const FeatureMatrix& features);

struct GapOptions {
  std::size_t k_min = 1;
  std::size_t k_max = 10;
  std::size_t reference_sets = 50;  // B
  std::size_t reps = 500;
  std::size_t restarts = 25;  // K-means restarts per fit
  KMeansOptions kmeans;
  unsigned threads = 1;
};

/// One repetition of the gap procedure.
struct GapRun {
  std::vector<double> log_w;      // observed, per k
  std::vector<double> log_w_ref;  // mean over reference sets, per k
  std::vector<double> gap;
  std::vector<double> s;          // sd_ref * sqrt(1 + 1/B)
  std::size_t selected_k = 0;
};

struct GapRow {
  std::size_t k = 0;
  double gap_mean = 0.0;
  double s_mean = 0.0;
  double log_w_mean = 0.0;
  double log_w_ref_mean = 0.0;
  std::size_t selected = 0;  // repetitions choosing this k
  double selection_frequency = 0.0;
};

struct GapReport {
  std::size_t k_min = 1;
  std::size_t k_max = 1;
  std::size_t reps = 0;
  std::size_t reference_sets = 0;
  std::vector<GapRow> rows;              // one per k
  std::vector<std::size_t> selections;   // per repetition
  std::size_t modal_k = 0;               // ties: smallest k
};

/// Smallest k with gap(k) >= gap(k+1) - s(k+1); the last k if none.
/// `gap` and `s` are indexed from k_min.
std::size_t one_se_select(std::span<const double> gap, std::span<const double> s,
                          std::size_t k_min);

/// Uniform reference set over the per-column bounding box of `points`.
Matrix uniform_reference(const Matrix& points, std::uint64_t seed);

/// Single repetition on raw points. Errors: KRangeInvalid, DegenerateData.
GapRun gap_once(const Matrix& points, const GapOptions& options, std::uint64_t seed);

/// `reps` independent repetitions with seeds derived from `master_seed`,
/// aggregated per k and by modal selection.
/// Errors: KRangeInvalid, BadOptions, DegenerateData.
GapReport gap_statistic(const FeatureMatrix& features, const GapOptions& options,
                        std::uint64_t master_seed);

struct ClustergramOptions {
  std::size_t k_min = 1;
  std::size_t k_max = 12;
  std::size_t reps = 100;
  std::size_t restarts = 25;
  KMeansOptions kmeans;
  unsigned threads = 1;
};

struct ClustergramRow {
  int rep = 0;  // -1 for averaged rows
  std::size_t k = 0;
  int cluster_id = 0;
  double pc1_mean = 0.0;  // mean PC1 score of the members
  double size = 0.0;      // member count (a mean when averaged)
  int parent = -1;        // cluster at k-1 sharing the most members
};

struct ClustergramTable {
  std::size_t k_min = 1;
  std::size_t k_max = 1;
  std::size_t reps = 0;
  bool averaged = false;
  std::vector<ClustergramRow> rows;  // ordered by rep, k, cluster_id
};

/// Errors: KRangeInvalid.
ClustergramTable clustergram(const FeatureMatrix& features, const ClustergramOptions& options,
                             std::uint64_t master_seed);

/// Collapses repetitions: per (k, cluster_id) mean PC1 and size, modal parent.
ClustergramTable average_clustergram(const ClustergramTable& table);

/// Smallest gap between adjacent cluster means at each k >= 2, averaged
/// over repetitions. Pairs of (k, separation).
std::vector<std::pair<std::size_t, double>> clustergram_separation(const ClustergramTable& table);

struct KSelection {
  std::size_t k = 0;
  bool overridden = false;
  std::size_t gap_modal_k = 0;
  std::optional<std::size_t> gap_runner_up;
  std::vector<std::size_t> clustergram_candidates;  // two best-separated ks
  std::string rationale;
};

KSelection select_k(const GapReport& gap, const ClustergramTable& clustergram,
                    std::optional<std::size_t> override_k = std::nullopt);

std::string gap_csv(const GapReport& report);
std::string clustergram_csv(const ClustergramTable& table);
std::string k_selection_json(const KSelection& selection);

}  // namespace geodemo
