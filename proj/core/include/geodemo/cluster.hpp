#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "geodemo/matrix.hpp"
#include "geodemo/preprocess.hpp"

namespace geodemo {

enum class InitMethod { Forgy, KMeansPlusPlus };

struct KMeansOptions {
  int max_iterations = 300;
  double tolerance = 1e-9;  // max centre shift (Euclidean) that counts as converged
  InitMethod init = InitMethod::Forgy;
  bool record_trace = false;  // keep WCSS after every update step
};

/// A fitted partition. Cluster ids are canonical: descending size, ties
/// broken by the lowest member row index.
struct ClusterModel {
  std::size_t k = 0;
  Matrix centers;                // k x d, z-space
  std::vector<int> assignments;  // one id in [0, k) per district
  double wcss = 0.0;
  std::uint64_t seed = 0;       // master seed (or the single-run seed)
  std::uint64_t run_seed = 0;   // seed of the winning run
  std::size_t best_restart = 0;
  int iterations = 0;
  bool converged = false;
  std::size_t restarts = 1;
  std::size_t unconverged_restarts = 0;
  std::vector<double> wcss_trace;

  std::vector<std::size_t> sizes() const;
};

/// Reusable Lloyd solver over one point set; keeps its buffers between fits
/// so repeated restarts do not allocate. Not thread-safe; use one per thread.
class KMeansWorkspace {
 public:
  explicit KMeansWorkspace(const Matrix& points);

  /// One Lloyd run from `seed`. Returns the WCSS; the partition is
  /// available through the accessors until the next call.
  double fit(std::size_t k, std::uint64_t seed, const KMeansOptions& options = {});

  /// Minimum WCSS over `restarts` runs seeded by derive_seed(seed, r).
  double best_wcss(std::size_t k, std::size_t restarts, std::uint64_t seed,
                   const KMeansOptions& options = {});

  const std::vector<int>& assignments() const { return assign_; }
  std::vector<double> centers() const;  // k x d, row-major
  int iterations() const { return iterations_; }
  bool converged() const { return converged_; }
  const std::vector<double>& trace() const { return trace_; }
  std::size_t rows() const { return n_; }
  std::size_t dims() const { return d_; }

 private:
  void initialize(std::size_t k, std::uint64_t seed, InitMethod method);
  std::size_t assign_points(std::size_t k);
  void update_centers(std::size_t k);
  double current_wcss(std::size_t k) const;

  std::size_t n_;
  std::size_t d_;
  std::size_t p_;  // row stride: d rounded up to a multiple of 4
  std::vector<double> points_;  // n x p, zero-padded copy
  const double* data_ = nullptr;
  std::vector<double> centers_;
  std::vector<double> previous_;
  std::vector<double> sums_;
  std::vector<std::size_t> counts_;
  std::vector<int> assign_;
  std::vector<double> distance_;  // squared distance to own centre
  std::vector<double> transposed_;  // centres in feature-major blocks of four
  std::vector<double> lane_distance_;
  std::vector<std::size_t> order_;
  std::vector<double> trace_;
  int iterations_ = 0;
  bool converged_ = false;
};

/// Seed of restart `index` under `master_seed`.
std::uint64_t restart_seed(std::uint64_t master_seed, std::size_t index);

/// Single Lloyd run from k distinct points sampled with `seed`.
/// Errors: KZero, KTooLarge.
ClusterModel kmeans_once(const Matrix& points, std::size_t k, std::uint64_t seed,
                         const KMeansOptions& options = {});
ClusterModel kmeans_once(const FeatureMatrix& features, std::size_t k, std::uint64_t seed,
                         const KMeansOptions& options = {});

/// Best-WCSS model over `restarts` runs (ties go to the lowest restart
/// index). The result does not depend on `threads`.
ClusterModel kmeans_restarts(const Matrix& points, std::size_t k, std::size_t restarts,
                             std::uint64_t master_seed, const KMeansOptions& options = {},
                             unsigned threads = 1);
ClusterModel kmeans_restarts(const FeatureMatrix& features, std::size_t k, std::size_t restarts,
                             std::uint64_t master_seed, const KMeansOptions& options = {},
                             unsigned threads = 1);

/// Euclidean distance of each district to its own centre.
/// Errors: DimensionMismatch.
std::vector<double> distances_to_center(const Matrix& points, const ClusterModel& model);
std::vector<double> distances_to_center(const FeatureMatrix& features, const ClusterModel& model);

/// Sum of squared distances to assigned centres.
double compute_wcss(const Matrix& points, const Matrix& centers, const std::vector<int>& assignments);

/// Relabels clusters by descending size, ties by lowest member index.
void canonicalize(ClusterModel& model);

/// Rebuilds a model from persisted assignments and centres (no refit).
ClusterModel model_from_parts(const Matrix& points, Matrix centers, std::vector<int> assignments);

std::string assignments_csv(const FeatureMatrix& features, const ClusterModel& model);
std::string centers_csv(const FeatureMatrix& features, const ClusterModel& model);

}  // namespace geodemo
