#include "geodemo/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

#include "geodemo/csv.hpp"
#include "geodemo/error.hpp"
#include "geodemo/parallel.hpp"
#include "geodemo/rng.hpp"

namespace geodemo {

namespace {

using Index = Eigen::Index;

using Lanes = double __attribute__((vector_size(32)));

#define GEODEMO_HOT __attribute__((target_clones("avx2", "default")))

// Rows are zero-padded to a multiple of four. Each lane accumulates one
// residue class of features and the lanes are combined in a fixed order,
// so the value is the same whichever instruction set evaluates it.
inline double squared_distance(const double* a, const double* b, std::size_t p) {
  Lanes acc = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t j = 0; j < p; j += 4) {
    Lanes x;
    Lanes y;
    std::memcpy(&x, a + j, sizeof x);
    std::memcpy(&y, b + j, sizeof y);
    const Lanes t = x - y;
    acc += t * t;
  }
  return (acc[0] + acc[2]) + (acc[1] + acc[3]);
}

void check_k(std::size_t k, std::size_t n) {
  if (k == 0) throw ConfigError("KZero", "k must be at least 1");
  if (k > n) {
    throw ConfigError("KTooLarge", "k = " + std::to_string(k) + " exceeds " +
                                       std::to_string(n) + " districts");
  }
}

}  // namespace

std::vector<std::size_t> ClusterModel::sizes() const {
  std::vector<std::size_t> out(k, 0);
  for (int a : assignments) ++out[static_cast<std::size_t>(a)];
  return out;
}

KMeansWorkspace::KMeansWorkspace(const Matrix& points)
    : n_(static_cast<std::size_t>(points.rows())),
      d_(static_cast<std::size_t>(points.cols())),
      p_((d_ + 3) / 4 * 4),
      points_(n_ * p_, 0.0),
      assign_(n_),
      distance_(n_),
      order_(n_) {
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < d_; ++j) points_[i * p_ + j] = points(static_cast<Index>(i), static_cast<Index>(j));
  }
  data_ = points_.data();
}

std::vector<double> KMeansWorkspace::centers() const {
  std::vector<double> out(centers_.size() / p_ * d_);
  for (std::size_t c = 0; c < centers_.size() / p_; ++c) {
    std::copy_n(centers_.data() + c * p_, d_, out.begin() + static_cast<std::ptrdiff_t>(c * d_));
  }
  return out;
}

void KMeansWorkspace::initialize(std::size_t k, std::uint64_t seed, InitMethod method) {
  Rng rng(seed);
  centers_.assign(k * p_, 0.0);
  if (method == InitMethod::Forgy) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    for (std::size_t t = 0; t < k; ++t) {
      const std::size_t r = t + static_cast<std::size_t>(rng.below(n_ - t));
      std::swap(order_[t], order_[r]);
      std::copy_n(data_ + order_[t] * p_, p_, centers_.begin() + static_cast<std::ptrdiff_t>(t * p_));
    }
    return;
  }

  // k-means++: D^2 weighting over points not yet chosen.
  std::vector<bool> chosen(n_, false);
  std::size_t first = static_cast<std::size_t>(rng.below(n_));
  chosen[first] = true;
  std::copy_n(data_ + first * p_, p_, centers_.begin());
  for (std::size_t i = 0; i < n_; ++i) distance_[i] = squared_distance(data_ + i * p_, data_ + first * p_, p_);
  for (std::size_t t = 1; t < k; ++t) {
    double total = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (!chosen[i]) total += distance_[i];
    }
    std::size_t pick = n_;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      for (std::size_t i = 0; i < n_; ++i) {
        if (chosen[i]) continue;
        pick = i;
        target -= distance_[i];
        if (target < 0.0) break;
      }
    } else {
      // All remaining points coincide with a centre; take any unchosen one.
      std::size_t skip = static_cast<std::size_t>(rng.below(n_ - t));
      for (std::size_t i = 0; i < n_; ++i) {
        if (chosen[i]) continue;
        if (skip-- == 0) {
          pick = i;
          break;
        }
      }
    }
    chosen[pick] = true;
    double* c = centers_.data() + t * p_;
    std::copy_n(data_ + pick * p_, p_, c);
    for (std::size_t i = 0; i < n_; ++i) {
      distance_[i] = std::min(distance_[i], squared_distance(data_ + i * p_, c, p_));
    }
  }
}

// Centres are held feature-major in blocks of four so one vector lane
// carries one centre; each distance is summed over features in order.
GEODEMO_HOT std::size_t KMeansWorkspace::assign_points(std::size_t k) {
  const std::size_t blocks = (k + 3) / 4;
  transposed_.assign(blocks * d_ * 4, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t j = 0; j < d_; ++j) transposed_[((c / 4) * d_ + j) * 4 + c % 4] = centers_[c * p_ + j];
  }
  lane_distance_.resize(blocks * 4 * 4);
  std::size_t changed = 0;
  std::size_t i = 0;
  // Four points per pass keep four independent accumulation chains busy.
  for (; i < n_; i += 4) {
    const std::size_t group = std::min<std::size_t>(4, n_ - i);
    const double* x0 = data_ + i * p_;
    const double* x1 = data_ + (i + std::min<std::size_t>(1, group - 1)) * p_;
    const double* x2 = data_ + (i + std::min<std::size_t>(2, group - 1)) * p_;
    const double* x3 = data_ + (i + std::min<std::size_t>(3, group - 1)) * p_;
    for (std::size_t blk = 0; blk < blocks; ++blk) {
      const double* ct = transposed_.data() + blk * d_ * 4;
      Lanes a0 = {0.0, 0.0, 0.0, 0.0};
      Lanes a1 = a0;
      Lanes a2 = a0;
      Lanes a3 = a0;
      for (std::size_t j = 0; j < d_; ++j) {
        Lanes c;
        std::memcpy(&c, ct + j * 4, sizeof c);
        const Lanes t0 = x0[j] - c;
        const Lanes t1 = x1[j] - c;
        const Lanes t2 = x2[j] - c;
        const Lanes t3 = x3[j] - c;
        a0 += t0 * t0;
        a1 += t1 * t1;
        a2 += t2 * t2;
        a3 += t3 * t3;
      }
      double* out = lane_distance_.data() + blk * 4;
      const std::size_t stride = blocks * 4;
      std::memcpy(out, &a0, sizeof a0);
      std::memcpy(out + stride, &a1, sizeof a1);
      std::memcpy(out + 2 * stride, &a2, sizeof a2);
      std::memcpy(out + 3 * stride, &a3, sizeof a3);
    }
    for (std::size_t g = 0; g < group; ++g) {
      const double* dist = lane_distance_.data() + g * blocks * 4;
      int best = 0;
      double best_d = dist[0];
      for (std::size_t c = 1; c < k; ++c) {
        if (dist[c] < best_d) {
          best_d = dist[c];
          best = static_cast<int>(c);
        }
      }
      changed += best != assign_[i + g];
      assign_[i + g] = best;
      distance_[i + g] = best_d;
    }
  }
  return changed;
}

GEODEMO_HOT void KMeansWorkspace::update_centers(std::size_t k) {
  sums_.assign(k * p_, 0.0);
  counts_.assign(k, 0);
  for (std::size_t i = 0; i < n_; ++i) {
    const auto c = static_cast<std::size_t>(assign_[i]);
    ++counts_[c];
    const double* x = data_ + i * p_;
    double* s = sums_.data() + c * p_;
    for (std::size_t j = 0; j < p_; j += 4) {
      Lanes a;
      Lanes b;
      std::memcpy(&a, s + j, sizeof a);
      std::memcpy(&b, x + j, sizeof b);
      a += b;
      std::memcpy(s + j, &a, sizeof a);
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts_[c] == 0) continue;
    const double inv = 1.0 / static_cast<double>(counts_[c]);
    for (std::size_t j = 0; j < p_; ++j) centers_[c * p_ + j] = sums_[c * p_ + j] * inv;
  }

  // An empty cluster takes the point farthest from its (new) centre among
  // clusters that can spare one.
  for (std::size_t e = 0; e < k; ++e) {
    if (counts_[e] != 0) continue;
    std::size_t far = n_;
    double far_d = -1.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const auto c = static_cast<std::size_t>(assign_[i]);
      if (counts_[c] < 2) continue;
      const double dist = squared_distance(data_ + i * p_, centers_.data() + c * p_, p_);
      if (dist > far_d) {
        far_d = dist;
        far = i;
      }
    }
    const auto donor = static_cast<std::size_t>(assign_[far]);
    const double* x = data_ + far * p_;
    --counts_[donor];
    const double inv = 1.0 / static_cast<double>(counts_[donor]);
    for (std::size_t j = 0; j < p_; ++j) {
      sums_[donor * p_ + j] -= x[j];
      centers_[donor * p_ + j] = sums_[donor * p_ + j] * inv;
      sums_[e * p_ + j] = x[j];
      centers_[e * p_ + j] = x[j];
    }
    counts_[e] = 1;
    assign_[far] = static_cast<int>(e);
  }
}

GEODEMO_HOT double KMeansWorkspace::current_wcss(std::size_t /*k*/) const {
  double total = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    total += squared_distance(data_ + i * p_, centers_.data() + static_cast<std::size_t>(assign_[i]) * p_, p_);
  }
  return total;
}

double KMeansWorkspace::fit(std::size_t k, std::uint64_t seed, const KMeansOptions& options) {
  check_k(k, n_);
  initialize(k, seed, options.init);
  std::fill(assign_.begin(), assign_.end(), -1);
  trace_.clear();
  converged_ = false;
  iterations_ = 0;
  const double tol2 = options.tolerance * options.tolerance;

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    iterations_ = iter;
    const std::size_t changed = assign_points(k);
    if (iter > 1 && changed == 0) {
      converged_ = true;
      break;
    }
    previous_ = centers_;
    update_centers(k);
    if (options.record_trace) trace_.push_back(current_wcss(k));
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      shift = std::max(shift, squared_distance(centers_.data() + c * p_, previous_.data() + c * p_, p_));
    }
    if (shift < tol2) {
      converged_ = true;
      break;
    }
  }
  return current_wcss(k);
}

double KMeansWorkspace::best_wcss(std::size_t k, std::size_t restarts, std::uint64_t seed,
                                  const KMeansOptions& options) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < restarts; ++r) {
    best = std::min(best, fit(k, restart_seed(seed, r), options));
  }
  return best;
}

std::uint64_t restart_seed(std::uint64_t master_seed, std::size_t index) {
  return derive_seed(master_seed, index);
}

namespace {

ClusterModel snapshot(const KMeansWorkspace& ws, std::size_t k, double wcss) {
  ClusterModel m;
  m.k = k;
  m.centers.resize(static_cast<Index>(k), static_cast<Index>(ws.dims()));
  const std::vector<double> centers = ws.centers();
  std::copy(centers.begin(), centers.begin() + static_cast<std::ptrdiff_t>(k * ws.dims()), m.centers.data());
  m.assignments = ws.assignments();
  m.wcss = wcss;
  m.iterations = ws.iterations();
  m.converged = ws.converged();
  m.wcss_trace = ws.trace();
  return m;
}

}  // namespace

ClusterModel kmeans_once(const Matrix& points, std::size_t k, std::uint64_t seed,
                         const KMeansOptions& options) {
  KMeansWorkspace ws(points);
  const double wcss = ws.fit(k, seed, options);
  ClusterModel m = snapshot(ws, k, wcss);
  m.seed = seed;
  m.run_seed = seed;
  m.unconverged_restarts = m.converged ? 0 : 1;
  canonicalize(m);
  return m;
}

ClusterModel kmeans_once(const FeatureMatrix& features, std::size_t k, std::uint64_t seed,
                         const KMeansOptions& options) {
  return kmeans_once(features.z, k, seed, options);
}

ClusterModel kmeans_restarts(const Matrix& points, std::size_t k, std::size_t restarts,
                             std::uint64_t master_seed, const KMeansOptions& options,
                             unsigned threads) {
  if (restarts == 0) throw ConfigError("BadRestarts", "restarts must be at least 1");
  check_k(k, static_cast<std::size_t>(points.rows()));

  // Contiguous chunks of restart indices; each chunk keeps its own best.
  const std::size_t chunks = std::min<std::size_t>(std::max(1U, threads), restarts);
  struct ChunkBest {
    ClusterModel model;
    std::size_t index = 0;
    std::size_t unconverged = 0;
    bool set = false;
  };
  std::vector<ChunkBest> best(chunks);
  parallel_for(chunks, threads, [&](std::size_t c) {
    const std::size_t begin = restarts * c / chunks;
    const std::size_t end = restarts * (c + 1) / chunks;
    KMeansWorkspace ws(points);
    auto& slot = best[c];
    for (std::size_t r = begin; r < end; ++r) {
      const double wcss = ws.fit(k, restart_seed(master_seed, r), options);
      if (!ws.converged()) ++slot.unconverged;
      if (!slot.set || wcss < slot.model.wcss) {
        slot.model = snapshot(ws, k, wcss);
        slot.index = r;
        slot.set = true;
      }
    }
  });

  std::size_t winner = 0;
  std::size_t unconverged = 0;
  for (std::size_t c = 0; c < chunks; ++c) {
    unconverged += best[c].unconverged;
    if (best[c].model.wcss < best[winner].model.wcss) winner = c;
  }
  ClusterModel m = std::move(best[winner].model);
  m.seed = master_seed;
  m.best_restart = best[winner].index;
  m.run_seed = restart_seed(master_seed, m.best_restart);
  m.restarts = restarts;
  m.unconverged_restarts = unconverged;
  canonicalize(m);
  return m;
}

ClusterModel kmeans_restarts(const FeatureMatrix& features, std::size_t k, std::size_t restarts,
                             std::uint64_t master_seed, const KMeansOptions& options,
                             unsigned threads) {
  return kmeans_restarts(features.z, k, restarts, master_seed, options, threads);
}

std::vector<double> distances_to_center(const Matrix& points, const ClusterModel& model) {
  if (model.assignments.size() != static_cast<std::size_t>(points.rows()) ||
      model.centers.cols() != points.cols() ||
      model.centers.rows() != static_cast<Index>(model.k)) {
    throw DataError("DimensionMismatch", "model was not fitted on these features");
  }
  std::vector<double> out(model.assignments.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const int c = model.assignments[i];
    if (c < 0 || static_cast<std::size_t>(c) >= model.k) {
      throw DataError("DimensionMismatch", "assignment outside [0, k)");
    }
    out[i] = (points.row(static_cast<Index>(i)) - model.centers.row(c)).norm();
  }
  return out;
}

std::vector<double> distances_to_center(const FeatureMatrix& features, const ClusterModel& model) {
  return distances_to_center(features.z, model);
}

double compute_wcss(const Matrix& points, const Matrix& centers, const std::vector<int>& assignments) {
  double total = 0.0;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    total += (points.row(static_cast<Index>(i)) - centers.row(assignments[i])).squaredNorm();
  }
  return total;
}

void canonicalize(ClusterModel& model) {
  const std::size_t k = model.k;
  std::vector<std::size_t> size(k, 0);
  std::vector<std::size_t> first(k, std::numeric_limits<std::size_t>::max());
  for (std::size_t i = 0; i < model.assignments.size(); ++i) {
    const auto c = static_cast<std::size_t>(model.assignments[i]);
    ++size[c];
    first[c] = std::min(first[c], i);
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (size[a] != size[b]) return size[a] > size[b];
    return first[a] < first[b];
  });
  std::vector<int> relabel(k);
  Matrix centers(model.centers.rows(), model.centers.cols());
  for (std::size_t rank = 0; rank < k; ++rank) {
    relabel[order[rank]] = static_cast<int>(rank);
    centers.row(static_cast<Index>(rank)) = model.centers.row(static_cast<Index>(order[rank]));
  }
  for (int& a : model.assignments) a = relabel[static_cast<std::size_t>(a)];
  model.centers = std::move(centers);
}

ClusterModel model_from_parts(const Matrix& points, Matrix centers, std::vector<int> assignments) {
  ClusterModel m;
  m.k = static_cast<std::size_t>(centers.rows());
  m.centers = std::move(centers);
  m.assignments = std::move(assignments);
  m.wcss = compute_wcss(points, m.centers, m.assignments);
  m.converged = true;
  return m;
}

std::string assignments_csv(const FeatureMatrix& features, const ClusterModel& model) {
  std::string out = csv_line({"district_code", "cluster_id"});
  for (std::size_t i = 0; i < model.assignments.size(); ++i) {
    out += csv_line({features.districts[i].code, std::to_string(model.assignments[i])});
  }
  return out;
}

std::string centers_csv(const FeatureMatrix& features, const ClusterModel& model) {
  std::string out = csv_line({"cluster_id", "variable", "center_z"});
  for (std::size_t c = 0; c < model.k; ++c) {
    for (std::size_t j = 0; j < features.cols(); ++j) {
      out += csv_line({std::to_string(c), features.variables[j].name,
                       format_number(model.centers(static_cast<Index>(c), static_cast<Index>(j)))});
    }
  }
  return out;
}

}  // namespace geodemo
