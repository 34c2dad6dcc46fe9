#include "geodemo/kselect.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "geodemo/csv.hpp"
#include "geodemo/error.hpp"
#include "geodemo/parallel.hpp"
#include "geodemo/rng.hpp"

namespace geodemo {

namespace {

using Index = Eigen::Index;

constexpr int kPowerIterationCap = 100000;
constexpr double kPowerTolerance = 1e-13;

void check_range(std::size_t k_min, std::size_t k_max, std::size_t upper) {
  if (k_min < 1 || k_min > k_max || k_max > upper) {
    throw ConfigError("KRangeInvalid", "k range " + std::to_string(k_min) + ".." +
                                           std::to_string(k_max) + " must lie within 1.." +
                                           std::to_string(upper));
  }
}

double checked_log(double w) {
  if (!(w > 0.0)) {
    throw NumericalError("DegenerateData",
                         "within-cluster dispersion is zero (more clusters than distinct points)");
  }
  return std::log(w);
}

}  // namespace

PC1 pca_first_component(const FeatureMatrix& features) {
  const Matrix& z = features.z;
  const Index n = z.rows();
  const Index d = z.cols();
  if (n < 2 || d < 1) throw DataError("TooFewDistricts", "PCA needs >= 2 districts and >= 1 variable");

  const Eigen::RowVectorXd mean = z.colwise().mean();
  const Matrix centered = z.rowwise() - mean;
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  if (cov.cwiseAbs().maxCoeff() == 0.0) {
    throw NumericalError("DegenerateCovariance", "covariance matrix is all zero");
  }

  // Start from the covariance column of largest norm: it lies in the range
  // of the matrix and is never orthogonal to every leading direction.
  Index start = 0;
  cov.colwise().norm().maxCoeff(&start);
  Vector v = cov.col(start).normalized();
  PC1 pc;
  for (int it = 1; it <= kPowerIterationCap; ++it) {
    Vector next = cov * v;
    const double norm = next.norm();
    next /= norm;
    pc.iterations = it;
    const double delta = (next - v).norm();
    v = std::move(next);
    if (delta < kPowerTolerance) break;
  }
  Index largest = 0;
  v.cwiseAbs().maxCoeff(&largest);
  if (v(largest) < 0) v = -v;
  pc.loadings = v;
  pc.eigenvalue = v.dot(cov * v);
  pc.scores = z * v;
  return pc;
}

std::size_t one_se_select(std::span<const double> gap, std::span<const double> s,
                          std::size_t k_min) {
  for (std::size_t i = 0; i + 1 < gap.size(); ++i) {
    if (gap[i] >= gap[i + 1] - s[i + 1]) return k_min + i;
  }
  return k_min + gap.size() - 1;
}

Matrix uniform_reference(const Matrix& points, std::uint64_t seed) {
  const Eigen::RowVectorXd lo = points.colwise().minCoeff();
  const Eigen::RowVectorXd hi = points.colwise().maxCoeff();
  Rng rng(seed);
  Matrix ref(points.rows(), points.cols());
  for (Index i = 0; i < ref.rows(); ++i) {
    for (Index j = 0; j < ref.cols(); ++j) ref(i, j) = rng.uniform(lo(j), hi(j));
  }
  return ref;
}

GapRun gap_once(const Matrix& points, const GapOptions& options, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(points.rows());
  check_range(options.k_min, options.k_max, n > 0 ? n - 1 : 0);
  if (options.reference_sets < 2) throw ConfigError("BadOptions", "need at least 2 reference sets");
  if (options.restarts < 1) throw ConfigError("BadOptions", "restarts must be at least 1");

  const std::size_t span = options.k_max - options.k_min + 1;
  const std::size_t b_count = options.reference_sets;
  GapRun run;
  run.log_w.resize(span);
  std::vector<std::vector<double>> ref(span, std::vector<double>(b_count));

  {
    KMeansWorkspace ws(points);
    const std::uint64_t set_seed = derive_seed(seed, 0);
    for (std::size_t i = 0; i < span; ++i) {
      const std::size_t k = options.k_min + i;
      run.log_w[i] = checked_log(ws.best_wcss(k, options.restarts, derive_seed(set_seed, k), options.kmeans));
    }
  }
  for (std::size_t b = 0; b < b_count; ++b) {
    const std::uint64_t set_seed = derive_seed(seed, b + 1);
    const Matrix reference = uniform_reference(points, derive_seed(set_seed, 0));
    KMeansWorkspace ws(reference);
    for (std::size_t i = 0; i < span; ++i) {
      const std::size_t k = options.k_min + i;
      ref[i][b] = checked_log(ws.best_wcss(k, options.restarts, derive_seed(set_seed, k), options.kmeans));
    }
  }

  const double B = static_cast<double>(b_count);
  run.log_w_ref.resize(span);
  run.gap.resize(span);
  run.s.resize(span);
  for (std::size_t i = 0; i < span; ++i) {
    const double mean = std::accumulate(ref[i].begin(), ref[i].end(), 0.0) / B;
    double ss = 0.0;
    for (double v : ref[i]) ss += (v - mean) * (v - mean);
    run.log_w_ref[i] = mean;
    run.gap[i] = mean - run.log_w[i];
    run.s[i] = std::sqrt(ss / B) * std::sqrt(1.0 + 1.0 / B);
  }
  run.selected_k = one_se_select(run.gap, run.s, options.k_min);
  return run;
}

GapReport gap_statistic(const FeatureMatrix& features, const GapOptions& options,
                        std::uint64_t master_seed) {
  if (options.reps < 1) throw ConfigError("BadOptions", "gap repetitions must be at least 1");
  const auto n = features.rows();
  check_range(options.k_min, options.k_max, n > 0 ? n - 1 : 0);

  std::vector<GapRun> runs(options.reps);
  parallel_for(options.reps, options.threads, [&](std::size_t r) {
    runs[r] = gap_once(features.z, options, derive_seed(master_seed, r));
  });

  GapReport report;
  report.k_min = options.k_min;
  report.k_max = options.k_max;
  report.reps = options.reps;
  report.reference_sets = options.reference_sets;
  const std::size_t span = options.k_max - options.k_min + 1;
  const double reps = static_cast<double>(options.reps);
  for (std::size_t i = 0; i < span; ++i) {
    GapRow row;
    row.k = options.k_min + i;
    for (const auto& run : runs) {
      row.gap_mean += run.gap[i];
      row.s_mean += run.s[i];
      row.log_w_mean += run.log_w[i];
      row.log_w_ref_mean += run.log_w_ref[i];
      if (run.selected_k == row.k) ++row.selected;
    }
    row.gap_mean /= reps;
    row.s_mean /= reps;
    row.log_w_mean /= reps;
    row.log_w_ref_mean /= reps;
    row.selection_frequency = static_cast<double>(row.selected) / reps;
    report.rows.push_back(row);
  }
  for (const auto& run : runs) report.selections.push_back(run.selected_k);
  auto modal = std::max_element(report.rows.begin(), report.rows.end(),
                                [](const GapRow& a, const GapRow& b) { return a.selected < b.selected; });
  report.modal_k = modal->k;
  return report;
}

ClustergramTable clustergram(const FeatureMatrix& features, const ClustergramOptions& options,
                             std::uint64_t master_seed) {
  check_range(options.k_min, options.k_max, features.rows());
  if (options.reps < 1 || options.restarts < 1) {
    throw ConfigError("BadOptions", "clustergram reps and restarts must be at least 1");
  }
  const PC1 pc = pca_first_component(features);
  const std::size_t n = features.rows();
  const std::size_t span = options.k_max - options.k_min + 1;

  std::vector<std::vector<ClustergramRow>> per_rep(options.reps);
  parallel_for(options.reps, options.threads, [&](std::size_t r) {
    const std::uint64_t rep_seed = derive_seed(master_seed, r);
    std::vector<int> previous;
    for (std::size_t i = 0; i < span; ++i) {
      const std::size_t k = options.k_min + i;
      const ClusterModel model =
          kmeans_restarts(features.z, k, options.restarts, derive_seed(rep_seed, k), options.kmeans, 1);
      std::vector<double> score_sum(k, 0.0);
      std::vector<std::size_t> size(k, 0);
      for (std::size_t p = 0; p < n; ++p) {
        const auto c = static_cast<std::size_t>(model.assignments[p]);
        score_sum[c] += pc.scores(static_cast<Index>(p));
        ++size[c];
      }
      for (std::size_t c = 0; c < k; ++c) {
        ClustergramRow row;
        row.rep = static_cast<int>(r);
        row.k = k;
        row.cluster_id = static_cast<int>(c);
        row.size = static_cast<double>(size[c]);
        row.pc1_mean = size[c] ? score_sum[c] / static_cast<double>(size[c]) : 0.0;
        if (!previous.empty()) {
          std::vector<std::size_t> overlap(k - 1, 0);
          for (std::size_t p = 0; p < n; ++p) {
            if (static_cast<std::size_t>(model.assignments[p]) == c) {
              ++overlap[static_cast<std::size_t>(previous[p])];
            }
          }
          row.parent = static_cast<int>(std::max_element(overlap.begin(), overlap.end()) - overlap.begin());
        }
        per_rep[r].push_back(row);
      }
      previous = model.assignments;
    }
  });

  ClustergramTable table;
  table.k_min = options.k_min;
  table.k_max = options.k_max;
  table.reps = options.reps;
  for (auto& rows : per_rep) {
    table.rows.insert(table.rows.end(), rows.begin(), rows.end());
  }
  return table;
}

ClustergramTable average_clustergram(const ClustergramTable& table) {
  struct Acc {
    double pc1 = 0.0;
    double size = 0.0;
    std::size_t count = 0;
    std::map<int, std::size_t> parents;
  };
  std::map<std::pair<std::size_t, int>, Acc> acc;
  for (const auto& row : table.rows) {
    auto& a = acc[{row.k, row.cluster_id}];
    a.pc1 += row.pc1_mean;
    a.size += row.size;
    ++a.count;
    ++a.parents[row.parent];
  }
  ClustergramTable out;
  out.k_min = table.k_min;
  out.k_max = table.k_max;
  out.reps = table.reps;
  out.averaged = true;
  for (const auto& [key, a] : acc) {
    ClustergramRow row;
    row.rep = -1;
    row.k = key.first;
    row.cluster_id = key.second;
    row.pc1_mean = a.pc1 / static_cast<double>(a.count);
    row.size = a.size / static_cast<double>(a.count);
    // map order gives the smallest parent id among equally common ones
    row.parent = std::max_element(a.parents.begin(), a.parents.end(), [](const auto& x, const auto& y) {
                   return x.second < y.second;
                 })->first;
    out.rows.push_back(row);
  }
  return out;
}

std::vector<std::pair<std::size_t, double>> clustergram_separation(const ClustergramTable& table) {
  std::map<std::pair<int, std::size_t>, std::vector<double>> means;
  for (const auto& row : table.rows) means[{row.rep, row.k}].push_back(row.pc1_mean);
  std::map<std::size_t, std::pair<double, std::size_t>> per_k;
  for (auto& [key, values] : means) {
    if (values.size() < 2) continue;
    std::sort(values.begin(), values.end());
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < values.size(); ++i) gap = std::min(gap, values[i] - values[i - 1]);
    auto& slot = per_k[key.second];
    slot.first += gap;
    ++slot.second;
  }
  std::vector<std::pair<std::size_t, double>> out;
  for (const auto& [k, s] : per_k) out.emplace_back(k, s.first / static_cast<double>(s.second));
  return out;
}

KSelection select_k(const GapReport& gap, const ClustergramTable& clustergram,
                    std::optional<std::size_t> override_k) {
  KSelection sel;
  sel.gap_modal_k = gap.modal_k;

  std::vector<const GapRow*> ranked;
  for (const auto& row : gap.rows) ranked.push_back(&row);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const GapRow* a, const GapRow* b) { return a->selected > b->selected; });
  for (const GapRow* row : ranked) {
    if (row->k != gap.modal_k && row->selected > 0) {
      sel.gap_runner_up = row->k;
      break;
    }
  }

  auto separation = clustergram_separation(clustergram);
  std::stable_sort(separation.begin(), separation.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (std::size_t i = 0; i < separation.size() && i < 2; ++i) {
    sel.clustergram_candidates.push_back(separation[i].first);
  }

  std::string candidates;
  for (std::size_t k : sel.clustergram_candidates) {
    candidates += (candidates.empty() ? "" : ", ") + std::to_string(k);
  }
  const std::string evidence =
      "gap statistic modal k = " + std::to_string(gap.modal_k) +
      (sel.gap_runner_up ? " (runner-up " + std::to_string(*sel.gap_runner_up) + ")" : "") +
      "; clustergram best-separated k: " + (candidates.empty() ? "none" : candidates);
  if (override_k) {
    sel.k = *override_k;
    sel.overridden = true;
    sel.rationale = "manual override to k = " + std::to_string(*override_k) + "; " + evidence;
  } else {
    sel.k = gap.modal_k;
    sel.rationale = "gap statistic selection; " + evidence;
  }
  return sel;
}

std::string gap_csv(const GapReport& report) {
  std::string out = csv_line({"k", "gap_mean", "se", "selection_frequency", "log_w_mean",
                              "log_w_ref_mean", "selected_count"});
  for (const auto& row : report.rows) {
    out += csv_line({std::to_string(row.k), format_number(row.gap_mean), format_number(row.s_mean),
                     format_number(row.selection_frequency), format_number(row.log_w_mean),
                     format_number(row.log_w_ref_mean), std::to_string(row.selected)});
  }
  return out;
}

std::string clustergram_csv(const ClustergramTable& table) {
  std::string out = csv_line({"rep", "k", "cluster_id", "pc1_mean", "size", "parent_cluster_id"});
  for (const auto& row : table.rows) {
    out += csv_line({row.rep < 0 ? "mean" : std::to_string(row.rep), std::to_string(row.k),
                     std::to_string(row.cluster_id), format_number(row.pc1_mean),
                     format_number(row.size), row.parent < 0 ? "" : std::to_string(row.parent)});
  }
  return out;
}

std::string k_selection_json(const KSelection& selection) {
  nlohmann::ordered_json j;
  j["k"] = selection.k;
  j["overridden"] = selection.overridden;
  j["gap_modal_k"] = selection.gap_modal_k;
  j["gap_runner_up"] = selection.gap_runner_up ? nlohmann::ordered_json(*selection.gap_runner_up)
                                               : nlohmann::ordered_json(nullptr);
  j["clustergram_candidates"] = selection.clustergram_candidates;
  j["rationale"] = selection.rationale;
  return j.dump(2) + "\n";
}

}  // namespace geodemo
