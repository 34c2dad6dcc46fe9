#pragma once

// Reference computations written directly from the textbook definitions.
// They use plain vectors and long double accumulation and share no code
// with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

using Rows = std::vector<std::vector<double>>;

inline long double mean(const std::vector<double>& x) {
  long double s = 0;
  for (double v : x) s += v;
  return s / static_cast<long double>(x.size());
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const long double mx = mean(x);
  const long double my = mean(y);
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

inline double sample_sd(const std::vector<double>& x) {
  const long double m = mean(x);
  long double ss = 0;
  for (double v : x) ss += (v - m) * (v - m);
  return static_cast<double>(std::sqrt(ss / static_cast<long double>(x.size() - 1)));
}

/// Sum of squared distances of `rows` to the centroid of the rows in `members`.
inline long double cluster_ss(const Rows& rows, const std::vector<std::size_t>& members) {
  if (members.empty()) return 0;
  const std::size_t d = rows[0].size();
  long double total = 0;
  for (std::size_t j = 0; j < d; ++j) {
    long double m = 0;
    for (std::size_t i : members) m += rows[i][j];
    m /= static_cast<long double>(members.size());
    for (std::size_t i : members) total += (rows[i][j] - m) * (rows[i][j] - m);
  }
  return total;
}

/// Minimum within-cluster sum of squares over every partition of the rows
/// into exactly k non-empty groups (labels enumerated in base k).
inline double exhaustive_min_wcss(const Rows& rows, std::size_t k) {
  const std::size_t n = rows.size();
  std::vector<std::size_t> label(n, 0);
  long double best = std::numeric_limits<long double>::infinity();
  while (true) {
    std::vector<std::vector<std::size_t>> groups(k);
    for (std::size_t i = 0; i < n; ++i) groups[label[i]].push_back(i);
    bool all_used = true;
    for (const auto& g : groups) all_used = all_used && !g.empty();
    if (all_used) {
      long double total = 0;
      for (const auto& g : groups) total += cluster_ss(rows, g);
      best = std::min(best, total);
    }
    std::size_t pos = 0;
    while (pos < n && ++label[pos] == k) label[pos++] = 0;
    if (pos == n) break;
  }
  return static_cast<double>(best);
}

struct OneWay {
  double between_ss = 0;
  double within_ss = 0;
  double f = 0;
};

/// One-way ANOVA of a single variable split by group label.
inline OneWay anova(const std::vector<double>& values, const std::vector<int>& groups, std::size_t k) {
  const long double grand = mean(values);
  std::vector<long double> sum(k, 0);
  std::vector<std::size_t> count(k, 0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum[static_cast<std::size_t>(groups[i])] += values[i];
    ++count[static_cast<std::size_t>(groups[i])];
  }
  long double between = 0, within = 0;
  for (std::size_t g = 0; g < k; ++g) {
    const long double m = sum[g] / static_cast<long double>(count[g]);
    between += static_cast<long double>(count[g]) * (m - grand) * (m - grand);
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto g = static_cast<std::size_t>(groups[i]);
    const long double m = sum[g] / static_cast<long double>(count[g]);
    within += (values[i] - m) * (values[i] - m);
  }
  OneWay out;
  out.between_ss = static_cast<double>(between);
  out.within_ss = static_cast<double>(within);
  const long double df_b = static_cast<long double>(k - 1);
  const long double df_w = static_cast<long double>(values.size() - k);
  out.f = static_cast<double>((between / df_b) / (within / df_w));
  return out;
}

/// Type-7 sample quantile (linear interpolation between order statistics).
inline double quantile7(std::vector<double> x, double p) {
  std::sort(x.begin(), x.end());
  const double h = (static_cast<double>(x.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

inline double median(std::vector<double> x) { return quantile7(std::move(x), 0.5); }

/// Plain Lloyd iterations from given starting centres: assign each point to
/// the nearest centre (lowest index on ties), recompute means, stop when no
/// assignment changes. Empty clusters keep their previous centre.
struct LloydResult {
  std::vector<int> labels;
  double wcss = 0;
};

inline LloydResult lloyd(const Rows& rows, Rows centres, int max_iter = 300) {
  const std::size_t n = rows.size();
  const std::size_t d = rows[0].size();
  const std::size_t k = centres.size();
  std::vector<int> labels(n, -1);
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        double s = 0;
        for (std::size_t j = 0; j < d; ++j) s += (rows[i][j] - centres[c][j]) * (rows[i][j] - centres[c][j]);
        if (s < best_d) {
          best_d = s;
          best = static_cast<int>(c);
        }
      }
      if (labels[i] != best) changed = true;
      labels[i] = best;
    }
    if (!changed) break;
    Rows sums(k, std::vector<double>(d, 0.0));
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++count[static_cast<std::size_t>(labels[i])];
      for (std::size_t j = 0; j < d; ++j) sums[static_cast<std::size_t>(labels[i])][j] += rows[i][j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] == 0) continue;
      for (std::size_t j = 0; j < d; ++j) centres[c][j] = sums[c][j] / static_cast<double>(count[c]);
    }
  }
  LloydResult out;
  out.labels = labels;
  std::vector<std::vector<std::size_t>> groups(k);
  for (std::size_t i = 0; i < n; ++i) groups[static_cast<std::size_t>(labels[i])].push_back(i);
  long double total = 0;
  for (const auto& g : groups) total += cluster_ss(rows, g);
  out.wcss = static_cast<double>(total);
  return out;
}

/// Adjusted Rand index from pair counts (n choose 2 over the contingency table).
inline double adjusted_rand(const std::vector<int>& a, const std::vector<int>& b) {
  std::map<std::pair<int, int>, long double> cells;
  std::map<int, long double> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cells[{a[i], b[i]}] += 1;
    rows[a[i]] += 1;
    cols[b[i]] += 1;
  }
  auto c2 = [](long double x) { return x * (x - 1) / 2; };
  long double index = 0, sa = 0, sb = 0;
  for (const auto& [key, v] : cells) index += c2(v);
  for (const auto& [key, v] : rows) sa += c2(v);
  for (const auto& [key, v] : cols) sb += c2(v);
  const long double expected = sa * sb / c2(static_cast<long double>(a.size()));
  const long double max_index = (sa + sb) / 2;
  if (max_index == expected) return 1.0;
  return static_cast<double>((index - expected) / (max_index - expected));
}

/// Gap statistic with a uniform box reference, written independently:
/// best-of-`restarts` Lloyd fits from random distinct points.
/// Returns the k chosen by the one-SE rule.
inline std::size_t gap_select(const Rows& rows, std::size_t k_max, std::size_t b, std::size_t restarts,
                              std::mt19937_64& rng) {
  const std::size_t n = rows.size();
  const std::size_t d = rows[0].size();
  auto log_w = [&](const Rows& data, std::size_t k) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < restarts; ++r) {
      std::vector<std::size_t> idx(n);
      std::iota(idx.begin(), idx.end(), 0);
      std::shuffle(idx.begin(), idx.end(), rng);
      Rows centres;
      for (std::size_t c = 0; c < k; ++c) centres.push_back(data[idx[c]]);
      best = std::min(best, lloyd(data, centres).wcss);
    }
    return std::log(best);
  };
  std::vector<double> lo(d, std::numeric_limits<double>::infinity());
  std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < d; ++j) {
      lo[j] = std::min(lo[j], r[j]);
      hi[j] = std::max(hi[j], r[j]);
    }
  }
  std::vector<double> gap(k_max), s(k_max);
  std::vector<Rows> refs(b, Rows(n, std::vector<double>(d)));
  for (auto& ref : refs) {
    for (auto& r : ref) {
      for (std::size_t j = 0; j < d; ++j) r[j] = std::uniform_real_distribution<double>(lo[j], hi[j])(rng);
    }
  }
  for (std::size_t k = 1; k <= k_max; ++k) {
    std::vector<double> ref_logs;
    for (const auto& ref : refs) ref_logs.push_back(log_w(ref, k));
    const double m = static_cast<double>(mean(ref_logs));
    double var = 0;
    for (double v : ref_logs) var += (v - m) * (v - m);
    var /= static_cast<double>(b);
    gap[k - 1] = m - log_w(rows, k);
    s[k - 1] = std::sqrt(var) * std::sqrt(1.0 + 1.0 / static_cast<double>(b));
  }
  for (std::size_t k = 1; k < k_max; ++k) {
    if (gap[k - 1] >= gap[k] - s[k]) return k;
  }
  return k_max;
}

}  // namespace oracle
