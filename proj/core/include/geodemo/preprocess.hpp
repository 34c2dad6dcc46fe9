#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "geodemo/ingest.hpp"
#include "geodemo/matrix.hpp"
#include "geodemo/variables.hpp"

namespace geodemo {

/// Pearson correlations between rate columns. `p_values` holds two-sided
/// t-test significance for each pair (reported, never used for pruning).
struct CorrMatrix {
  std::vector<std::string> variables;
  Matrix r;
  Matrix p_values;
  std::size_t observations = 0;

  double max_off_diagonal_abs() const;
};

/// Errors: TooFewDistricts (< 3), ConstantColumn.
CorrMatrix correlation_matrix(const RateTable& rates);

struct PruneStep {
  std::string removed;
  std::string pair_first;
  std::string pair_second;
  double abs_r = 0.0;
};

struct PruneResult {
  std::vector<std::string> kept;  // declared order
  std::vector<PruneStep> log;
};

/// Greedy multicollinearity pruning. While some kept pair has |r| above
/// `threshold`, drop the variable (from violating pairs, outside `keep`)
/// with the highest mean |r| to the other kept variables; ties drop the
/// later declared variable.
/// Errors: ThresholdOutOfRange, AllVariablesRemoved, KeepListConflict.
PruneResult prune_multicollinear(const CorrMatrix& corr, double threshold,
                                 const std::vector<std::string>& keep = {});

/// Districts x variables matrix of z-scores, the space clustering runs in.
struct FeatureMatrix {
  std::vector<DistrictCode> districts;
  std::vector<VariableMeta> variables;
  Matrix z;
  Vector column_means;  // after polarity is applied
  Vector column_sds;    // sample (n - 1) standard deviation

  std::size_t rows() const { return static_cast<std::size_t>(z.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(z.cols()); }
};

/// z = (x - mean) / sd per column of the variables in `meta` (looked up by
/// name in `rates`). Inverted polarity negates x first.
/// Errors: UnknownVariable, TooFewDistricts (< 2), ConstantColumn.
FeatureMatrix zscore(const RateTable& rates, const std::vector<VariableMeta>& meta);

/// Wraps an already standardized matrix (tests, benchmarks, synthetic data).
FeatureMatrix make_features(Matrix z, std::vector<VariableMeta> variables = {},
                            std::vector<DistrictCode> districts = {});

std::string corr_matrix_csv(const CorrMatrix& corr);
std::string pruning_log_csv(const PruneResult& result);

}  // namespace geodemo
