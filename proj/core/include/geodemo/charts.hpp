#pragma once

#include <string>

#include "geodemo/evaluate.hpp"
#include "geodemo/kselect.hpp"
#include "geodemo/preprocess.hpp"

namespace geodemo {

// Self-contained SVG documents. Output depends only on the inputs: no
// timestamps, and every coordinate is printed with fixed precision.

/// Diverging red/blue cell grid of r with values printed in each cell.
std::string correlation_heatmap_svg(const CorrMatrix& corr);

/// Mean gap per k with +-s error bars; the modal k is highlighted.
std::string gap_curve_svg(const GapReport& report);

/// Averaged clustergram: one node per (k, cluster) at its mean PC1 score,
/// edges to the parent cluster at k-1, edge width proportional to size.
std::string clustergram_svg(const ClustergramTable& table);

/// One box-and-whisker per cluster with outliers as open circles.
std::string boxplot_svg(const BoxplotStats& stats);

}  // namespace geodemo
