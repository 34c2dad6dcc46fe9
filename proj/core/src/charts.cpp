#include "geodemo/charts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "geodemo/csv.hpp"

namespace geodemo {

namespace {

std::string num(double v) { return format_fixed(v, 2); }

std::string xml_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

class Svg {
 public:
  Svg(double width, double height, std::string_view title) {
    body_ = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
        "font-family=\"sans-serif\" font-size=\"11\">\n<title>{2}</title>\n"
        "<rect x=\"0\" y=\"0\" width=\"{0}\" height=\"{1}\" fill=\"#ffffff\"/>\n",
        num(width), num(height), xml_escape(title));
  }

  void line(double x1, double y1, double x2, double y2, std::string_view stroke, double width,
            std::string_view cls = {}) {
    body_ += fmt::format("<line{} x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"{}\"/>\n",
                         class_attr(cls), num(x1), num(y1), num(x2), num(y2), stroke, num(width));
  }

  void rect(double x, double y, double w, double h, std::string_view fill, std::string_view stroke,
            std::string_view cls = {}) {
    body_ += fmt::format("<rect{} x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" stroke=\"{}\"/>\n",
                         class_attr(cls), num(x), num(y), num(w), num(h), fill, stroke);
  }

  void circle(double cx, double cy, double r, std::string_view fill, std::string_view stroke,
              std::string_view cls = {}) {
    body_ += fmt::format("<circle{} cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{}\" stroke=\"{}\"/>\n", class_attr(cls),
                         num(cx), num(cy), num(r), fill, stroke);
  }

  void text(double x, double y, std::string_view content, std::string_view anchor = "middle",
            double rotate = 0.0) {
    std::string transform;
    if (rotate != 0.0) transform = fmt::format(" transform=\"rotate({} {} {})\"", num(rotate), num(x), num(y));
    body_ += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"{}\"{}>{}</text>\n", num(x), num(y), anchor,
                         transform, xml_escape(content));
  }

  std::string finish() { return body_ + "</svg>\n"; }

 private:
  static std::string class_attr(std::string_view cls) {
    return cls.empty() ? std::string() : fmt::format(" class=\"{}\"", cls);
  }
  std::string body_;
};

// Linear map from [lo, hi] onto [a, b].
struct Axis {
  double lo, hi, a, b;
  double operator()(double v) const { return hi == lo ? 0.5 * (a + b) : a + (v - lo) / (hi - lo) * (b - a); }
};

// Rounded tick step giving roughly `target` ticks over the span.
double nice_step(double span, int target) {
  if (!(span > 0.0)) return 1.0;
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double f = raw / mag;
  const double nice = f < 1.5 ? 1.0 : f < 3.0 ? 2.0 : f < 7.0 ? 5.0 : 10.0;
  return nice * mag;
}

void y_axis(Svg& svg, const Axis& y, double x, double x_end, std::string_view label) {
  const double step = nice_step(y.hi - y.lo, 5);
  for (double t = std::ceil(y.lo / step) * step; t <= y.hi + 1e-9 * step; t += step) {
    const double v = std::abs(t) < 1e-12 * step ? 0.0 : t;
    svg.line(x, y(v), x_end, y(v), "#e0e0e0", 1.0);
    svg.text(x - 6, y(v) + 4, format_number(std::round(v / step) * step), "end");
  }
  svg.line(x, y.a, x, y.b, "#333333", 1.0);
  svg.text(x - 40, 0.5 * (y.a + y.b), label, "middle", -90.0);
}

// Blue for negative, red for positive, white at zero.
std::string diverging(double r) {
  const double t = std::clamp(std::abs(r), 0.0, 1.0);
  const int fade = static_cast<int>(std::lround(255.0 * (1.0 - t)));
  return r >= 0 ? fmt::format("#ff{:02x}{:02x}", fade, fade) : fmt::format("#{:02x}{:02x}ff", fade, fade);
}

const char* const kPalette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02",
                                "#a6761d", "#666666", "#1f78b4", "#b2df8a", "#fb9a99", "#cab2d6"};

}  // namespace

std::string correlation_heatmap_svg(const CorrMatrix& corr) {
  const std::size_t d = corr.variables.size();
  const double cell = 44.0;
  const double left = 150.0;
  const double top = 150.0;
  Svg svg(left + cell * static_cast<double>(d) + 20.0, top + cell * static_cast<double>(d) + 40.0,
          "Pearson correlation matrix");
  for (std::size_t j = 0; j < d; ++j) {
    svg.text(left + cell * (static_cast<double>(j) + 0.5), top - 8, corr.variables[j], "start", -60.0);
  }
  for (std::size_t i = 0; i < d; ++i) {
    const double y = top + cell * static_cast<double>(i);
    svg.text(left - 6, y + cell * 0.5 + 4, corr.variables[i], "end");
    for (std::size_t j = 0; j < d; ++j) {
      const double r = corr.r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      const double x = left + cell * static_cast<double>(j);
      svg.rect(x, y, cell, cell, diverging(r), "#ffffff", "cell");
      svg.text(x + cell * 0.5, y + cell * 0.5 + 4, format_fixed(r, 2));
    }
  }
  svg.text(left, top + cell * static_cast<double>(d) + 25, fmt::format("n = {} districts", corr.observations), "start");
  return svg.finish();
}

std::string gap_curve_svg(const GapReport& report) {
  const double left = 70.0, right = 560.0, top = 30.0, bottom = 300.0;
  Svg svg(600.0, 350.0, "Gap statistic");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& row : report.rows) {
    lo = std::min(lo, row.gap_mean - row.s_mean);
    hi = std::max(hi, row.gap_mean + row.s_mean);
  }
  if (report.rows.empty()) lo = hi = 0.0;
  const double pad = 0.05 * std::max(hi - lo, 1e-9);
  const Axis y{lo - pad, hi + pad, bottom, top};
  const Axis x{static_cast<double>(report.k_min) - 0.5, static_cast<double>(report.k_max) + 0.5, left, right};
  y_axis(svg, y, left, right, "Gap (mean over repetitions)");
  svg.line(left, bottom, right, bottom, "#333333", 1.0);
  for (const auto& row : report.rows) {
    svg.text(x(static_cast<double>(row.k)), bottom + 16, std::to_string(row.k));
  }
  svg.text(0.5 * (left + right), bottom + 36, "Number of clusters k");

  for (std::size_t i = 1; i < report.rows.size(); ++i) {
    const auto& a = report.rows[i - 1];
    const auto& b = report.rows[i];
    svg.line(x(static_cast<double>(a.k)), y(a.gap_mean), x(static_cast<double>(b.k)), y(b.gap_mean), "#4a6fa5", 1.5);
  }
  for (const auto& row : report.rows) {
    const double cx = x(static_cast<double>(row.k));
    svg.line(cx, y(row.gap_mean - row.s_mean), cx, y(row.gap_mean + row.s_mean), "#333333", 1.0, "errorbar");
    const bool modal = row.k == report.modal_k;
    svg.circle(cx, y(row.gap_mean), modal ? 5.0 : 3.5, modal ? "#d62728" : "#4a6fa5", "#333333", "point");
  }
  svg.text(right, top - 10, fmt::format("modal k = {} over {} repetitions, B = {}", report.modal_k, report.reps,
                                        report.reference_sets),
           "end");
  return svg.finish();
}

std::string clustergram_svg(const ClustergramTable& table) {
  const ClustergramTable avg = table.averaged ? table : average_clustergram(table);
  const double left = 70.0, right = 560.0, top = 30.0, bottom = 300.0;
  Svg svg(600.0, 350.0, "Clustergram");
  double lo = 0.0;
  double hi = 0.0;
  double total = 0.0;
  for (const auto& row : avg.rows) {
    lo = std::min(lo, row.pc1_mean);
    hi = std::max(hi, row.pc1_mean);
    if (row.k == avg.k_min) total += row.size;
  }
  const double pad = 0.05 * std::max(hi - lo, 1e-9);
  const Axis y{lo - pad, hi + pad, bottom, top};
  const Axis x{static_cast<double>(avg.k_min) - 0.5, static_cast<double>(avg.k_max) + 0.5, left, right};
  y_axis(svg, y, left, right, "Mean PC1 score");
  svg.line(left, bottom, right, bottom, "#333333", 1.0);
  for (std::size_t k = avg.k_min; k <= avg.k_max; ++k) {
    svg.text(x(static_cast<double>(k)), bottom + 16, std::to_string(k));
  }
  svg.text(0.5 * (left + right), bottom + 36, "Number of clusters k");

  std::map<std::pair<std::size_t, int>, const ClustergramRow*> index;
  for (const auto& row : avg.rows) index[{row.k, row.cluster_id}] = &row;
  for (const auto& row : avg.rows) {
    if (row.k == avg.k_min || row.parent < 0) continue;
    const auto it = index.find({row.k - 1, row.parent});
    if (it == index.end()) continue;
    const double width = total > 0.0 ? 0.5 + 12.0 * row.size / total : 1.0;
    svg.line(x(static_cast<double>(row.k - 1)), y(it->second->pc1_mean), x(static_cast<double>(row.k)), y(row.pc1_mean),
             "#4a6fa5", width, "edge");
  }
  for (const auto& row : avg.rows) {
    svg.circle(x(static_cast<double>(row.k)), y(row.pc1_mean), 3.0, "#333333", "#333333", "node");
  }
  svg.text(right, top - 10, fmt::format("{} repetitions", table.reps), "end");
  return svg.finish();
}

std::string boxplot_svg(const BoxplotStats& stats) {
  const double left = 70.0, top = 30.0, bottom = 300.0;
  const double slot = 60.0;
  const double right = left + slot * static_cast<double>(std::max<std::size_t>(stats.clusters.size(), 1));
  Svg svg(right + 40.0, 350.0, "Distance to cluster centre");
  double hi = 0.0;
  for (const auto& box : stats.clusters) {
    hi = std::max(hi, box.quartiles.max);
  }
  const Axis y{0.0, hi > 0.0 ? hi * 1.05 : 1.0, bottom, top};
  y_axis(svg, y, left, right, "Euclidean distance (z units)");
  svg.line(left, bottom, right, bottom, "#333333", 1.0);
  for (std::size_t c = 0; c < stats.clusters.size(); ++c) {
    const auto& box = stats.clusters[c];
    const double cx = left + slot * (static_cast<double>(c) + 0.5);
    const double half = slot * 0.3;
    const auto& colour = kPalette[c % std::size(kPalette)];
    svg.line(cx, y(box.whisker_low), cx, y(box.quartiles.q1), "#333333", 1.0, "whisker");
    svg.line(cx, y(box.quartiles.q3), cx, y(box.whisker_high), "#333333", 1.0, "whisker");
    svg.line(cx - half * 0.5, y(box.whisker_low), cx + half * 0.5, y(box.whisker_low), "#333333", 1.0);
    svg.line(cx - half * 0.5, y(box.whisker_high), cx + half * 0.5, y(box.whisker_high), "#333333", 1.0);
    svg.rect(cx - half, y(box.quartiles.q3), 2.0 * half, y(box.quartiles.q1) - y(box.quartiles.q3), colour,
             "#333333", "box");
    svg.line(cx - half, y(box.quartiles.median), cx + half, y(box.quartiles.median), "#000000", 2.0, "median");
    for (const auto& o : box.outliers) {
      svg.circle(cx, y(o.distance), 3.0, "none", "#333333", "outlier");
    }
    svg.text(cx, bottom + 16, std::to_string(box.cluster_id + 1));
    svg.text(cx, bottom + 30, fmt::format("n={}", box.size));
  }
  svg.text(0.5 * (left + right), bottom + 46, "Cluster");
  return svg.finish();
}

}  // namespace geodemo
