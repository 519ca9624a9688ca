#pragma once

#include <string>
#include <vector>

namespace lcsac {

/// One curve: evaluation mean per environment step plus its std column.
struct CurveSeries {
  std::string label;
  std::vector<double> steps;
  std::vector<double> means;
  std::vector<double> stds;
};

/// Reads a metrics-style CSV. Accepts either a training metrics.csv
/// (step/eval_mean/eval_std columns, rows without an eval value skipped) or
/// an aggregated curve CSV (step/mean/std). Throws IoError naming the file
/// and row on malformed input.
CurveSeries read_curve_csv(const std::string& path);

/// Pixel mapping of the plot area, exposed so tests can verify emitted
/// geometry.
struct PlotLayout {
  double margin_left = 70.0, margin_top = 20.0;
  double width = 770.0, height = 450.0;
  double x_min = 0.0, x_max = 1.0;
  double y_min = 0.0, y_max = 1.0;

  double x_px(double x) const {
    return margin_left + (x - x_min) / (x_max - x_min) * width;
  }
  double y_px(double y) const {
    return margin_top + (1.0 - (y - y_min) / (y_max - y_min)) * height;
  }
};

/// Self-contained SVG: one mean line per series with a shaded band of
/// half-width std/2, axes and a legend built from the series labels.
std::string render_plot_svg(const std::vector<CurveSeries>& series,
                            PlotLayout* layout_out = nullptr);

}  // namespace lcsac
