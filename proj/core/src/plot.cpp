#include "lcsac/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "lcsac/errors.hpp"
#include "lcsac/io.hpp"

namespace lcsac {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

int find_column(const std::vector<std::string>& header,
                std::initializer_list<const char*> names) {
  for (const char* name : names)
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
  return -1;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b"};

}  // namespace

CurveSeries read_curve_csv(const std::string& path) {
  const std::string text = read_file(path);
  std::stringstream ss(text);
  std::string line;
  if (!std::getline(ss, line))
    throw IoError("csv '" + path + "': empty file");
  const auto header = split_csv_line(line);
  const int step_col = find_column(header, {"step", "env_step"});
  const int mean_col = find_column(header, {"eval_mean", "mean"});
  const int std_col = find_column(header, {"eval_std", "std"});
  if (step_col < 0 || mean_col < 0 || std_col < 0)
    throw IoError("csv '" + path +
                  "': need step, mean and std columns (row 1)");

  CurveSeries series;
  series.label = std::filesystem::path(path).stem().string();
  std::size_t row = 1;
  while (std::getline(ss, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw IoError("csv '" + path + "': row " + std::to_string(row) +
                    " has " + std::to_string(cells.size()) + " cells, header has " +
                    std::to_string(header.size()));
    const std::string& mean_cell = cells[static_cast<std::size_t>(mean_col)];
    if (mean_cell.empty()) continue;  // non-eval metrics row
    char* end = nullptr;
    const double step = std::strtod(cells[static_cast<std::size_t>(step_col)].c_str(), &end);
    const double mean = std::strtod(mean_cell.c_str(), &end);
    const std::string& std_cell = cells[static_cast<std::size_t>(std_col)];
    const double stddev = std_cell.empty() ? 0.0 : std::strtod(std_cell.c_str(), &end);
    if (!std::isfinite(step) || !std::isfinite(mean) || !std::isfinite(stddev))
      throw IoError("csv '" + path + "': row " + std::to_string(row) +
                    " has non-numeric values");
    series.steps.push_back(step);
    series.means.push_back(mean);
    series.stds.push_back(stddev);
  }
  if (series.steps.empty())
    throw IoError("csv '" + path + "': no evaluation rows");
  return series;
}

std::string render_plot_svg(const std::vector<CurveSeries>& series,
                            PlotLayout* layout_out) {
  if (series.empty()) throw ContractError("render_plot_svg: no series");

  PlotLayout layout;
  layout.x_min = series[0].steps.front();
  layout.x_max = series[0].steps.back();
  double y_lo = 1e300, y_hi = -1e300;
  for (const CurveSeries& s : series) {
    for (std::size_t i = 0; i < s.steps.size(); ++i) {
      layout.x_min = std::min(layout.x_min, s.steps[i]);
      layout.x_max = std::max(layout.x_max, s.steps[i]);
      y_lo = std::min(y_lo, s.means[i] - 0.5 * s.stds[i]);
      y_hi = std::max(y_hi, s.means[i] + 0.5 * s.stds[i]);
    }
  }
  if (layout.x_max == layout.x_min) layout.x_max = layout.x_min + 1.0;
  const double pad = (y_hi - y_lo) > 0 ? 0.05 * (y_hi - y_lo) : 1.0;
  layout.y_min = y_lo - pad;
  layout.y_max = y_hi + pad;
  if (layout_out != nullptr) *layout_out = layout;

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"860\" "
         "height=\"520\" viewBox=\"0 0 860 520\">\n";
  svg += "<rect width=\"860\" height=\"520\" fill=\"white\"/>\n";

  // Axes with 5 ticks each.
  const double x0 = layout.margin_left, y0 = layout.margin_top;
  const double x1 = x0 + layout.width, y1 = y0 + layout.height;
  svg += "<line x1=\"" + fmt(x0) + "\" y1=\"" + fmt(y1) + "\" x2=\"" +
         fmt(x1) + "\" y2=\"" + fmt(y1) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + fmt(x0) + "\" y1=\"" + fmt(y0) + "\" x2=\"" +
         fmt(x0) + "\" y2=\"" + fmt(y1) + "\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double fx = layout.x_min +
                      (layout.x_max - layout.x_min) * tick / 4.0;
    const double fy = layout.y_min +
                      (layout.y_max - layout.y_min) * tick / 4.0;
    svg += "<line x1=\"" + fmt(layout.x_px(fx)) + "\" y1=\"" + fmt(y1) +
           "\" x2=\"" + fmt(layout.x_px(fx)) + "\" y2=\"" + fmt(y1 + 5) +
           "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + fmt(layout.x_px(fx)) + "\" y=\"" + fmt(y1 + 20) +
           "\" font-size=\"11\" text-anchor=\"middle\">" +
           format_double(fx) + "</text>\n";
    svg += "<line x1=\"" + fmt(x0 - 5) + "\" y1=\"" + fmt(layout.y_px(fy)) +
           "\" x2=\"" + fmt(x0) + "\" y2=\"" + fmt(layout.y_px(fy)) +
           "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + fmt(x0 - 8) + "\" y=\"" + fmt(layout.y_px(fy) + 4) +
           "\" font-size=\"11\" text-anchor=\"end\">" + format_double(fy) +
           "</text>\n";
  }
  svg += "<text x=\"" + fmt((x0 + x1) / 2) + "\" y=\"" + fmt(y1 + 40) +
         "\" font-size=\"13\" text-anchor=\"middle\">environment steps"
         "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const CurveSeries& s = series[si];
    const char* color = kPalette[si % 6];

    // Shaded +-std/2 band: top edge forward, bottom edge reversed.
    std::string band = "<polygon id=\"band-" + std::to_string(si) +
                       "\" fill=\"" + color + "\" fill-opacity=\"0.25\" "
                       "stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < s.steps.size(); ++i)
      band += fmt(layout.x_px(s.steps[i])) + "," +
              fmt(layout.y_px(s.means[i] + 0.5 * s.stds[i])) + " ";
    for (std::size_t i = s.steps.size(); i-- > 0;)
      band += fmt(layout.x_px(s.steps[i])) + "," +
              fmt(layout.y_px(s.means[i] - 0.5 * s.stds[i])) + " ";
    band += "\"/>\n";
    svg += band;

    std::string line = "<polyline id=\"mean-" + std::to_string(si) +
                       "\" fill=\"none\" stroke=\"" + color +
                       "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t i = 0; i < s.steps.size(); ++i)
      line += fmt(layout.x_px(s.steps[i])) + "," +
              fmt(layout.y_px(s.means[i])) + " ";
    line += "\"/>\n";
    svg += line;

    // Legend entry.
    const double ly = y0 + 16.0 + 18.0 * static_cast<double>(si);
    svg += "<rect x=\"" + fmt(x1 - 170) + "\" y=\"" + fmt(ly - 9) +
           "\" width=\"12\" height=\"12\" fill=\"" + color + "\"/>\n";
    svg += "<text x=\"" + fmt(x1 - 152) + "\" y=\"" + fmt(ly + 1) +
           "\" font-size=\"12\">" + s.label + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace lcsac
