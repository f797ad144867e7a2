#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace speckle {

enum class SeriesStyle { Markers, Line, Steps };

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> y_error;  ///< empty, or one symmetric error bar per point
  SeriesStyle style = SeriesStyle::Line;
  std::string color = "#1f77b4";
};

/// Standalone SVG x/y chart with linear axes, tick labels and a legend.
struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  double x_scale = 1.0;  ///< multiplies x for display (e.g. 1e6 for um)
  bool log_y = false;
  std::vector<PlotSeries> series;
  int width = 720;
  int height = 480;
};

std::string render_svg(const Plot& plot);
void write_svg(const Plot& plot, const std::filesystem::path& path);

}  // namespace speckle
