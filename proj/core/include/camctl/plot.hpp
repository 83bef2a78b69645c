#pragma once

#include <string>
#include <utility>
#include <vector>

#include "camctl/dataset_io.hpp"
#include "camctl/evaluation.hpp"

namespace camctl {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  Rgb color;
};

struct Panel {
  std::string title;
  std::vector<Series> series;
  bool log_y = false;
  std::vector<std::pair<double, double>> shaded_x;  // highlighted x ranges
};

/// Stacks panels vertically with axes, tick labels, and a legend.
ImageRgb render_panels(const std::vector<Panel>& panels, int width = 960, int panel_height = 240);

/// NFM, gain, and exposure against frame index for one episode's traces,
/// with dynamic segments shaded.
ImageRgb plot_traces(const std::vector<EpisodeTrace>& traces);

/// Training and held-out loss against epoch.
ImageRgb plot_curve(const std::vector<EpochLog>& curve);

/// Distinct colour for series i.
Rgb palette(std::size_t i);

}  // namespace camctl
