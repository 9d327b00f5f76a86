#pragma once

#include <string>
#include <vector>

namespace ptonet::tools {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotOptions {
  std::string title;
  std::string x_label = "t";
  std::string y_label;
  bool log_y = false;  // nonpositive samples are dropped on a log axis
  int width = 720;
  int height = 420;
};

// Self-contained SVG line plot with axes, ticks and a legend.
std::string render_line_plot(const std::vector<Series>& series, const PlotOptions& options);

}  // namespace ptonet::tools
