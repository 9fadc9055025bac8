#pragma once

// Plot emission: `x,y` series as CSV and a self-contained SVG line chart.

#include <string>
#include <vector>

namespace climattn::pipeline {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// `x,y` rows for one series.
std::string series_csv(const Series& series);

/// Line chart with axes and tick labels; no scripts, fonts or external
/// references. Output is a pure function of the inputs.
std::string line_chart_svg(const std::vector<Series>& series, const std::string& title,
                           const std::string& x_label, const std::string& y_label);

}  // namespace climattn::pipeline
