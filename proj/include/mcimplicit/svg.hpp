#pragma once

#include <string>
#include <vector>

namespace mcimplicit {

// Minimal SVG line chart: log-scalable axes, polyline series, legend. Enough
// to eyeball sweep results without a plotting dependency.
struct SvgSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct SvgLineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  std::vector<SvgSeries> series;

  std::string render() const;
  void write_file(const std::string& path) const;
};

}  // namespace mcimplicit
