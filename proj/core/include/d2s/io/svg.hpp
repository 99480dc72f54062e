#pragma once

#include <string>
#include <utility>
#include <vector>

namespace d2s {

struct ChartSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

/// Minimal static vector-graphic charts; no external plotting dependency.
void write_line_chart_svg(const std::string& path, const std::string& title,
                          const std::string& xlabel, const std::string& ylabel,
                          const std::vector<ChartSeries>& series);

void write_scatter_svg(const std::string& path, const std::string& title,
                       const std::string& xlabel, const std::string& ylabel,
                       const std::vector<ChartSeries>& series);

}  // namespace d2s
