#include "d2s/io/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace d2s {

namespace {

constexpr int kWidth = 760;
constexpr int kHeight = 420;
constexpr int kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

struct Extent {
  double xmin = std::numeric_limits<double>::infinity();
  double xmax = -std::numeric_limits<double>::infinity();
  double ymin = std::numeric_limits<double>::infinity();
  double ymax = -std::numeric_limits<double>::infinity();
};

Extent extent_of(const std::vector<ChartSeries>& series) {
  Extent e;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      e.xmin = std::min(e.xmin, x);
      e.xmax = std::max(e.xmax, x);
      e.ymin = std::min(e.ymin, y);
      e.ymax = std::max(e.ymax, y);
    }
  }
  if (!(e.xmin <= e.xmax)) e = {0, 1, 0, 1};
  if (e.xmin == e.xmax) {
    e.xmin -= 0.5;
    e.xmax += 0.5;
  }
  if (e.ymin == e.ymax) {
    e.ymin -= 0.5;
    e.ymax += 0.5;
  }
  return e;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void emit_frame(std::string& o, const std::string& title,
                const std::string& xlabel, const std::string& ylabel,
                const Extent& e) {
  o += "<rect x='" + std::to_string(kLeft) + "' y='" + std::to_string(kTop) +
       "' width='" + std::to_string(kWidth - kLeft - kRight) + "' height='" +
       std::to_string(kHeight - kTop - kBottom) +
       "' fill='none' stroke='#444'/>\n";
  o += "<text x='" + std::to_string(kWidth / 2) +
       "' y='22' text-anchor='middle' font-size='15'>" + title + "</text>\n";
  o += "<text x='" + std::to_string(kWidth / 2) + "' y='" +
       std::to_string(kHeight - 12) + "' text-anchor='middle' font-size='12'>" +
       xlabel + "</text>\n";
  o += "<text x='16' y='" + std::to_string(kHeight / 2) +
       "' text-anchor='middle' font-size='12' transform='rotate(-90 16 " +
       std::to_string(kHeight / 2) + ")'>" + ylabel + "</text>\n";
  // four ticks per axis
  for (int k = 0; k <= 4; ++k) {
    const double fx = k / 4.0;
    const double xv = e.xmin + fx * (e.xmax - e.xmin);
    const int px = kLeft + static_cast<int>(fx * (kWidth - kLeft - kRight));
    o += "<text x='" + std::to_string(px) + "' y='" +
         std::to_string(kHeight - kBottom + 16) +
         "' text-anchor='middle' font-size='10'>" + num(xv) + "</text>\n";
    const double yv = e.ymin + fx * (e.ymax - e.ymin);
    const int py =
        kHeight - kBottom - static_cast<int>(fx * (kHeight - kTop - kBottom));
    o += "<text x='" + std::to_string(kLeft - 6) + "' y='" +
         std::to_string(py + 3) +
         "' text-anchor='end' font-size='10'>" + num(yv) + "</text>\n";
  }
}

void emit_legend(std::string& o, const std::vector<ChartSeries>& series) {
  int y = kTop + 14;
  for (size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % (sizeof kPalette / sizeof *kPalette)];
    o += "<rect x='" + std::to_string(kLeft + 10) + "' y='" +
         std::to_string(y - 9) + "' width='12' height='3' fill='" + color +
         "'/>\n";
    o += "<text x='" + std::to_string(kLeft + 28) + "' y='" +
         std::to_string(y - 4) + "' font-size='11'>" + series[i].label +
         "</text>\n";
    y += 16;
  }
}

void write_chart(const std::string& path, const std::string& title,
                 const std::string& xlabel, const std::string& ylabel,
                 const std::vector<ChartSeries>& series, bool lines) {
  const Extent e = extent_of(series);
  const double sx = (kWidth - kLeft - kRight) / (e.xmax - e.xmin);
  const double sy = (kHeight - kTop - kBottom) / (e.ymax - e.ymin);
  auto px = [&](double x) { return kLeft + (x - e.xmin) * sx; };
  auto py = [&](double y) { return kHeight - kBottom - (y - e.ymin) * sy; };

  std::string o;
  o += "<svg xmlns='http://www.w3.org/2000/svg' width='" +
       std::to_string(kWidth) + "' height='" + std::to_string(kHeight) +
       "' font-family='sans-serif'>\n";
  o += "<rect width='100%' height='100%' fill='white'/>\n";
  emit_frame(o, title, xlabel, ylabel, e);
  for (size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % (sizeof kPalette / sizeof *kPalette)];
    if (lines) {
      o += "<polyline fill='none' stroke='" + std::string(color) +
           "' stroke-width='1.5' points='";
      for (const auto& [x, y] : series[i].points)
        o += num(px(x)) + "," + num(py(y)) + " ";
      o += "'/>\n";
    } else {
      for (const auto& [x, y] : series[i].points)
        o += "<circle cx='" + num(px(x)) + "' cy='" + num(py(y)) +
             "' r='3' fill='" + color + "' fill-opacity='0.7'/>\n";
    }
  }
  emit_legend(o, series);
  o += "</svg>\n";

  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("I/O error: cannot open " + path);
  os << o;
  if (!os) throw std::runtime_error("I/O error: write failed for " + path);
}

}  // namespace

void write_line_chart_svg(const std::string& path, const std::string& title,
                          const std::string& xlabel, const std::string& ylabel,
                          const std::vector<ChartSeries>& series) {
  write_chart(path, title, xlabel, ylabel, series, true);
}

void write_scatter_svg(const std::string& path, const std::string& title,
                       const std::string& xlabel, const std::string& ylabel,
                       const std::vector<ChartSeries>& series) {
  write_chart(path, title, xlabel, ylabel, series, false);
}

}  // namespace d2s
