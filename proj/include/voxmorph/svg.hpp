#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "voxmorph/io_util.hpp"

namespace voxmorph {

struct ScatterSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

// Dependency-free scatter plot of centroid positions, one marker style per
// series. Output is a pure function of the inputs (fixed canvas, palette and
// number formatting), so identical data gives identical bytes.
inline std::string render_scatter_svg(const std::string& title,
                                      const std::string& x_label,
                                      const std::string& y_label,
                                      const std::vector<ScatterSeries>& series,
                                      const std::string& comment = "") {
  const double width = 720, height = 560;
  const double ml = 64, mr = 24, mt = 48, mb = 52; // margins
  const double pw = width - ml - mr, ph = height - mt - mb;

  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  bool any = false;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      if (!any) {
        xmin = xmax = x;
        ymin = ymax = y;
        any = true;
      } else {
        xmin = std::min(xmin, x); xmax = std::max(xmax, x);
        ymin = std::min(ymin, y); ymax = std::max(ymax, y);
      }
    }
  if (!any) { xmin = ymin = 0; xmax = ymax = 1; }
  auto pad = [](double& lo, double& hi) {
    double span = hi - lo;
    if (span <= 0) span = lo == 0 ? 1.0 : std::abs(lo) * 0.1;
    lo -= span * 0.05;
    hi += span * 0.05;
  };
  pad(xmin, xmax);
  pad(ymin, ymax);

  // y grows downward: centroids live in image coordinates
  auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return mt + (y - ymin) / (ymax - ymin) * ph; };

  static const char* kColors[] = {"#4878a8", "#d0803c", "#5a9a5a", "#9a5a9a"};
  const int n_colors = 4;

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"560\" "
         "viewBox=\"0 0 720 560\">\n";
  if (!comment.empty()) {
    svg += "<!-- ";
    for (char c : comment) // '--' is illegal inside an XML comment
      svg += c == '-' ? '_' : c;
    svg += " -->\n";
  }
  svg += "<rect x=\"0\" y=\"0\" width=\"720\" height=\"560\" fill=\"#ffffff\"/>\n";
  svg += "<rect x=\"" + format_number(ml) + "\" y=\"" + format_number(mt) +
         "\" width=\"" + format_number(pw) + "\" height=\"" + format_number(ph) +
         "\" fill=\"none\" stroke=\"#404040\" stroke-width=\"1\"/>\n";
  svg += "<text x=\"" + format_number(width / 2) +
         "\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"16\" fill=\"#202020\">" + title + "</text>\n";

  // min/max tick labels on both axes
  auto tick = [&](double vx, double vy, const std::string& text, bool x_axis) {
    if (x_axis)
      svg += "<text x=\"" + format_number(vx) + "\" y=\"" + format_number(vy) +
             "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\" "
             "fill=\"#404040\">" + text + "</text>\n";
    else
      svg += "<text x=\"" + format_number(vx) + "\" y=\"" + format_number(vy) +
             "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" "
             "fill=\"#404040\">" + text + "</text>\n";
  };
  tick(ml, height - mb + 16, format_number(xmin), true);
  tick(width - mr, height - mb + 16, format_number(xmax), true);
  tick(ml - 6, mt + 10, format_number(ymin), false);
  tick(ml - 6, height - mb, format_number(ymax), false);
  svg += "<text x=\"" + format_number(ml + pw / 2) + "\" y=\"" +
         format_number(height - 14) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
         "fill=\"#202020\">" + x_label + "</text>\n";
  svg += "<text x=\"18\" y=\"" + format_number(mt + ph / 2) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
         "fill=\"#202020\" transform=\"rotate(-90 18 " + format_number(mt + ph / 2) +
         ")\">" + y_label + "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const char* color = kColors[si % n_colors];
    for (const auto& [x, y] : series[si].points) {
      double px = sx(x), py = sy(y);
      switch (si % 3) {
        case 0:
          svg += "<circle cx=\"" + format_number(px) + "\" cy=\"" + format_number(py) +
                 "\" r=\"3\" fill=\"" + color + "\" fill-opacity=\"0.75\"/>\n";
          break;
        case 1:
          svg += "<rect x=\"" + format_number(px - 2.7) + "\" y=\"" +
                 format_number(py - 2.7) + "\" width=\"5.4\" height=\"5.4\" fill=\"" +
                 color + "\" fill-opacity=\"0.75\"/>\n";
          break;
        default:
          svg += "<path d=\"M " + format_number(px) + " " + format_number(py - 3.4) +
                 " L " + format_number(px - 3.1) + " " + format_number(py + 2.4) +
                 " L " + format_number(px + 3.1) + " " + format_number(py + 2.4) +
                 " Z\" fill=\"" + color + "\" fill-opacity=\"0.75\"/>\n";
      }
    }
  }

  // legend, top-right inside the frame
  double lx = width - mr - 150, ly = mt + 14;
  for (std::size_t si = 0; si < series.size(); ++si) {
    const char* color = kColors[si % n_colors];
    svg += "<circle cx=\"" + format_number(lx) + "\" cy=\"" + format_number(ly - 4) +
           "\" r=\"4\" fill=\"" + std::string(color) + "\"/>\n";
    svg += "<text x=\"" + format_number(lx + 10) + "\" y=\"" + format_number(ly) +
           "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#202020\">" +
           series[si].name + " (" + std::to_string(series[si].points.size()) +
           ")</text>\n";
    ly += 18;
  }

  svg += "</svg>\n";
  return svg;
}

} // namespace voxmorph
