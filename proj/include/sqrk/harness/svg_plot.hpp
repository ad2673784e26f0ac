#pragma once

// Minimal SVG line charts (log or linear y) and T/F grids. No layout engine:
// fixed margins, decade ticks on log axes, "nice" ticks on linear axes.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace sqrk::harness {

inline constexpr double kLogFloor = 1e-300;

struct Series {
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  double opacity = 1.0;
  double stroke_width = 1.5;
  bool dashed = false;
  std::string label;  // empty: not listed in the legend
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = true;
  int width = 760;
  int height = 500;
};

inline const std::vector<std::string>& palette() {
  static const std::vector<std::string> colors = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return colors;
}

namespace detail {

inline std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string fmt(double v, const char* spec = "%.2f") {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

inline std::vector<double> nice_ticks(double lo, double hi, int target = 6) {
  if (!(hi > lo)) return {lo};
  const double raw = (hi - lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double mult : {1.0, 2.0, 5.0, 10.0}) {
    step = mult * mag;
    if (step >= raw) break;
  }
  std::vector<double> ticks;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) ticks.push_back(t);
  return ticks;
}

}  // namespace detail

inline std::string render_line_plot(const PlotSpec& spec, const std::vector<Series>& series) {
  const double left = 80, right = 20, top = 40, bottom = 60;
  const double pw = spec.width - left - right;
  const double ph = spec.height - top - bottom;

  auto ty = [&](double y) { return spec.log_y ? std::log10(std::max(y, kLogFloor)) : y; };

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k) {
      if (!std::isfinite(s.x[k]) || std::isnan(s.y[k])) continue;
      xmin = std::min(xmin, s.x[k]);
      xmax = std::max(xmax, s.x[k]);
      ymin = std::min(ymin, ty(s.y[k]));
      ymax = std::max(ymax, ty(s.y[k]));
    }
  }
  if (!std::isfinite(xmin)) { xmin = 0; xmax = 1; ymin = 0; ymax = 1; }
  if (xmax <= xmin) xmax = xmin + 1;
  if (spec.log_y) {
    ymin = std::floor(ymin);
    ymax = std::ceil(ymax);
  }
  if (ymax <= ymin) ymax = ymin + 1;

  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return top + (1.0 - (ty(y) - ymin) / (ymax - ymin)) * ph; };
  auto py_raw = [&](double t) { return top + (1.0 - (t - ymin) / (ymax - ymin)) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\"" << spec.height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << spec.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << detail::escape_xml(spec.title) << "</text>\n";

  // Axes and ticks.
  svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : detail::nice_ticks(xmin, xmax)) {
    const double x = px(t);
    svg << "<line x1=\"" << x << "\" y1=\"" << top + ph << "\" x2=\"" << x << "\" y2=\"" << top + ph + 5
        << "\" stroke=\"black\"/>";
    svg << "<text x=\"" << x << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
        << detail::fmt(t, "%g") << "</text>\n";
  }
  if (spec.log_y) {
    const int decades = static_cast<int>(ymax - ymin);
    const int stride = std::max(1, decades / 8);
    for (int e = static_cast<int>(ymin); e <= static_cast<int>(ymax); e += stride) {
      const double y = py_raw(e);
      svg << "<line x1=\"" << left - 5 << "\" y1=\"" << y << "\" x2=\"" << left + pw << "\" y2=\"" << y
          << "\" stroke=\"#ddd\"/>";
      svg << "<text x=\"" << left - 8 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">1e" << e << "</text>\n";
    }
  } else {
    for (double t : detail::nice_ticks(ymin, ymax)) {
      const double y = py_raw(t);
      svg << "<line x1=\"" << left - 5 << "\" y1=\"" << y << "\" x2=\"" << left + pw << "\" y2=\"" << y
          << "\" stroke=\"#ddd\"/>";
      svg << "<text x=\"" << left - 8 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << detail::fmt(t, "%g")
          << "</text>\n";
    }
  }
  svg << "<text x=\"" << left + pw / 2 << "\" y=\"" << spec.height - 15 << "\" text-anchor=\"middle\">"
      << detail::escape_xml(spec.x_label) << "</text>\n";
  svg << "<text transform=\"translate(18," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << detail::escape_xml(spec.y_label) << "</text>\n";

  for (const auto& s : series) {
    svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-opacity=\"" << s.opacity
        << "\" stroke-width=\"" << s.stroke_width << "\"";
    if (s.dashed) svg << " stroke-dasharray=\"5,4\"";
    svg << " points=\"";
    for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k) {
      if (!std::isfinite(s.x[k]) || std::isnan(s.y[k])) continue;
      svg << detail::fmt(px(s.x[k])) << ',' << detail::fmt(py(s.y[k])) << ' ';
    }
    svg << "\"/>\n";
  }

  double ly = top + 12;
  for (const auto& s : series) {
    if (s.label.empty()) continue;
    const double lx = left + pw - 190;
    svg << "<line x1=\"" << lx << "\" y1=\"" << ly - 4 << "\" x2=\"" << lx + 24 << "\" y2=\"" << ly - 4
        << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"5,4\"" : "")
        << "/>";
    svg << "<text x=\"" << lx + 30 << "\" y=\"" << ly << "\">" << detail::escape_xml(s.label) << "</text>\n";
    ly += 16;
  }
  svg << "</svg>\n";
  return svg.str();
}

/// Grid of T/F cells: rows follow `row_values` (top to bottom), columns
/// follow `col_values`.
inline std::string render_bool_grid(const std::string& title, const std::string& row_name,
                                    const std::vector<double>& row_values, const std::string& col_name,
                                    const std::vector<double>& col_values, const std::vector<bool>& cells) {
  const double cell = 40, left = 80, top = 50;
  const double width = left + cell * col_values.size() + 20;
  const double height = top + cell * row_values.size() + 50;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << detail::escape_xml(title) << "</text>\n";
  for (std::size_t r = 0; r < row_values.size(); ++r) {
    const double y = top + cell * r;
    svg << "<text x=\"" << left - 8 << "\" y=\"" << y + cell / 2 + 4 << "\" text-anchor=\"end\">"
        << detail::fmt(row_values[r], "%g") << "</text>\n";
    for (std::size_t c = 0; c < col_values.size(); ++c) {
      const bool on = cells[r * col_values.size() + c];
      const double x = left + cell * c;
      svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\""
          << (on ? "#f6d55c" : "#3b3b6d") << "\" stroke=\"white\"/>";
      svg << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4 << "\" text-anchor=\"middle\" fill=\""
          << (on ? "black" : "white") << "\">" << (on ? 'T' : 'F') << "</text>\n";
    }
  }
  const double bottom = top + cell * row_values.size();
  for (std::size_t c = 0; c < col_values.size(); ++c) {
    svg << "<text x=\"" << left + cell * c + cell / 2 << "\" y=\"" << bottom + 16 << "\" text-anchor=\"middle\">"
        << detail::fmt(col_values[c], "%g") << "</text>\n";
  }
  svg << "<text x=\"" << left + cell * col_values.size() / 2 << "\" y=\"" << bottom + 38
      << "\" text-anchor=\"middle\">" << detail::escape_xml(col_name) << "</text>\n";
  svg << "<text transform=\"translate(20," << top + cell * row_values.size() / 2
      << ") rotate(-90)\" text-anchor=\"middle\">" << detail::escape_xml(row_name) << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace sqrk::harness
