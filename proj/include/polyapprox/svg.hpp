// SPDX-License-Identifier: Apache-2.0
#pragma once

// Minimal line-chart writer: axes with ticks, one polyline per series, legend.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

namespace polyapprox::svg {

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

namespace detail {

inline std::string esc(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '&': o += "&amp;"; break;
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '"': o += "&quot;"; break;
      default: o += c;
    }
  }
  return o;
}

inline std::string num(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.6g", v);
  return b;
}

// Roughly five round tick values covering [lo, hi].
inline std::vector<double> ticks(double lo, double hi) {
  const double span = hi - lo > 0 ? hi - lo : 1.0;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  }
  std::vector<double> t;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step) t.push_back(v);
  return t;
}

}  // namespace detail

inline std::string line_chart(const std::string& title, const std::string& xlabel,
                              const std::string& ylabel, const std::vector<Series>& series,
                              int width = 640, int height = 420) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  const double ml = 70, mr = 160, mt = 40, mb = 50;
  double x0 = INFINITY, x1 = -INFINITY, y0 = 0, y1 = -INFINITY;
  for (const auto& s : series)
    for (auto [x, y] : s.points) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  const double pw = width - ml - mr, ph = height - mt - mb;
  auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return mt + ph - (y - y0) / (y1 - y0) * ph; };
  using detail::num;

  std::string o;
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
       "\" height=\"" + std::to_string(height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o += "<text x=\"" + num(ml + pw / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
       detail::esc(title) + "</text>\n";
  o += "<line x1=\"" + num(ml) + "\" y1=\"" + num(mt + ph) + "\" x2=\"" + num(ml + pw) + "\" y2=\"" +
       num(mt + ph) + "\" stroke=\"black\"/>\n";
  o += "<line x1=\"" + num(ml) + "\" y1=\"" + num(mt) + "\" x2=\"" + num(ml) + "\" y2=\"" +
       num(mt + ph) + "\" stroke=\"black\"/>\n";
  for (double t : detail::ticks(x0, x1)) {
    o += "<line x1=\"" + num(px(t)) + "\" y1=\"" + num(mt + ph) + "\" x2=\"" + num(px(t)) +
         "\" y2=\"" + num(mt + ph + 5) + "\" stroke=\"black\"/>";
    o += "<text x=\"" + num(px(t)) + "\" y=\"" + num(mt + ph + 18) + "\" text-anchor=\"middle\">" +
         num(t) + "</text>\n";
  }
  for (double t : detail::ticks(y0, y1)) {
    o += "<line x1=\"" + num(ml - 5) + "\" y1=\"" + num(py(t)) + "\" x2=\"" + num(ml) + "\" y2=\"" +
         num(py(t)) + "\" stroke=\"black\"/>";
    o += "<text x=\"" + num(ml - 8) + "\" y=\"" + num(py(t) + 4) + "\" text-anchor=\"end\">" +
         num(t) + "</text>\n";
  }
  o += "<text x=\"" + num(ml + pw / 2) + "\" y=\"" + num(height - 12.0) +
       "\" text-anchor=\"middle\">" + detail::esc(xlabel) + "</text>\n";
  o += "<text transform=\"translate(16," + num(mt + ph / 2) +
       ") rotate(-90)\" text-anchor=\"middle\">" + detail::esc(ylabel) + "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* col = colors[i % 6];
    std::string pts;
    for (auto [x, y] : series[i].points) pts += num(px(x)) + "," + num(py(y)) + " ";
    o += "<polyline fill=\"none\" stroke=\"" + std::string(col) + "\" stroke-width=\"2\" points=\"" +
         pts + "\"/>\n";
    const double ly = mt + 10 + 18.0 * static_cast<double>(i);
    o += "<line x1=\"" + num(ml + pw + 15) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(ml + pw + 40) +
         "\" y2=\"" + num(ly) + "\" stroke=\"" + col + "\" stroke-width=\"2\"/>";
    o += "<text x=\"" + num(ml + pw + 45) + "\" y=\"" + num(ly + 4) + "\">" +
         detail::esc(series[i].name) + "</text>\n";
  }
  o += "</svg>\n";
  return o;
}

}  // namespace polyapprox::svg
