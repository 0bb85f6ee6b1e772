/*
 * Copyright 2026 The repmeter Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Minimal deterministic SVG plots. Output depends only on the inputs, so two
// runs over the same reports are byte-identical.

#ifndef REPMETER_SVG_HPP_
#define REPMETER_SVG_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "repmeter/common.hpp"
#include "repmeter/smoothness.hpp"

namespace repmeter::svg {

inline constexpr double kWidth = 640.0;
inline constexpr double kHeight = 420.0;
inline constexpr double kMargin = 60.0;

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = 0.0, hi = 1.0;

  static Range of(const std::vector<double>& v) {
    Range r;
    if (v.empty()) return r;
    r.lo = *std::min_element(v.begin(), v.end());
    r.hi = *std::max_element(v.begin(), v.end());
    const double pad = r.hi > r.lo ? 0.05 * (r.hi - r.lo) : std::max(0.5, 0.5 * std::abs(r.lo));
    r.lo -= pad;
    r.hi += pad;
    return r;
  }
};

/// Plot frame with data-to-pixel mapping and axis labels.
class Canvas {
 public:
  Canvas(std::string title, Range x, Range y) : title_(std::move(title)), x_(x), y_(y) {}

  double px(double x) const { return kMargin + (x - x_.lo) / (x_.hi - x_.lo) * (kWidth - 2 * kMargin); }
  double py(double y) const { return kHeight - kMargin - (y - y_.lo) / (y_.hi - y_.lo) * (kHeight - 2 * kMargin); }

  void add(const std::string& element) { body_ += element + "\n"; }

  std::string render(const std::string& x_label, const std::string& y_label) const {
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
                    "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + num(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" + escape(title_) + "</text>\n";
    s += "<line x1=\"" + num(kMargin) + "\" y1=\"" + num(kHeight - kMargin) + "\" x2=\"" + num(kWidth - kMargin) +
         "\" y2=\"" + num(kHeight - kMargin) + "\" stroke=\"black\"/>\n";
    s += "<line x1=\"" + num(kMargin) + "\" y1=\"" + num(kMargin) + "\" x2=\"" + num(kMargin) + "\" y2=\"" +
         num(kHeight - kMargin) + "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
      const double fx = x_.lo + (x_.hi - x_.lo) * i / 4.0;
      const double fy = y_.lo + (y_.hi - y_.lo) * i / 4.0;
      s += "<text x=\"" + num(px(fx)) + "\" y=\"" + num(kHeight - kMargin + 16) + "\" text-anchor=\"middle\">" +
           num(fx) + "</text>\n";
      s += "<text x=\"" + num(kMargin - 6) + "\" y=\"" + num(py(fy) + 4) + "\" text-anchor=\"end\">" + num(fy) +
           "</text>\n";
    }
    s += "<text x=\"" + num(kWidth / 2) + "\" y=\"" + num(kHeight - 14) + "\" text-anchor=\"middle\">" +
         escape(x_label) + "</text>\n";
    s += "<text x=\"16\" y=\"" + num(kHeight / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         num(kHeight / 2) + ")\">" + escape(y_label) + "</text>\n";
    return s + body_ + "</svg>\n";
  }

 private:
  std::string title_;
  Range x_, y_;
  std::string body_;
};

inline const char* color(std::size_t i) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"};
  return palette[i % 8];
}

struct LabeledPoint {
  std::string label;
  double x = 0.0;
  double y = 0.0;
};

/// Scatter with one labeled marker per point.
inline std::string scatter(const std::string& title, const std::vector<LabeledPoint>& points, const std::string& x_label,
                           const std::string& y_label) {
  std::vector<double> xs, ys;
  for (const auto& p : points) {
    xs.push_back(p.x);
    ys.push_back(p.y);
  }
  Canvas c(title, Range::of(xs), Range::of(ys));
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    c.add("<circle cx=\"" + num(c.px(p.x)) + "\" cy=\"" + num(c.py(p.y)) + "\" r=\"5\" fill=\"" + color(i) + "\"/>");
    c.add("<text x=\"" + num(c.px(p.x) + 8) + "\" y=\"" + num(c.py(p.y) - 6) + "\">" + escape(p.label) + "</text>");
  }
  return c.render(x_label, y_label);
}

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

/// Line plot, one polyline and legend entry per series.
inline std::string lines(const std::string& title, const std::vector<Series>& series, const std::string& x_label,
                         const std::string& y_label) {
  std::vector<double> xs, ys;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      xs.push_back(x);
      ys.push_back(y);
    }
  Range yr = Range::of(ys);
  yr.lo = std::min(yr.lo, 0.0);
  Canvas c(title, Range::of(xs), yr);
  for (std::size_t i = 0; i < series.size(); ++i) {
    std::string pts;
    for (const auto& [x, y] : series[i].points) pts += num(c.px(x)) + "," + num(c.py(y)) + " ";
    c.add("<polyline fill=\"none\" stroke=\"" + std::string(color(i)) + "\" stroke-width=\"2\" points=\"" + pts + "\"/>");
    const double ly = kMargin + 16.0 * static_cast<double>(i);
    c.add("<text x=\"" + num(kWidth - kMargin - 4) + "\" y=\"" + num(ly) + "\" text-anchor=\"end\" fill=\"" +
          color(i) + "\">" + escape(series[i].label) + "</text>");
  }
  return c.render(x_label, y_label);
}

/// Bar chart with exactly one <rect class="bar"> per histogram bin.
inline std::string histogram(const std::string& title, const Histogram& h, const std::string& x_label) {
  require_arg(h.edges.size() == h.counts.size() + 1 && !h.counts.empty(), "histogram edges do not match counts");
  const double top = static_cast<double>(*std::max_element(h.counts.begin(), h.counts.end()));
  Canvas c(title, Range{h.edges.front(), h.edges.back()}, Range{0.0, std::max(1.0, top * 1.05)});
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    const double x0 = c.px(h.edges[b]);
    const double x1 = c.px(h.edges[b + 1]);
    const double y = c.py(static_cast<double>(h.counts[b]));
    c.add("<rect class=\"bar\" x=\"" + num(x0) + "\" y=\"" + num(y) + "\" width=\"" + num(std::max(0.0, x1 - x0 - 1)) +
          "\" height=\"" + num(kHeight - kMargin - y) + "\" fill=\"#1f77b4\"/>");
  }
  return c.render(x_label, "count");
}

}  // namespace repmeter::svg

#endif  // REPMETER_SVG_HPP_
