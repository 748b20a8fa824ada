#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "hessopt/trace.hpp"

namespace hessopt {

namespace detail {
inline double trace_column(const TraceRecord& r, const std::string& column) {
  if (column == "loss") return r.loss;
  if (column == "true_grad_norm") return r.true_grad_norm;
  if (column == "est_norm") return r.est_norm;
  if (column == "err_norm") return r.err_norm;
  if (column == "eta") return r.eta;
  if (column == "alpha") return r.alpha;
  if (column == "step_norm") return r.step_norm;
  throw std::invalid_argument("emit_plot: unknown column '" + column + "'");
}
}  // namespace detail

// Minimal log-log line chart of trace columns against t. Non-positive values
// cannot appear on a log axis and are skipped.
inline void emit_plot(const std::vector<TraceRecord>& trace,
                      const std::vector<std::string>& columns, const std::string& path,
                      const std::string& title = "") {
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  const double W = 760, H = 480, ml = 70, mr = 20, mt = 36, mb = 46;

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& r : trace) {
    if (r.t <= 0) continue;
    for (const auto& col : columns) {
      const double v = detail::trace_column(r, col);
      if (v <= 0.0) continue;
      xmin = std::min(xmin, static_cast<double>(r.t));
      xmax = std::max(xmax, static_cast<double>(r.t));
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  }
  const bool empty = xmin > xmax;
  if (empty) {
    xmin = 1;
    xmax = 10;
    ymin = 0.1;
    ymax = 10;
  }
  if (xmin == xmax) xmax = xmin * 10;
  if (ymin == ymax) {
    ymin /= 10;
    ymax *= 10;
  }
  const double lx0 = std::log10(xmin), lx1 = std::log10(xmax);
  const double ly0 = std::log10(ymin), ly1 = std::log10(ymax);
  auto px = [&](double t) { return ml + (std::log10(t) - lx0) / (lx1 - lx0) * (W - ml - mr); };
  auto py = [&](double v) { return H - mb - (std::log10(v) - ly0) / (ly1 - ly0) * (H - mt - mb); };

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty())
    out << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title
        << "</text>\n";

  // frame and decade ticks
  out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << (W - ml - mr) << "\" height=\""
      << (H - mt - mb) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int e = static_cast<int>(std::ceil(lx0)); e <= static_cast<int>(std::floor(lx1)); ++e) {
    const double x = px(std::pow(10.0, e));
    out << "<line x1=\"" << x << "\" y1=\"" << (H - mb) << "\" x2=\"" << x << "\" y2=\""
        << (H - mb + 5) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << x << "\" y=\"" << (H - mb + 20)
        << "\" text-anchor=\"middle\" font-size=\"11\">1e" << e << "</text>\n";
  }
  for (int e = static_cast<int>(std::ceil(ly0)); e <= static_cast<int>(std::floor(ly1)); ++e) {
    const double y = py(std::pow(10.0, e));
    out << "<line x1=\"" << (ml - 5) << "\" y1=\"" << y << "\" x2=\"" << ml << "\" y2=\"" << y
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << (ml - 8) << "\" y=\"" << (y + 4)
        << "\" text-anchor=\"end\" font-size=\"11\">1e" << e << "</text>\n";
  }
  out << "<text x=\"" << W / 2 << "\" y=\"" << (H - 10)
      << "\" text-anchor=\"middle\" font-size=\"12\">t</text>\n";

  int color_index = 0;
  double legend_y = mt + 14;
  for (const auto& col : columns) {
    const char* color = kColors[color_index++ % 6];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\" points=\"";
    for (const auto& r : trace) {
      const double v = detail::trace_column(r, col);
      if (r.t <= 0 || v <= 0.0) continue;
      out << px(static_cast<double>(r.t)) << "," << py(v) << " ";
    }
    out << "\"/>\n";
    out << "<text x=\"" << (W - mr - 8) << "\" y=\"" << legend_y
        << "\" text-anchor=\"end\" font-size=\"11\" fill=\"" << color << "\">" << col
        << "</text>\n";
    legend_y += 14;
  }
  out << "</svg>\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace hessopt
