#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "opt/errors.hpp"

// Minimal self-contained SVG line charts with a log-scaled y axis, for the
// convergence curves. No external assets, no timestamps: identical inputs
// produce identical bytes.

namespace opt {

struct PlotSeries {
  std::string label;
  std::vector<double> y;  // sampled at x = 0, 1, 2, ...
};

namespace detail {

inline std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string pow10_label(int e) {
  if (e == 0) return "1";
  char buf[16];
  std::snprintf(buf, sizeof buf, "1e%d", e);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

// Log-y line chart. Non-positive or non-finite samples clamp to the bottom
// edge (converged runs legitimately reach exact zero). Throws when no series
// carries a positive finite value to set the scale.
inline void write_log_plot(std::ostream& out, const std::string& title,
                           const std::string& y_label, const std::vector<PlotSeries>& series,
                           const std::string& x_label = "k") {
  if (series.empty()) fail(ErrorCode::invalid_argument, "plot needs at least one series");
  double lo = 0.0, hi = 0.0;
  bool any = false;
  std::size_t max_len = 0;
  for (const auto& s : series) {
    max_len = std::max(max_len, s.y.size());
    for (double v : s.y) {
      if (!(v > 0.0) || !std::isfinite(v)) continue;
      if (!any) {
        lo = hi = v;
        any = true;
      } else {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  if (!any || max_len < 2)
    fail(ErrorCode::invalid_argument, "plot needs positive values over at least two points");

  const int e_lo = static_cast<int>(std::floor(std::log10(lo)));
  int e_hi = static_cast<int>(std::ceil(std::log10(hi)));
  if (e_hi <= e_lo) e_hi = e_lo + 1;

  const double W = 760, H = 480;
  const double ml = 78, mr = 178, mt = 42, mb = 52;
  const double pw = W - ml - mr, ph = H - mt - mb;
  const auto x_at = [&](std::size_t k) {
    return ml + pw * static_cast<double>(k) / static_cast<double>(max_len - 1);
  };
  const auto y_at = [&](double v) {
    if (!(v > 0.0) || !std::isfinite(v)) return mt + ph;  // clamp to bottom
    const double t = (std::log10(v) - e_lo) / static_cast<double>(e_hi - e_lo);
    return mt + ph * (1.0 - std::clamp(t, 0.0, 1.0));
  };

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  out << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << detail::fmt2(ml + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"15\">"
      << detail::xml_escape(title) << "</text>\n";

  // Decade grid and y tick labels; label at most ~8 decades.
  const int decades = e_hi - e_lo;
  const int label_step = std::max(1, (decades + 7) / 8);
  for (int e = e_lo; e <= e_hi; ++e) {
    const double y = y_at(std::pow(10.0, e));
    out << "<line x1=\"" << detail::fmt2(ml) << "\" y1=\"" << detail::fmt2(y) << "\" x2=\""
        << detail::fmt2(ml + pw) << "\" y2=\"" << detail::fmt2(y)
        << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    if ((e - e_lo) % label_step == 0)
      out << "<text x=\"" << detail::fmt2(ml - 6) << "\" y=\"" << detail::fmt2(y + 4)
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
          << detail::pow10_label(e) << "</text>\n";
  }

  // x ticks at ~6 round positions.
  const std::size_t n_ticks = std::min<std::size_t>(6, max_len);
  for (std::size_t t = 0; t < n_ticks; ++t) {
    const std::size_t k = t * (max_len - 1) / (n_ticks - 1 ? n_ticks - 1 : 1);
    const double x = x_at(k);
    out << "<line x1=\"" << detail::fmt2(x) << "\" y1=\"" << detail::fmt2(mt + ph) << "\" x2=\""
        << detail::fmt2(x) << "\" y2=\"" << detail::fmt2(mt + ph + 5)
        << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << detail::fmt2(x) << "\" y=\"" << detail::fmt2(mt + ph + 18)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << k
        << "</text>\n";
  }

  // Axes.
  out << "<line x1=\"" << detail::fmt2(ml) << "\" y1=\"" << detail::fmt2(mt) << "\" x2=\""
      << detail::fmt2(ml) << "\" y2=\"" << detail::fmt2(mt + ph)
      << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  out << "<line x1=\"" << detail::fmt2(ml) << "\" y1=\"" << detail::fmt2(mt + ph) << "\" x2=\""
      << detail::fmt2(ml + pw) << "\" y2=\"" << detail::fmt2(mt + ph)
      << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  out << "<text x=\"" << detail::fmt2(ml + pw / 2) << "\" y=\"" << detail::fmt2(H - 14)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << detail::xml_escape(x_label) << "</text>\n";
  out << "<text x=\"20\" y=\"" << detail::fmt2(mt + ph / 2)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 20 "
      << detail::fmt2(mt + ph / 2) << ")\">" << detail::xml_escape(y_label) << "</text>\n";

  // Curves and legend.
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = palette[i % (sizeof palette / sizeof palette[0])];
    const auto& s = series[i];
    if (s.y.size() >= 2) {
      out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.6\" points=\"";
      for (std::size_t k = 0; k < s.y.size(); ++k) {
        if (k) out << ' ';
        out << detail::fmt2(x_at(k)) << ',' << detail::fmt2(y_at(s.y[k]));
      }
      out << "\"/>\n";
    }
    const double ly = mt + 14 + 18 * static_cast<double>(i);
    out << "<line x1=\"" << detail::fmt2(ml + pw + 12) << "\" y1=\"" << detail::fmt2(ly)
        << "\" x2=\"" << detail::fmt2(ml + pw + 34) << "\" y2=\"" << detail::fmt2(ly)
        << "\" stroke=\"" << color << "\" stroke-width=\"1.6\"/>\n";
    out << "<text x=\"" << detail::fmt2(ml + pw + 40) << "\" y=\"" << detail::fmt2(ly + 4)
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << detail::xml_escape(s.label)
        << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace opt
