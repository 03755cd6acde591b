#pragma once

// CSV/SVG/text output for trajectories, error traces, certificates and studies.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "certify.hpp"
#include "observer.hpp"
#include "regularize.hpp"
#include "simulate.hpp"

namespace filcon {

/// Shortest round-trip representation with 17 significant digits.
inline std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline int mode_code(ModeLabel m) { return static_cast<int>(m); }

inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr, std::size_t n) {
  os << "t";
  for (std::size_t i = 0; i < n; ++i) os << ",x" << i + 1;
  os << ",mode\r\n";
  for (const auto& s : tr.samples) {
    os << fmt17(s.t);
    for (Eigen::Index i = 0; i < s.x.size(); ++i) os << ',' << fmt17(s.x[i]);
    os << ',' << mode_code(s.mode) << "\r\n";
  }
}

inline void write_events_csv(std::ostream& os, const Trajectory& tr, std::size_t n) {
  os << "t,kind";
  for (std::size_t i = 0; i < n; ++i) os << ",x" << i + 1;
  os << "\r\n";
  for (const auto& e : tr.events) {
    os << fmt17(e.t) << ',' << to_string(e.kind);
    for (Eigen::Index i = 0; i < e.x.size(); ++i) os << ',' << fmt17(e.x[i]);
    os << "\r\n";
  }
}

inline void write_error_csv(std::ostream& os, const EnvelopeCheck& env) {
  os << "t,err_norm,bound\r\n";
  for (const auto& s : env.samples) os << fmt17(s.t) << ',' << fmt17(s.err) << ',' << fmt17(s.bound) << "\r\n";
}

inline void write_order_csv(std::ostream& os, const OrderStudy& st) {
  os << "epsilon,sup_deviation\r\n";
  for (const auto& p : st.points) os << fmt17(p.epsilon) << ',' << fmt17(p.deviation) << "\r\n";
}

inline void write_certificate_csv_row(std::ostream& os, const Certificate& c, bool header) {
  if (header) os << "measure,method,c1,c2,rate,sliding_residual,verdict,grid,output_grid,n_plus,n_minus,n_sigma\r\n";
  os << to_string(c.kind) << ',' << c.method << ',' << fmt17(c.c1) << ',' << fmt17(c.c2) << ',' << fmt17(c.rate)
     << ',' << fmt17(c.sliding_residual) << ',' << to_string(c.verdict) << ',' << c.grid << ',' << c.output_grid
     << ',' << c.n_plus << ',' << c.n_minus << ',' << c.n_sigma << "\r\n";
}

inline std::string box_string(const Box& b) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (i) os << " x ";
    os << '[' << fmt17(b[i].first) << ", " << fmt17(b[i].second) << ']';
  }
  os << ']';
  return os.str();
}

inline std::string matrix_string(const Matrix& m) {
  std::ostringstream os;
  os << '[';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i) os << "; ";
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? ", " : "") << fmt17(m(i, j));
  }
  os << ']';
  return os.str();
}

inline void write_certificate_report(std::ostream& os, const Certificate& c) {
  os << "measure: " << to_string(c.kind) << '\n'
     << "method: " << c.method << '\n'
     << "c1: " << fmt17(c.c1) << '\n'
     << "c2: " << fmt17(c.c2) << '\n'
     << "rate: " << fmt17(c.rate) << '\n'
     << "sliding_residual: " << fmt17(c.sliding_residual) << '\n'
     << "sliding_min: " << fmt17(c.sliding_min) << (c.sliding_negative() ? " (strictly negative)" : "") << '\n'
     << "sliding_tol: " << fmt17(c.sliding_tol) << '\n'
     << "region: " << box_string(c.region) << '\n'
     << "output_range: " << box_string(c.output_range) << " (user-supplied)\n"
     << "grid: " << c.grid << " per axis, output grid " << c.output_grid << '\n'
     << "samples: plus " << c.n_plus << ", minus " << c.n_minus << ", surface " << c.n_sigma << '\n'
     << "verdict: " << to_string(c.verdict) << '\n';
  for (const auto& d : c.diagnostics) os << "note: " << d << '\n';
}

// --- SVG --------------------------------------------------------------------

struct Series {
  std::string label;
  std::vector<double> x, y;
  bool dashed = false;
};

/// Static line plot. With log_y, non-positive values are dropped.
inline void write_svg_plot(std::ostream& os, const std::vector<Series>& series, const std::string& title,
                           const std::string& xlabel, const std::string& ylabel, bool log_y = false) {
  constexpr double W = 720, H = 440, L = 70, R = 150, T = 40, B = 50;
  auto ty = [&](double v) { return log_y ? std::log10(v) : v; };
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i]) || (log_y && s.y[i] <= 0)) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, ty(s.y[i]));
      ymax = std::max(ymax, ty(s.y[i]));
    }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymin -= 0.5, ymax += 0.5;
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;
  auto px = [&](double v) { return L + (v - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double v) { return H - B - (v - ymin) / (ymax - ymin) * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  auto tick = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return std::string(buf);
  };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double xv = xmin + (xmax - xmin) * k / 5.0;
    const double yv = ymin + (ymax - ymin) * k / 5.0;
    os << "<text x=\"" << num(px(xv)) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << tick(xv)
       << "</text>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\">"
       << (log_y ? "1e" + tick(yv) : tick(yv)) << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
  os << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << (T + H - B) / 2 << ")\">" << ylabel << (log_y ? " (log)" : "") << "</text>\n";
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* col = colors[si % 6];
    os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\""
       << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i]) || (log_y && s.y[i] <= 0)) continue;
      os << num(px(s.x[i])) << ',' << num(py(ty(s.y[i]))) << ' ';
    }
    os << "\"/>\n";
    const double ly = T + 16 + 18 * static_cast<double>(si);
    os << "<line x1=\"" << W - R + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << W - R + 34 << "\" y2=\"" << ly - 4
       << "\" stroke=\"" << col << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"6 4\"" : "")
       << "/>\n";
    os << "<text x=\"" << W - R + 40 << "\" y=\"" << ly << "\">" << s.label << "</text>\n";
  }
  os << "</svg>\n";
}

inline std::vector<Series> trajectory_series(const Trajectory& tr, std::size_t n, const std::string& prefix = "x") {
  std::vector<Series> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i].label = prefix + std::to_string(i + 1);
  for (const auto& s : tr.samples)
    for (std::size_t i = 0; i < n; ++i) {
      out[i].x.push_back(s.t);
      out[i].y.push_back(s.x[static_cast<Eigen::Index>(i)]);
    }
  return out;
}

}  // namespace filcon
