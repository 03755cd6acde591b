#pragma once

// Smooth blend of the two mode fields across a boundary layer |h| < eps, and an
// empirical study of how far the blended solution sits from the Filippov one.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "measures.hpp"
#include "simulate.hpp"
#include "systems.hpp"

namespace filcon {

enum class TransitionKind { Cubic, Saturation };

inline std::string_view to_string(TransitionKind k) { return k == TransitionKind::Cubic ? "cubic" : "saturation"; }

inline TransitionKind parse_transition_kind(std::string_view s) {
  if (s == "cubic") return TransitionKind::Cubic;
  if (s == "saturation") return TransitionKind::Saturation;
  throw std::invalid_argument("unknown transition '" + std::string(s) + "' (expected cubic or saturation)");
}

struct TransitionFunction {
  TransitionKind kind = TransitionKind::Cubic;
  double epsilon = 1e-2;

  /// phi(s) in [-1, 1]; saturates outside [-eps, eps].
  double operator()(double s) const {
    const double r = std::clamp(s / epsilon, -1.0, 1.0);
    if (kind == TransitionKind::Saturation) return r;
    return 0.5 * r * (3.0 - r * r);
  }

  double derivative(double s) const {
    const double r = s / epsilon;
    if (std::abs(r) >= 1.0) return 0.0;
    if (kind == TransitionKind::Saturation) return 1.0 / epsilon;
    return 1.5 * (1.0 - r * r) / epsilon;
  }

  bool is_c1() const { return kind == TransitionKind::Cubic; }
};

/// ((1 + phi(h)) / 2) F+ + ((1 - phi(h)) / 2) F-, exactly F+- outside the layer.
inline Vector regularized_field(const BimodalSystem& sys, const TransitionFunction& phi, const Vector& x, double t) {
  const double p = phi(sys.switching(x));
  if (p == 1.0) return sys.eval_field(Mode::Plus, x, t);
  if (p == -1.0) return sys.eval_field(Mode::Minus, x, t);
  return 0.5 * (1.0 + p) * sys.eval_field(Mode::Plus, x, t) + 0.5 * (1.0 - p) * sys.eval_field(Mode::Minus, x, t);
}

inline Trajectory integrate_regularized(const BimodalSystem& sys, const TransitionFunction& phi, const Vector& x0,
                                        const IntegratorConfig& cfg) {
  auto rhs = [&](double t, const Vector& x) { return regularized_field(sys, phi, x, t); };
  auto label = [&](const Vector& x) {
    const double h = sys.switching(x);
    if (h >= phi.epsilon) return ModeLabel::Plus;
    if (h <= -phi.epsilon) return ModeLabel::Minus;
    return ModeLabel::Sliding;
  };
  return integrate_smooth(rhs, x0, cfg, label);
}

struct OrderPoint {
  double epsilon = 0.0;
  double deviation = 0.0;  // NaN when the run failed
  std::string error;
  bool ok() const { return error.empty(); }
};

struct OrderStudy {
  std::vector<OrderPoint> points;
  double slope = NAN;     // least-squares slope of log(deviation) vs log(eps)
  double constant = NAN;  // exp(intercept): deviation ~ constant * eps^slope
  std::string reference_error;
};

/// Least-squares line through (log x, log y).
inline std::pair<double, double> loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2) return {NAN, NAN};
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = static_cast<double>(n) * sxx - sx * sx;
  if (den == 0.0) return {NAN, NAN};
  const double slope = (static_cast<double>(n) * sxy - sx * sy) / den;
  const double icept = (sy - slope * sx) / static_cast<double>(n);
  return {slope, std::exp(icept)};
}

/// Sup of |a(t) - b(t)| over an evenly spaced grid of `points` times plus any
/// extra times inside [t0, tf].
inline double sup_deviation(const Trajectory& a, const Trajectory& b, double t0, double tf, MeasureKind kind,
                            std::size_t points = 2000, const std::vector<double>& extra = {}) {
  double worst = 0.0;
  auto at = [&](double t) { worst = std::max(worst, vec_norm(kind, Vector(a.at(t) - b.at(t)))); };
  for (std::size_t i = 0; i < points; ++i)
    at(points == 1 ? t0 : t0 + (tf - t0) * static_cast<double>(i) / static_cast<double>(points - 1));
  for (double t : extra)
    if (t >= t0 && t <= tf) at(t);
  return worst;
}

/// Deviation of the regularized solution from the Filippov one for each eps.
/// cfg should use tolerances well below the smallest eps.
inline OrderStudy order_study(const BimodalSystem& sys, TransitionKind kind, const Vector& x0,
                              const IntegratorConfig& cfg, const std::vector<double>& eps_list,
                              MeasureKind norm = MeasureKind::Linf, std::size_t points = 2000) {
  if (eps_list.size() < 3) throw std::invalid_argument("order study: need at least 3 epsilon values");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0.0)) throw std::invalid_argument("order study: epsilon values must be positive");
    if (i > 0 && !(eps_list[i] < eps_list[i - 1]))
      throw std::invalid_argument("order study: epsilon values must be strictly decreasing");
  }
  if (eps_list.back() < 10.0 * cfg.rel_tol)
    throw std::invalid_argument("order study: smallest epsilon must be at least 10x the integration tolerance");

  OrderStudy out;
  Trajectory reference;
  try {
    reference = integrate(sys, x0, cfg);
  } catch (const IntegrationError& e) {
    out.reference_error = e.what();
    for (double eps : eps_list) out.points.push_back({eps, NAN, "reference: " + out.reference_error});
    return out;
  }

  // the boundary-layer deviation peaks at the Filippov event times, in windows
  // of width O(eps) that a uniform grid can step over
  std::vector<double> event_times;
  for (const auto& e : reference.events) event_times.push_back(e.t);

  std::vector<double> xs, ys;
  for (double eps : eps_list) {
    OrderPoint pt{eps, NAN, {}};
    try {
      const auto reg = integrate_regularized(sys, TransitionFunction{kind, eps}, x0, cfg);
      pt.deviation = sup_deviation(reg, reference, cfg.t0, cfg.tf, norm, points, event_times);
      if (pt.deviation > 0.0) {
        xs.push_back(eps);
        ys.push_back(pt.deviation);
      }
    } catch (const IntegrationError& e) {
      pt.error = e.what();
    }
    out.points.push_back(pt);
  }
  std::tie(out.slope, out.constant) = loglog_fit(xs, ys);
  return out;
}

}  // namespace filcon
