#pragma once

// Event-driven integration of bimodal Filippov systems.
//
// Inside a mode the flow is advanced by the Dormand-Prince 5(4) pair with PI
// step control. A sign change of h over an accepted step is located by
// bisection on the cubic Hermite interpolant of that step; the state is then
// classified from the normal components of the two fields (cross, slide, or
// graze). Sliding motion follows the Filippov convex combination and is
// projected back onto h = 0 after every accepted step.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "measures.hpp"
#include "systems.hpp"

namespace filcon {

enum class ModeLabel : int { Minus = -1, Sliding = 0, Plus = 1 };

enum class EventKind { Crossing, SlidingEntry, SlidingExit, Grazing };

inline std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::Crossing: return "crossing";
    case EventKind::SlidingEntry: return "sliding-entry";
    case EventKind::SlidingExit: return "sliding-exit";
    case EventKind::Grazing: return "grazing";
  }
  return "?";
}

inline ModeLabel label_of(Mode m) { return m == Mode::Plus ? ModeLabel::Plus : ModeLabel::Minus; }

struct IntegratorConfig {
  double t0 = 0.0;
  double tf = 1.0;
  double rel_tol = 1e-9;
  double abs_tol = 1e-11;
  double max_step = 0.05;
  double tol_event = 1e-10;
  double sample_interval = 0.01;
  std::size_t max_events = 1'000'000;
  std::size_t max_steps = 20'000'000;

  void validate() const {
    if (!(rel_tol > 0 && abs_tol > 0 && max_step > 0 && tol_event > 0 && sample_interval > 0))
      throw std::invalid_argument("integrator: tolerances, max_step and sample_interval must be positive");
    if (!(t0 < tf)) throw std::invalid_argument("integrator: t0 must be less than tf");
  }

  /// Uniform output grid t0 + k * sample_interval, closed with tf.
  std::vector<double> sample_times() const {
    std::vector<double> ts;
    const double span = tf - t0;
    const double ratio = span / sample_interval;
    auto k_max = static_cast<std::size_t>(std::floor(ratio + 1e-9));
    ts.reserve(k_max + 2);
    for (std::size_t k = 0; k <= k_max; ++k) ts.push_back(std::min(tf, t0 + static_cast<double>(k) * sample_interval));
    if (tf - ts.back() > 1e-12 * std::max(1.0, std::abs(tf))) ts.push_back(tf);
    else ts.back() = tf;
    return ts;
  }
};

struct Sample {
  double t;
  Vector x;
  ModeLabel mode;
};

struct Event {
  double t;
  EventKind kind;
  Vector x;
  ModeLabel from;
  ModeLabel to;
};

/// Fourth-order continuous extension of a Dormand-Prince step over [t0, t0 + h].
struct DenseStep {
  double t0 = 0.0, h = 0.0;
  Vector y0, r2, r3, r4, r5;

  bool valid() const { return h > 0.0; }
  Vector at(double t) const {
    const double s = std::clamp((t - t0) / h, 0.0, 1.0);
    const double u = 1.0 - s;
    return y0 + s * (r2 + u * (r3 + s * (r4 + u * r5)));
  }
};

/// One accepted step, kept for dense output. Steps cut short at an event keep
/// the interpolant of the full step.
struct Segment {
  double t0, t1;
  Vector x0, x1, f0, f1;
  ModeLabel mode;
  DenseStep dense{};

  Vector at(double t) const {
    if (dense.valid()) return dense.at(std::clamp(t, t0, t1));
    const double h = t1 - t0;
    if (h <= 0.0) return x0;
    const double s = std::clamp((t - t0) / h, 0.0, 1.0);
    const double s2 = s * s;
    const double s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * x0 + (s3 - 2 * s2 + s) * h * f0 + (-2 * s3 + 3 * s2) * x1 + (s3 - s2) * h * f1;
  }
};

class Trajectory {
 public:
  std::vector<Sample> samples;
  std::vector<Event> events;
  std::vector<Segment> segments;

  double t_begin() const { return segments.empty() ? 0.0 : segments.front().t0; }
  double t_end() const { return segments.empty() ? 0.0 : segments.back().t1; }

  const Segment& segment_at(double t) const {
    if (segments.empty()) throw std::logic_error("trajectory: no dense output");
    auto it = std::lower_bound(segments.begin(), segments.end(), t,
                               [](const Segment& s, double v) { return s.t1 < v; });
    if (it == segments.end()) return segments.back();
    return *it;
  }

  /// Dense output (cubic Hermite over the accepted step containing t).
  Vector at(double t) const { return segment_at(t).at(t); }
  ModeLabel mode_at(double t) const { return segment_at(t).mode; }

  std::size_t count(EventKind k) const {
    return static_cast<std::size_t>(
        std::count_if(events.begin(), events.end(), [k](const Event& e) { return e.kind == k; }));
  }
};

class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double t, Trajectory partial)
      : std::runtime_error(what + " at t = " + std::to_string(t)), t_(t), partial_(std::move(partial)) {}
  double time() const noexcept { return t_; }
  const Trajectory& partial() const noexcept { return partial_; }

 private:
  double t_;
  Trajectory partial_;
};

class DegenerateSliding : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A two-mode field with a scalar switching function.
template <class F>
concept SwitchedField = requires(const F& f, const Vector& x, double t, Mode m) {
  { f.dimension() } -> std::convertible_to<std::size_t>;
  { f.rhs(m, x, t) } -> std::convertible_to<Vector>;
  { f.switching(x) } -> std::convertible_to<double>;
  { f.switching_gradient(x) } -> std::convertible_to<Vector>;
};

/// Adapts a plant to the integrator: F+- = f+- + u.
struct PlantField {
  const BimodalSystem& sys;
  std::size_t dimension() const { return sys.dimension(); }
  Vector rhs(Mode m, const Vector& x, double t) const { return sys.eval_field(m, x, t); }
  double switching(const Vector& x) const { return sys.switching(x); }
  Vector switching_gradient(const Vector& x) const { return sys.switching_gradient(x); }
};

enum class SlidingStatus { Stay, ExitPlus, ExitMinus };

namespace detail {

struct NormalComponents {
  double plus;
  double minus;
  Vector grad;
  Vector f_plus;
  Vector f_minus;
};

template <SwitchedField F>
NormalComponents normal_components(const F& field, const Vector& x, double t) {
  NormalComponents nc;
  nc.grad = field.switching_gradient(x);
  nc.f_plus = field.rhs(Mode::Plus, x, t);
  nc.f_minus = field.rhs(Mode::Minus, x, t);
  nc.plus = nc.grad.dot(nc.f_plus);
  nc.minus = nc.grad.dot(nc.f_minus);
  return nc;
}

inline SlidingStatus exit_status(double sp, double sm) {
  const bool to_plus = sp >= 0.0;
  const bool to_minus = sm <= 0.0;
  if (to_plus && to_minus) return sp >= -sm ? SlidingStatus::ExitPlus : SlidingStatus::ExitMinus;
  if (to_plus) return SlidingStatus::ExitPlus;
  if (to_minus) return SlidingStatus::ExitMinus;
  return SlidingStatus::Stay;
}

/// Filippov combination with alpha clamped to [0, 1].
inline Vector filippov_combination(const NormalComponents& nc) {
  const double den = nc.minus - nc.plus;
  if (std::abs(den) < 1e-14) throw DegenerateSliding("sliding: normal components do not separate (grazing)");
  const double alpha = std::clamp(nc.minus / den, 0.0, 1.0);
  return (1.0 - alpha) * nc.f_minus + alpha * nc.f_plus;
}

template <SwitchedField F>
Vector project_to_surface(const F& field, const Vector& x) {
  const double hv = field.switching(x);
  const Vector g = field.switching_gradient(x);
  const double g2 = g.squaredNorm();
  if (g2 == 0.0) throw DegenerateSliding("switching gradient vanishes on the surface");
  return x - (hv / g2) * g;
}

// Dormand-Prince 5(4) tableau.
struct DormandPrince {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  static constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                          d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                          d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  struct Result {
    Vector y;
    Vector f;  // derivative at the new point (FSAL)
    double err;
    Vector r5;  // h * (d1 k1 + d3 k3 + ... + d7 k7)
  };

  static DenseStep dense(double t, double h, const Vector& y0, const Vector& k1, const Result& r) {
    DenseStep d;
    d.t0 = t;
    d.h = h;
    d.y0 = y0;
    d.r2 = r.y - y0;
    d.r3 = h * k1 - d.r2;
    d.r4 = d.r2 - h * r.f - d.r3;
    d.r5 = r.r5;
    return d;
  }

  template <class Rhs>
  static Result step(const Rhs& rhs, double t, const Vector& y, const Vector& k1, double h, double rtol,
                     double atol) {
    const Vector k2 = rhs(t + c2 * h, Vector(y + h * (a21 * k1)));
    const Vector k3 = rhs(t + c3 * h, Vector(y + h * (a31 * k1 + a32 * k2)));
    const Vector k4 = rhs(t + c4 * h, Vector(y + h * (a41 * k1 + a42 * k2 + a43 * k3)));
    const Vector k5 = rhs(t + c5 * h, Vector(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
    const Vector k6 = rhs(t + h, Vector(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
    Result r;
    r.y = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    r.f = rhs(t + h, r.y);
    const Vector err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * r.f);
    r.r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * r.f);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(r.y[i]));
      const double q = err[i] / sc;
      acc += q * q;
    }
    r.err = y.size() ? std::sqrt(acc / static_cast<double>(y.size())) : 0.0;
    if (!r.y.allFinite() || !r.f.allFinite()) r.err = std::numeric_limits<double>::infinity();
    return r;
  }
};

/// PI step-size controller state.
struct StepController {
  double err_prev = 1e-4;
  static constexpr double beta = 0.04;
  static constexpr double alpha = 0.2 - 0.75 * beta;

  double accept(double h, double err) {
    const double e = std::max(err, 1e-10);
    double fac = 0.9 * std::pow(e, -alpha) * std::pow(err_prev, beta);
    fac = std::clamp(fac, 0.2, 5.0);
    err_prev = std::max(err, 1e-4);
    return h * fac;
  }
  static double reject(double h, double err) {
    const double fac = std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.25;
    return h * std::min(fac, 0.9);
  }
};

template <class Rhs>
double initial_step(const Rhs& rhs, double t, const Vector& x, const Vector& f, const IntegratorConfig& cfg) {
  auto scaled = [&](const Vector& v) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double sc = cfg.abs_tol + cfg.rel_tol * std::abs(x[i]);
      acc += (v[i] / sc) * (v[i] / sc);
    }
    return v.size() ? std::sqrt(acc / static_cast<double>(v.size())) : 0.0;
  };
  const double d0 = scaled(x);
  const double d1 = scaled(f);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, cfg.max_step);
  const Vector x1 = x + h0 * f;
  const Vector f1 = rhs(t + h0, x1);
  const double d2 = scaled(Vector(f1 - f)) / h0;
  const double h1 = (std::max(d1, d2) <= 1e-15) ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / std::max(d1, d2), 0.2);
  return std::min({100 * h0, h1, cfg.max_step, cfg.tf - cfg.t0});
}

/// Emits uniform-grid samples falling in (seg.t0, seg.t1] (or [seg.t0, seg.t1] for the first).
class Sampler {
 public:
  explicit Sampler(const IntegratorConfig& cfg) : times_(cfg.sample_times()) {}

  template <class Project>
  void emit(const Segment& seg, std::vector<Sample>& out, const Project& project) {
    while (next_ < times_.size() && times_[next_] <= seg.t1) {
      const double ts = times_[next_];
      Vector x = ts == seg.t1 ? seg.x1 : (ts == seg.t0 ? seg.x0 : seg.at(ts));
      if (seg.mode == ModeLabel::Sliding) x = project(x);
      out.push_back({ts, std::move(x), seg.mode});
      ++next_;
    }
  }
  void emit_initial(double t0, const Vector& x0, ModeLabel mode, std::vector<Sample>& out) {
    if (next_ == 0 && !times_.empty() && times_[0] == t0) {
      out.push_back({t0, x0, mode});
      ++next_;
    }
  }

 private:
  std::vector<double> times_;
  std::size_t next_ = 0;
};

struct Classification {
  ModeLabel mode;
  EventKind kind;
};

/// Decides the continuation at a point on the switching surface from the
/// normal components of the two fields. `from` is the side the trajectory
/// arrived from (Sliding for an initial condition on the surface).
inline Classification classify(double sp, double sm, ModeLabel from) {
  if (sp < 0.0 && sm > 0.0) return {ModeLabel::Sliding, EventKind::SlidingEntry};
  ModeLabel to;
  bool degenerate = false;
  if (sp > 0.0 && sm > 0.0) {
    to = ModeLabel::Plus;
  } else if (sp < 0.0 && sm < 0.0) {
    to = ModeLabel::Minus;
  } else {
    // grazing or repelling: follow the mean normal direction
    degenerate = true;
    const double d = sp + sm;
    if (d > 0.0) to = ModeLabel::Plus;
    else if (d < 0.0) to = ModeLabel::Minus;
    else to = from == ModeLabel::Minus ? ModeLabel::Minus : ModeLabel::Plus;
  }
  if (degenerate || to == from) return {to, EventKind::Grazing};
  return {to, EventKind::Crossing};
}

}  // namespace detail

/// Filippov sliding vector field (1 - a) F- + a F+ with a = (grad h . F-) / (grad h . (F- - F+)).
/// Requires an attracting surface: grad h . F+ <= 0 <= grad h . F-.
template <SwitchedField F>
Vector sliding_field(const F& field, const Vector& x, double t) {
  const auto nc = detail::normal_components(field, x, t);
  if (std::abs(nc.minus - nc.plus) < 1e-14) throw DegenerateSliding("sliding: degenerate, both fields tangent or equal");
  if (nc.plus > 0.0 || nc.minus < 0.0)
    throw std::domain_error("sliding: surface is not attracting at this point (grad h . F+ = " +
                            std::to_string(nc.plus) + ", grad h . F- = " + std::to_string(nc.minus) + ")");
  return detail::filippov_combination(nc);
}

inline Vector sliding_field(const BimodalSystem& sys, const Vector& x, double t) {
  return sliding_field(PlantField{sys}, x, t);
}

template <SwitchedField F>
SlidingStatus sliding_exit_check(const F& field, const Vector& x, double t) {
  const auto nc = detail::normal_components(field, x, t);
  return detail::exit_status(nc.plus, nc.minus);
}

inline SlidingStatus sliding_exit_check(const BimodalSystem& sys, const Vector& x, double t) {
  return sliding_exit_check(PlantField{sys}, x, t);
}

/// Integrates a switched field from x0 over cfg's time span.
template <SwitchedField F>
Trajectory integrate(const F& field, const Vector& x0, const IntegratorConfig& cfg) {
  using detail::NormalComponents;
  cfg.validate();
  if (static_cast<std::size_t>(x0.size()) != field.dimension())
    throw std::invalid_argument("integrate: initial state has wrong dimension");
  if (!x0.allFinite()) throw std::invalid_argument("integrate: non-finite initial state");

  Trajectory traj;
  detail::Sampler sampler(cfg);
  auto project = [&](const Vector& v) { return detail::project_to_surface(field, v); };
  auto fail = [&](const std::string& what, double at) { throw IntegrationError(what, at, traj); };

  ModeLabel mode;
  auto rhs_for = [&](ModeLabel m) {
    return [&field, m](double t, const Vector& x) -> Vector {
      switch (m) {
        case ModeLabel::Plus: return field.rhs(Mode::Plus, x, t);
        case ModeLabel::Minus: return field.rhs(Mode::Minus, x, t);
        case ModeLabel::Sliding: return detail::filippov_combination(detail::normal_components(field, x, t));
      }
      return Vector();
    };
  };

  double t = cfg.t0;
  Vector x = x0;
  double last_event_t = -std::numeric_limits<double>::infinity();
  std::size_t repeated_events = 0;

  auto record_event = [&](double te, EventKind kind, const Vector& xe, ModeLabel from, ModeLabel to) {
    if (traj.events.size() >= cfg.max_events) fail("too many events (possible Zeno behaviour)", te);
    if (te - last_event_t <= 1e-13 * std::max(1.0, std::abs(te))) {
      if (++repeated_events > 100) fail("event loop without time advance", te);
    } else {
      repeated_events = 0;
    }
    last_event_t = te;
    traj.events.push_back({te, kind, xe, from, to});
  };

  const double h0v = field.switching(x);
  if (std::abs(h0v) <= kSigmaTol) {
    x = project(x);
    const auto nc = detail::normal_components(field, x, t);
    const auto cl = detail::classify(nc.plus, nc.minus, ModeLabel::Sliding);
    mode = cl.mode;
    if (mode == ModeLabel::Sliding) record_event(t, EventKind::SlidingEntry, x, ModeLabel::Sliding, mode);
  } else {
    mode = h0v > 0.0 ? ModeLabel::Plus : ModeLabel::Minus;
  }
  sampler.emit_initial(t, x, mode, traj.samples);

  Vector f;
  try {
    f = rhs_for(mode)(t, x);
  } catch (const DegenerateSliding& e) {
    fail(e.what(), t);
  }
  double h = detail::initial_step(rhs_for(mode), t, x, f, cfg);
  detail::StepController ctrl;
  bool just_switched = true;
  std::size_t steps = 0;
  const double min_step = 1e-14 * std::max(1.0, std::abs(cfg.tf));

  auto push_segment = [&](Segment seg) {
    sampler.emit(seg, traj.samples, project);
    traj.segments.push_back(std::move(seg));
  };

  while (t < cfg.tf) {
    if (++steps > cfg.max_steps) fail("step budget exhausted", t);
    double hs = std::min({h, cfg.max_step, cfg.tf - t});
    if (cfg.tf - (t + hs) < 1e-12 * std::max(1.0, std::abs(cfg.tf))) hs = cfg.tf - t;
    const auto rhs = rhs_for(mode);

    detail::DormandPrince::Result st;
    try {
      st = detail::DormandPrince::step(rhs, t, x, f, hs, cfg.rel_tol, cfg.abs_tol);
    } catch (const DegenerateSliding& e) {
      fail(e.what(), t);
    }
    if (!(st.err <= 1.0)) {
      h = detail::StepController::reject(hs, st.err);
      if (h < min_step) fail(std::isfinite(st.err) ? "step size underflow" : "non-finite state", t);
      continue;
    }

    const double t_new = (hs == cfg.tf - t) ? cfg.tf : t + hs;
    const DenseStep dense = detail::DormandPrince::dense(t, t_new - t, x, f, st);
    Vector x_new = std::move(st.y);
    Vector f_new = std::move(st.f);
    const double h_next = ctrl.accept(hs, st.err);

    try {
      if (mode == ModeLabel::Sliding) {
        x_new = project(x_new);
        f_new = rhs(t_new, x_new);
        auto status_at = [&](const Vector& xs, double ts) {
          const auto nc = detail::normal_components(field, xs, ts);
          return detail::exit_status(nc.plus, nc.minus);
        };
        const SlidingStatus end_status = status_at(x_new, t_new);
        if (end_status != SlidingStatus::Stay) {
          Segment trial{t, t_new, x, x_new, f, f_new, ModeLabel::Sliding, dense};
          double lo = t;
          double hi = t_new;
          SlidingStatus hi_status = end_status;
          for (int it = 0; it < 200 && hi - lo > cfg.tol_event; ++it) {
            const double mid = 0.5 * (lo + hi);
            const SlidingStatus s = status_at(project(trial.at(mid)), mid);
            if (s == SlidingStatus::Stay) {
              lo = mid;
            } else {
              hi = mid;
              hi_status = s;
            }
          }
          const Vector xe = project(trial.at(hi));
          const Vector fe = rhs(hi, xe);
          push_segment({t, hi, x, xe, f, fe, ModeLabel::Sliding, dense});
          const ModeLabel to = hi_status == SlidingStatus::ExitPlus ? ModeLabel::Plus : ModeLabel::Minus;
          record_event(hi, EventKind::SlidingExit, xe, ModeLabel::Sliding, to);
          t = hi;
          x = xe;
          mode = to;
          f = rhs_for(mode)(t, x);
          h = std::max(h_next, 1e3 * min_step);
          just_switched = true;
          continue;
        }
      } else {
        const double s = mode == ModeLabel::Plus ? 1.0 : -1.0;
        const double hn = field.switching(x_new);
        const bool trigger = s * hn < 0.0 && !(just_switched && std::abs(hn) <= cfg.tol_event);
        if (trigger) {
          Segment trial{t, t_new, x, x_new, f, f_new, mode, dense};
          double lo = t;
          double hi = t_new;
          double te = t_new;
          bool located = false;
          for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double hm = field.switching(trial.at(mid));
            if (std::abs(hm) <= cfg.tol_event) {
              te = mid;
              located = true;
              break;
            }
            if (s * hm > 0.0) lo = mid;
            else hi = mid;
            if (hi - lo <= 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(hi))) {
              te = hi;
              located = true;
              break;
            }
          }
          if (!located) fail("event not bracketable", t);
          const Vector xe = project(trial.at(te));
          if (!xe.allFinite()) fail("non-finite state at event", te);
          const Vector fe = rhs(te, xe);
          push_segment({t, te, x, xe, f, fe, mode, dense});
          const auto nc = detail::normal_components(field, xe, te);
          const auto cl = detail::classify(nc.plus, nc.minus, mode);
          record_event(te, cl.kind, xe, mode, cl.mode);
          t = te;
          x = xe;
          mode = cl.mode;
          f = rhs_for(mode)(t, x);
          h = std::max(h_next, 1e3 * min_step);
          just_switched = true;
          continue;
        }
      }
    } catch (const DegenerateSliding& e) {
      fail(e.what(), t);
    }

    if (!x_new.allFinite()) fail("non-finite state", t_new);
    push_segment({t, t_new, x, x_new, f, f_new, mode, dense});
    t = t_new;
    x = std::move(x_new);
    f = std::move(f_new);
    h = h_next;
    just_switched = false;
  }
  return traj;
}

inline Trajectory integrate(const BimodalSystem& sys, const Vector& x0, const IntegratorConfig& cfg) {
  return integrate(PlantField{sys}, x0, cfg);
}

/// Plain adaptive integration of a smooth field (no switching logic).
/// `label` assigns the mode label stored with each step.
inline Trajectory integrate_smooth(const std::function<Vector(double, const Vector&)>& rhs, const Vector& x0,
                                   const IntegratorConfig& cfg,
                                   const std::function<ModeLabel(const Vector&)>& label = {}) {
  cfg.validate();
  if (!x0.allFinite()) throw std::invalid_argument("integrate_smooth: non-finite initial state");
  Trajectory traj;
  detail::Sampler sampler(cfg);
  auto identity = [](const Vector& v) { return v; };
  auto lab = [&](const Vector& v) { return label ? label(v) : ModeLabel::Plus; };

  double t = cfg.t0;
  Vector x = x0;
  sampler.emit_initial(t, x, lab(x), traj.samples);
  Vector f = rhs(t, x);
  double h = detail::initial_step(rhs, t, x, f, cfg);
  detail::StepController ctrl;
  std::size_t steps = 0;
  const double min_step = 1e-14 * std::max(1.0, std::abs(cfg.tf));
  while (t < cfg.tf) {
    if (++steps > cfg.max_steps) throw IntegrationError("step budget exhausted", t, traj);
    double hs = std::min({h, cfg.max_step, cfg.tf - t});
    if (cfg.tf - (t + hs) < 1e-12 * std::max(1.0, std::abs(cfg.tf))) hs = cfg.tf - t;
    auto st = detail::DormandPrince::step(rhs, t, x, f, hs, cfg.rel_tol, cfg.abs_tol);
    if (!(st.err <= 1.0)) {
      h = detail::StepController::reject(hs, st.err);
      if (h < min_step)
        throw IntegrationError(std::isfinite(st.err) ? "step size underflow" : "non-finite state", t, traj);
      continue;
    }
    const double t_new = (hs == cfg.tf - t) ? cfg.tf : t + hs;
    Segment seg{t, t_new, x, st.y, f, st.f, lab(st.y), detail::DormandPrince::dense(t, t_new - t, x, f, st)};
    sampler.emit(seg, traj.samples, identity);
    traj.segments.push_back(std::move(seg));
    h = ctrl.accept(hs, st.err);
    t = t_new;
    x = std::move(st.y);
    f = std::move(st.f);
  }
  return traj;
}

}  // namespace filcon
