#pragma once

// Plant/observer co-simulation, estimation-error traces and exponential
// envelope checks.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "measures.hpp"
#include "simulate.hpp"
#include "systems.hpp"

namespace filcon {

/// The observer as a switched field driven by the plant output y(t) = g(x(t)),
/// read from the plant's dense output. Switches on h(x^).
struct ObserverField {
  const ObserverSpec& obs;
  const Trajectory& plant;
  std::size_t dimension() const { return obs.base->dimension(); }
  Vector rhs(Mode m, const Vector& xhat, double t) const {
    return obs.observer_field(m, xhat, obs.base->output(plant.at(t)), t);
  }
  double switching(const Vector& x) const { return obs.base->switching(x); }
  Vector switching_gradient(const Vector& x) const { return obs.base->switching_gradient(x); }
};

struct ErrorSample {
  double t;
  double err;
  double bound;
};

struct ErrorTrace {
  MeasureKind kind = MeasureKind::L2;
  double t0 = 0.0;
  double e0 = 0.0;  // |e(t0)|
  std::vector<double> t;
  std::vector<double> err;
};

struct PairResult {
  Trajectory plant;
  Trajectory observer;
  ErrorTrace trace;
};

inline ErrorTrace error_trace(const Trajectory& plant, const Trajectory& observer, MeasureKind kind) {
  if (plant.samples.size() != observer.samples.size())
    throw std::logic_error("error trace: plant and observer sample grids differ");
  ErrorTrace tr;
  tr.kind = kind;
  for (std::size_t i = 0; i < plant.samples.size(); ++i) {
    const auto& a = plant.samples[i];
    const auto& b = observer.samples[i];
    tr.t.push_back(a.t);
    tr.err.push_back(vec_norm(kind, Vector(a.x - b.x)));
  }
  if (!tr.t.empty()) {
    tr.t0 = tr.t.front();
    tr.e0 = tr.err.front();
  }
  return tr;
}

/// Integrates the plant, then the observer against the plant output, on one sample grid.
inline PairResult run_pair(const ObserverSpec& obs, const BimodalSystem& plant_sys, const Vector& x0,
                           const Vector& xhat0, const IntegratorConfig& cfg, MeasureKind kind) {
  obs.validate();
  PairResult r;
  r.plant = integrate(plant_sys, x0, cfg);
  r.observer = integrate(ObserverField{obs, r.plant}, xhat0, cfg);
  r.trace = error_trace(r.plant, r.observer, kind);
  return r;
}

inline PairResult run_pair(const ObserverSpec& obs, const Vector& x0, const Vector& xhat0, const IntegratorConfig& cfg,
                           MeasureKind kind) {
  return run_pair(obs, *obs.base, x0, xhat0, cfg, kind);
}

struct EnvelopeCheck {
  bool pass = false;
  double K = 1.0, c = 0.0, slack = 0.05;
  double fitted_K = 0.0;  // smallest K for which the envelope holds at rate c
  std::vector<ErrorSample> violations;
  std::vector<ErrorSample> samples;
};

inline double envelope(double K, double c, double t, double t0, double e0) { return K * std::exp(-c * (t - t0)) * e0; }

/// Flags samples with |e(t)| > K exp(-c (t - t0)) |e(t0)| (1 + slack).
inline EnvelopeCheck check_envelope(const ErrorTrace& tr, double K, double c, double slack) {
  if (!(c > 0.0)) throw std::invalid_argument("envelope: rate must be positive");
  if (!(K >= 1.0)) throw std::invalid_argument("envelope: K must be at least 1");
  if (!(slack >= 0.0)) throw std::invalid_argument("envelope: slack must be non-negative");
  EnvelopeCheck out;
  out.K = K;
  out.c = c;
  out.slack = slack;
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    const double b = envelope(K, c, tr.t[i], tr.t0, tr.e0);
    out.samples.push_back({tr.t[i], tr.err[i], b});
    const double unit = envelope(1.0, c, tr.t[i], tr.t0, tr.e0);
    if (unit > 0.0) out.fitted_K = std::max(out.fitted_K, tr.err[i] / unit);
    else if (tr.err[i] > 0.0) out.fitted_K = INFINITY;
    if (!(tr.err[i] <= b * (1.0 + slack))) out.violations.push_back({tr.t[i], tr.err[i], b});
  }
  out.pass = out.violations.empty();
  return out;
}

/// Sup of |e| over the tail window [tf/2, tf] (relative to t0).
inline double tail_sup(const ErrorTrace& tr) {
  if (tr.t.empty()) return NAN;
  const double start = tr.t0 + 0.5 * (tr.t.back() - tr.t0);
  double s = 0.0;
  for (std::size_t i = 0; i < tr.t.size(); ++i)
    if (tr.t[i] >= start) s = std::max(s, std::isfinite(tr.err[i]) ? tr.err[i] : INFINITY);
  return s;
}

struct DisturbanceLevel {
  double relative = 0.0;
  double value = 0.0;  // perturbed parameter value
  double tail_sup = 0.0;
  double e0 = 0.0;
};

struct DisturbanceReport {
  std::string parameter;
  std::vector<DisturbanceLevel> levels;  // 0, size, 2 size
  double envelope_tail = 0.0;           // envelope value at the start of the tail window
  bool finite = false;
  bool below_initial = false;  // perturbed tails below |e(t0)|
  bool ratio_ok = false;       // tail(2 size) <= 3 tail(size)
  bool zero_ok = false;        // unperturbed tail within the envelope
  double ratio = NAN;
  bool pass() const { return finite && below_initial && ratio_ok && zero_ok; }
};

/// Perturbs one plant parameter by 0, size and 2 size (relative); the observer keeps
/// the nominal model.
inline DisturbanceReport disturbance_study(const ObserverSpec& obs, const std::string& parameter, double size,
                                           const Vector& x0, const Vector& xhat0, const IntegratorConfig& cfg,
                                           MeasureKind kind, double c, double K = 1.0, double slack = 0.05) {
  const auto idx = obs.base->params().index_of(parameter);
  if (!idx) throw std::invalid_argument("disturbance: unknown parameter '" + parameter + "'");
  if (!(size > 0.0)) throw std::invalid_argument("disturbance: size must be positive");
  const double nominal = obs.base->params().values[*idx];
  DisturbanceReport rep;
  rep.parameter = parameter;
  for (double rel : {0.0, size, 2.0 * size}) {
    const double value = nominal * (1.0 + rel);
    const BimodalSystem plant = obs.base->with_param(parameter, value);
    const auto pr = run_pair(obs, plant, x0, xhat0, cfg, kind);
    rep.levels.push_back({rel, value, tail_sup(pr.trace), pr.trace.e0});
  }
  const double t_tail = cfg.t0 + 0.5 * (cfg.tf - cfg.t0);
  rep.envelope_tail = envelope(K, c, t_tail, cfg.t0, rep.levels[0].e0) * (1.0 + slack);
  rep.finite = std::all_of(rep.levels.begin(), rep.levels.end(),
                           [](const DisturbanceLevel& l) { return std::isfinite(l.tail_sup); });
  rep.below_initial = rep.levels[1].tail_sup < rep.levels[1].e0 && rep.levels[2].tail_sup < rep.levels[2].e0;
  rep.ratio = rep.levels[1].tail_sup > 0.0 ? rep.levels[2].tail_sup / rep.levels[1].tail_sup : INFINITY;
  rep.ratio_ok = rep.ratio <= 3.0;
  rep.zero_ok = rep.levels[0].tail_sup <= rep.envelope_tail;
  return rep;
}

}  // namespace filcon
