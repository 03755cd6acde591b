#pragma once

// Contraction certificates for bimodal plants and their switched observers:
// a measure bound on each closed mode region plus the sliding condition on the
// switching surface. Nonlinear modes are checked on a grid; PWA observers on
// their constant matrices.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "measures.hpp"
#include "systems.hpp"

namespace filcon {

inline constexpr double kSlidingTol = 1e-9;

enum class Verdict { Certified, Falsified, Inconclusive };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Certified: return "certified";
    case Verdict::Falsified: return "falsified";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct Certificate {
  MeasureKind kind = MeasureKind::L2;
  std::string method;  // "sampled" or "exact"
  double c1 = NAN, c2 = NAN, rate = NAN;
  double sliding_residual = NAN;  // max of the sliding-condition measure
  double sliding_min = NAN;       // min of the same, reported only
  double sliding_tol = kSlidingTol;
  Verdict verdict = Verdict::Inconclusive;
  Box region, output_range;
  std::size_t grid = 0, output_grid = 0;
  std::size_t n_plus = 0, n_minus = 0, n_sigma = 0;
  std::vector<std::string> diagnostics;

  bool sliding_negative() const { return sliding_min < -sliding_tol; }
};

struct CertifyOptions {
  MeasureKind kind = MeasureKind::L2;
  Box region;
  Box output_range;
  std::size_t grid = 41;
  std::size_t output_grid = 41;
  double sliding_tol = kSlidingTol;
  double tol_h = kSigmaTol;
  double t = 0.0;  // time at which time-dependent fields are frozen
};

inline CertifyOptions certify_options_from(const ProblemConfig& cfg) {
  CertifyOptions o;
  o.kind = cfg.certify.kind;
  o.region = cfg.certify.region;
  o.output_range = cfg.certify.output_range;
  o.grid = cfg.certify.grid;
  o.output_grid = cfg.certify.output_grid;
  o.t = cfg.sim.integrator.t0;
  return o;
}

namespace detail {

inline double grid_coord(const std::pair<double, double>& r, std::size_t k, std::size_t count) {
  if (count <= 1 || r.first == r.second) return 0.5 * (r.first + r.second);
  return r.first + (r.second - r.first) * static_cast<double>(k) / static_cast<double>(count - 1);
}

/// All points of the tensor grid over `box`, last axis fastest.
inline std::vector<Vector> tensor_grid(const Box& box, std::size_t count) {
  std::vector<Vector> pts;
  const std::size_t d = box.size();
  if (d == 0 || count == 0) return pts;
  std::vector<std::size_t> idx(d, 0);
  while (true) {
    Vector p(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) p[static_cast<Eigen::Index>(i)] = grid_coord(box[i], idx[i], count);
    pts.push_back(std::move(p));
    std::size_t ax = d;
    while (ax > 0) {
      --ax;
      if (++idx[ax] < count) break;
      idx[ax] = 0;
      if (ax == 0) return pts;
    }
  }
}

inline bool has_time_dependence(const BimodalSystem& sys) {
  for (Mode m : {Mode::Plus, Mode::Minus}) {
    const auto& f = sys.field(m);
    for (const auto& c : f.components)
      if (depends_on_time(c)) return true;
  }
  return false;
}

}  // namespace detail

/// Grid points of the region split into the closed mode sets, plus surface
/// points: grid points with |h| <= tol_h and roots of h located by bisection on
/// every grid edge where h changes sign.
struct RegionSample {
  std::vector<Vector> plus, minus, sigma;
};

inline RegionSample sample_region(const BimodalSystem& sys, const Box& region, std::size_t grid, double tol_h) {
  RegionSample s;
  const std::size_t n = sys.dimension();
  if (region.size() != n) throw std::invalid_argument("certify: region needs one interval per state");
  if (grid < 2) throw std::invalid_argument("certify: grid needs at least 2 points per axis");
  const auto pts = detail::tensor_grid(region, grid);
  std::vector<double> hv(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    hv[i] = sys.switching(pts[i]);
    const bool on = std::abs(hv[i]) <= tol_h;
    if (on) s.sigma.push_back(pts[i]);
    if (hv[i] >= 0.0 || on) s.plus.push_back(pts[i]);
    if (hv[i] <= 0.0 || on) s.minus.push_back(pts[i]);
  }
  // edges along each axis; flat index stride for axis a is grid^(n-1-a)
  std::size_t stride = 1;
  for (std::size_t a = n; a-- > 0;) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if ((i / stride) % grid == grid - 1) continue;
      const std::size_t j = i + stride;
      if (!(hv[i] * hv[j] < 0.0) || std::abs(hv[i]) <= tol_h || std::abs(hv[j]) <= tol_h) continue;
      Vector lo = pts[i], hi = pts[j];
      double hlo = hv[i];
      Vector mid = lo;
      for (int it = 0; it < 100; ++it) {
        mid = 0.5 * (lo + hi);
        const double hm = sys.switching(mid);
        if (std::abs(hm) <= tol_h) break;
        if ((hm < 0.0) == (hlo < 0.0)) {
          lo = mid;
          hlo = hm;
        } else {
          hi = mid;
        }
      }
      s.sigma.push_back(mid);
      s.plus.push_back(mid);
      s.minus.push_back(mid);
    }
    stride *= grid;
  }
  return s;
}

/// Gain-independent quantities at every sample point, so that certificates for
/// many candidate gains cost only small matrix products.
struct SampledRegion {
  struct ModePoint {
    Matrix J;   // df/dx
    Matrix dg;  // dg/dx
  };
  struct SigmaPoint {
    Vector df;    // f+ - f-
    Vector g;     // g(x)
    Vector grad;  // grad h
  };
  std::vector<ModePoint> plus, minus;
  std::vector<SigmaPoint> sigma;
  std::vector<Vector> outputs;  // output grid
  CertifyOptions opts;
  bool time_dependent = false;
};

inline SampledRegion prepare_region(const BimodalSystem& sys, const CertifyOptions& opts, bool need_outputs) {
  SampledRegion r;
  r.opts = opts;
  r.time_dependent = detail::has_time_dependence(sys);
  const auto s = sample_region(sys, opts.region, opts.grid, opts.tol_h);
  for (const auto& x : s.plus) r.plus.push_back({sys.jacobian(Mode::Plus, x, opts.t), sys.output_jacobian(x)});
  for (const auto& x : s.minus) r.minus.push_back({sys.jacobian(Mode::Minus, x, opts.t), sys.output_jacobian(x)});
  for (const auto& x : s.sigma)
    r.sigma.push_back({Vector(sys.mode_field(Mode::Plus, x, opts.t) - sys.mode_field(Mode::Minus, x, opts.t)),
                       sys.output(x), sys.switching_gradient(x)});
  if (need_outputs) {
    if (opts.output_range.size() != sys.output_dimension())
      throw std::invalid_argument("certify: output range needs one interval per output");
    r.outputs = detail::tensor_grid(opts.output_range, std::max<std::size_t>(opts.output_grid, 1));
  }
  return r;
}

namespace detail {

inline void finish_certificate(Certificate& c) {
  c.rate = std::min(c.c1, c.c2);
  const bool bad_plus = c.n_plus > 0 && !(c.c1 > 0.0);
  const bool bad_minus = c.n_minus > 0 && !(c.c2 > 0.0);
  const bool bad_sigma = c.n_sigma > 0 && !(c.sliding_residual <= c.sliding_tol);
  if (bad_plus) c.diagnostics.push_back("plus-mode measure is not negative");
  if (bad_minus) c.diagnostics.push_back("minus-mode measure is not negative");
  if (bad_sigma) c.diagnostics.push_back("sliding condition violated");
  if (bad_plus || bad_minus || bad_sigma) {
    c.verdict = Verdict::Falsified;
    return;
  }
  if (c.n_plus == 0 || c.n_minus == 0) {
    c.verdict = Verdict::Inconclusive;
    c.diagnostics.push_back("region does not meet both mode sets");
    return;
  }
  if (c.n_sigma == 0) {
    c.verdict = Verdict::Inconclusive;
    c.diagnostics.push_back("no switching-surface points in the sampled region");
    return;
  }
  c.verdict = Verdict::Certified;
}

inline Certificate blank_certificate(const CertifyOptions& o, std::string method) {
  Certificate c;
  c.kind = o.kind;
  c.method = std::move(method);
  c.region = o.region;
  c.output_range = o.output_range;
  c.grid = o.grid;
  c.output_grid = o.output_grid;
  c.sliding_tol = o.sliding_tol;
  return c;
}

}  // namespace detail

/// Observer certificate from cached samples; zero gains give the plant check.
inline Certificate certify_sampled(const SampledRegion& r, const Matrix* L_plus, const Matrix* L_minus) {
  Certificate c = detail::blank_certificate(r.opts, "sampled");
  const MeasureKind kind = r.opts.kind;
  double worst_plus = -std::numeric_limits<double>::infinity();
  double worst_minus = worst_plus;
  for (const auto& p : r.plus) {
    const double m = L_plus ? measure(kind, Matrix(p.J - *L_plus * p.dg)) : measure(kind, p.J);
    worst_plus = std::max(worst_plus, m);
  }
  for (const auto& p : r.minus) {
    const double m = L_minus ? measure(kind, Matrix(p.J - *L_minus * p.dg)) : measure(kind, p.J);
    worst_minus = std::max(worst_minus, m);
  }
  c.c1 = -worst_plus;
  c.c2 = -worst_minus;
  c.n_plus = r.plus.size();
  c.n_minus = r.minus.size();
  c.n_sigma = r.sigma.size();

  double res_max = -std::numeric_limits<double>::infinity();
  double res_min = std::numeric_limits<double>::infinity();
  const bool with_gain = L_plus && L_minus;
  const Matrix dL = with_gain ? Matrix(*L_plus - *L_minus) : Matrix();
  const bool gain_jump = with_gain && dL.cwiseAbs().maxCoeff() > 0.0;
  for (const auto& s : r.sigma) {
    auto account = [&](const Vector& v) {
      const double m = measure(kind, Matrix(v * s.grad.transpose()));
      res_max = std::max(res_max, m);
      res_min = std::min(res_min, m);
    };
    if (gain_jump) {
      if (r.outputs.empty()) throw std::invalid_argument("certify: gains differ between modes; an output range is required");
      for (const auto& y : r.outputs) account(Vector(s.df + dL * (y - s.g)));
    } else {
      account(s.df);
    }
  }
  c.sliding_residual = res_max;
  c.sliding_min = res_min;
  if (r.time_dependent) c.diagnostics.push_back("fields depend on t; checked at a single time only");
  detail::finish_certificate(c);
  return c;
}

/// Plant contraction check on a grid (no output injection).
inline Certificate certify_plant(const BimodalSystem& sys, const CertifyOptions& opts) {
  return certify_sampled(prepare_region(sys, opts, false), nullptr, nullptr);
}

/// Observer check on a grid over the estimate region and output range.
inline Certificate certify_observer(const ObserverSpec& obs, const CertifyOptions& opts) {
  obs.validate();
  const bool jump = (obs.L_plus - obs.L_minus).cwiseAbs().maxCoeff() > 0.0;
  const auto r = prepare_region(*obs.base, opts, jump);
  return certify_sampled(r, &obs.L_plus, &obs.L_minus);
}

/// Exact check for PWA observers: constant mode matrices; the sliding vector is
/// evaluated once when it is constant on the surface, else on surface samples.
inline Certificate certify_pwa_exact(const ObserverSpec& obs, const CertifyOptions& opts) {
  obs.validate();
  const auto& pwa = obs.base->pwa();
  if (!pwa) throw std::invalid_argument("certify: exact check requires a system built from PWA matrices");
  Certificate c = detail::blank_certificate(opts, "exact");
  const Matrix Ep = pwa->A_plus - obs.L_plus * pwa->C;
  const Matrix Em = pwa->A_minus - obs.L_minus * pwa->C;
  c.c1 = -measure(opts.kind, Ep);
  c.c2 = -measure(opts.kind, Em);
  c.n_plus = 1;
  c.n_minus = 1;

  const Matrix dA = pwa->A_plus - pwa->A_minus;
  const Vector db = pwa->b_plus - pwa->b_minus;
  const Matrix dL = obs.L_plus - obs.L_minus;
  const bool constant = dA.cwiseAbs().maxCoeff() == 0.0 && dL.cwiseAbs().maxCoeff() == 0.0;
  double res_max = -std::numeric_limits<double>::infinity();
  double res_min = std::numeric_limits<double>::infinity();
  auto account = [&](const Vector& v) {
    const double m = measure(opts.kind, Matrix(v * pwa->h.transpose()));
    res_max = std::max(res_max, m);
    res_min = std::min(res_min, m);
  };
  if (constant) {
    account(db);
    c.n_sigma = 1;
  } else {
    if (opts.region.empty()) throw std::invalid_argument("certify: surface sampling needs a region");
    const auto s = sample_region(*obs.base, opts.region, opts.grid, opts.tol_h);
    std::vector<Vector> ys;
    if (dL.cwiseAbs().maxCoeff() > 0.0) {
      if (opts.output_range.size() != obs.base->output_dimension())
        throw std::invalid_argument("certify: gains differ between modes; an output range is required");
      ys = detail::tensor_grid(opts.output_range, std::max<std::size_t>(opts.output_grid, 1));
    }
    for (const auto& x : s.sigma) {
      const Vector base = dA * x + db;
      if (ys.empty()) {
        account(base);
      } else {
        for (const auto& y : ys) account(Vector(base + dL * (y - pwa->C * x)));
      }
    }
    c.n_sigma = s.sigma.size();
  }
  c.sliding_residual = res_max;
  c.sliding_min = res_min;
  detail::finish_certificate(c);
  return c;
}

/// Exact method for PWA systems, sampled otherwise.
inline Certificate certify_auto(const ObserverSpec& obs, const CertifyOptions& opts) {
  return obs.base->pwa() ? certify_pwa_exact(obs, opts) : certify_observer(obs, opts);
}

}  // namespace filcon
