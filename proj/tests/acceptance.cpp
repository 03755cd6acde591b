// Acceptance run: one PASS/FAIL line per criterion with tolerance and runtime.
// Exit status is nonzero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "filcon/filcon.hpp"

using namespace filcon;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

Matrix col(double a, double b) {
  Matrix m(2, 1);
  m << a, b;
  return m;
}

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index n) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = u(rng);
  return m;
}

// criterion-1 corpus: 200 matrices, n cycling through 2..5
std::vector<Matrix> corpus() {
  std::mt19937_64 rng(20240611);
  std::vector<Matrix> out;
  for (int k = 0; k < 200; ++k) out.push_back(random_matrix(rng, 2 + k % 4));
  return out;
}

constexpr MeasureKind kKinds[] = {MeasureKind::L1, MeasureKind::L2, MeasureKind::Linf};

ObserverSpec with_gains(const ProblemConfig& cfg, const Matrix& lp, const Matrix& lm) {
  return ObserverSpec(cfg.system, lp, lm);
}

void c1(Outcome& o) {
  double worst = 0.0;
  std::size_t not_linear = 0;
  for (const auto& a : corpus())
    for (auto kind : kKinds) {
      const double exact = measure(kind, a);
      worst = std::max(worst, std::abs(exact - measure_limit_oracle(kind, a, 1e-6)));
      // first order: d(h) <= 1.5 (d(1e-3) / 1e-3) h, above the rounding floor
      const double k = std::abs(exact - measure_limit_oracle(kind, a, 1e-3)) / 1e-3;
      for (double h : {1e-4, 1e-5})
        if (std::abs(exact - measure_limit_oracle(kind, a, h)) > 1.5 * k * h + 1e-9) ++not_linear;
    }
  o.detail << "max |closed - oracle(1e-6)| = " << worst << " (tol 1e-4); non-linear shrinkage cases " << not_linear
           << " of 1200";
  o.require(worst <= 1e-4, "oracle gap");
  o.require(not_linear == 0, "linear shrinkage");
}

void c2(Outcome& o) {
  const auto cfg = builtin_example(2);
  auto opts = certify_options_from(cfg);
  opts.kind = MeasureKind::L1;
  const auto a = certify_pwa_exact(with_gains(cfg, col(1, 1), col(1, 1)), opts);
  const auto b = certify_pwa_exact(with_gains(cfg, col(1.5, 2), col(1.5, 2)), opts);
  const auto z = certify_pwa_exact(with_gains(cfg, col(0, 0), col(0, 0)), opts);
  o.detail << "L=(1,1): c1=" << a.c1 << " c2=" << a.c2 << "; L=(1.5,2): rate=" << b.rate
           << "; L=0: " << to_string(z.verdict) << " (tol 1e-12)";
  o.require(a.verdict == Verdict::Certified && std::abs(a.c1 - 1) <= 1e-12 && std::abs(a.c2 - 1) <= 1e-12,
            "L=(1,1)");
  o.require(b.verdict == Verdict::Certified && std::abs(b.rate - 2.5) <= 1e-12, "L=(1.5,2)");
  o.require(z.verdict == Verdict::Falsified, "L=0");
}

void c3(Outcome& o) {
  const auto cfg = builtin_example(1);
  auto opts = certify_options_from(cfg);
  opts.kind = MeasureKind::L1;
  opts.grid = opts.output_grid = 41;
  const auto c = certify_observer(with_gains(cfg, col(-2, 0), col(2, 0)), opts);
  o.detail << to_string(c.verdict) << ", rate " << fmt17(c.rate) << " (4 +- 1e-9), surface samples " << c.n_sigma;
  o.require(c.verdict == Verdict::Certified, "verdict");
  o.require(std::abs(c.rate - 4.0) <= 1e-9, "rate");
}

void c4(Outcome& o) {
  const auto cfg = builtin_example(1);
  auto ic = cfg.sim.integrator;
  ic.tf = 3.0;
  Vector x0(2), xh(2);
  x0 << 3, 3;
  xh << 0, 0;
  const auto pr = run_pair(with_gains(cfg, col(-2, 0), col(2, 0)), x0, xh, ic, MeasureKind::L1);
  const auto env = check_envelope(pr.trace, 1.0, 4.0, 0.05);
  o.detail << "|e(0)|_1 = " << pr.trace.e0 << ", " << env.samples.size() << " samples, violations "
           << env.violations.size() << ", fitted K " << env.fitted_K << " (K=1, c=4, slack 0.05)";
  o.require(std::abs(pr.trace.e0 - 6.0) <= 1e-12, "initial error");
  o.require(env.pass, "envelope");
}

void c5(Outcome& o) {
  const auto cfg = builtin_example(2);
  Vector xh = Vector::Zero(2);
  for (auto [g1, g2, c] : {std::tuple{1.0, 1.0, 1.0}, std::tuple{1.5, 2.0, 2.5}}) {
    const auto pr = run_pair(with_gains(cfg, col(g1, g2), col(g1, g2)), cfg.sim.x0, xh, cfg.sim.integrator,
                             MeasureKind::L1);
    const auto env = check_envelope(pr.trace, 1.0, c, 0.05);
    o.detail << "L=(" << g1 << "," << g2 << ") c=" << c << ": " << (env.pass ? "pass" : "fail") << " (fitted K "
             << env.fitted_K << "); ";
    o.require(env.pass, "envelope at c=" + std::to_string(c));
  }
  o.detail << "K=1, slack 0.05";
}

void c6(Outcome& o) {
  const auto cfg = builtin_example(3);
  const auto obs = observer_from(cfg);
  auto opts = certify_options_from(cfg);
  opts.kind = MeasureKind::Linf;
  const auto cert = certify_observer(obs, opts);
  auto ic = cfg.sim.integrator;
  ic.tf = 60.0;
  const auto pr = run_pair(obs, cfg.sim.x0, cfg.sim.xhat0, ic, MeasureKind::Linf);
  const auto env = check_envelope(pr.trace, 1.0, 0.1, 0.05);
  const auto entries = pr.plant.count(EventKind::SlidingEntry);
  o.detail << "certificate " << to_string(cert.verdict) << " rate " << fmt17(cert.rate) << " (0.1 +- 1e-9); envelope "
           << (env.pass ? "pass" : "fail") << " (fitted K " << env.fitted_K << "); plant events: "
           << pr.plant.count(EventKind::Crossing) << " crossings, " << entries << " sliding entries (need >= 1)";
  o.require(cert.verdict == Verdict::Certified && std::abs(cert.rate - 0.1) <= 1e-9, "certificate");
  o.require(env.pass, "envelope");
  o.require(entries >= 1, "sliding entry");
}

void c7(Outcome& o) {
  for (int which : {1, 3}) {
    const auto cfg = builtin_example(which);
    auto ic = cfg.sim.integrator;
    ic.tf = cfg.regstudy.tf;
    const auto st = order_study(*cfg.system, TransitionKind::Cubic, cfg.sim.x0, ic, {1e-2, 5e-3, 2.5e-3},
                                MeasureKind::Linf);
    o.detail << "example " << which << " slope " << st.slope << "; ";
    o.require(st.slope >= 0.8 && st.slope <= 1.2, "example " + std::to_string(which));
  }
  o.detail << "range [0.8, 1.2]";
}

void c8(Outcome& o) {
  const auto cfg = builtin_example(1);
  SynthesisProblem p;
  p.start = ObserverSpec(cfg.system, *cfg.L_plus, *cfg.L_minus);
  p.certify = certify_options_from(cfg);
  p.certify.kind = MeasureKind::L1;
  p.lo = cfg.synth.gain_lo;
  p.hi = cfg.synth.gain_hi;
  p.freeze = {"l2p", "l2m"};
  std::size_t runs = 0;
  double worst_drift = 0.0;
  for (std::size_t budget : {50, 100, 400})
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      p.budget = budget;
      p.seed = seed;
      const auto r = synthesize(p);
      ++runs;
      const double lp = r.L_plus(0, 0), lm = r.L_minus(0, 0);
      const auto again = certify_observer(ObserverSpec(cfg.system, r.L_plus, r.L_minus), p.certify);
      worst_drift = std::max(worst_drift, std::abs(again.rate - r.certificate.rate));
      const std::string tag = "seed " + std::to_string(seed) + " budget " + std::to_string(budget);
      o.require(r.feasible, tag + " infeasible");
      o.require(lp > -3 && lm < 3 && lp < lm, tag + " outside region");
      o.require(r.L_plus(1, 0) == 0.0 && r.L_minus(1, 0) == 0.0, tag + " frozen entries moved");
      o.require(std::abs(again.rate - r.certificate.rate) <= 1e-9, tag + " re-certification");
    }
  o.detail << runs << " runs (10 seeds x budgets 50, 100, 400), all in l1+ > -3, l1- < 3, l1+ < l1-; max rate drift "
           << worst_drift << " (tol 1e-9)";
}

void c9(Outcome& o) {
  // measure properties on the criterion-1 corpus
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ua(0.0, 3.0);
  const auto mats = corpus();
  std::size_t bad_props = 0;
  for (std::size_t k = 0; k < mats.size(); ++k) {
    const Matrix& a = mats[k];
    const Matrix& b = mats[(k + 1) % mats.size()].rows() == a.rows() ? mats[(k + 1) % mats.size()] : a;
    const double alpha = ua(rng);
    const Vector re = Eigen::EigenSolver<Matrix>(a).eigenvalues().real();
    for (auto kind : kKinds) {
      const double ma = measure(kind, a);
      if (measure(kind, Matrix(a + b)) > ma + measure(kind, b) + 1e-12) ++bad_props;
      if (std::abs(measure(kind, Matrix(alpha * a)) - alpha * ma) > 1e-12 * (1 + std::abs(ma))) ++bad_props;
      if (re.maxCoeff() > ma + 1e-10) ++bad_props;
    }
  }
  o.require(bad_props == 0, "measure properties");

  // sliding consistency on the oscillator: nominal, and unforced so that it sticks
  const auto cfg3 = builtin_example(3);
  const double tol_h = 10 * cfg3.sim.integrator.tol_event;
  std::size_t sliding_samples = 0;
  double worst_h = 0.0;
  for (double fd : {1.0, 0.0}) {
    const auto sys = cfg3.system->with_param("Fd", fd);
    const auto tr = integrate(sys, cfg3.sim.x0, cfg3.sim.integrator);
    for (const auto& s : tr.samples)
      if (s.mode == ModeLabel::Sliding) {
        ++sliding_samples;
        worst_h = std::max(worst_h, std::abs(sys.switching(s.x)));
      }
  }
  o.require(sliding_samples > 0 && worst_h <= tol_h, "sliding consistency");

  // zero-error fixed point
  double worst_zero = 0.0, noise_tol = 0.0;
  bool zero_ok = true;
  for (int which : {1, 2, 3}) {
    const auto cfg = builtin_example(which);
    auto ic = cfg.sim.integrator;
    ic.tf = std::min(ic.tf, 10.0);
    const auto r = run_pair(observer_from(cfg), cfg.sim.x0, cfg.sim.x0, ic, cfg.certify.kind);
    const double noise = 10 * (ic.abs_tol + ic.rel_tol * std::max(1.0, cfg.sim.x0.cwiseAbs().maxCoeff()));
    for (double e : r.trace.err) {
      worst_zero = std::max(worst_zero, e);
      zero_ok = zero_ok && e <= noise;
    }
    noise_tol = std::max(noise_tol, noise);
  }
  o.require(zero_ok, "zero-error fixed point");

  // symbolic vs finite-difference Jacobians
  std::mt19937_64 jr(11);
  std::uniform_real_distribution<double> u(-3, 3);
  double worst_jac = 0.0;
  for (int which : {1, 2, 3}) {
    const auto cfg = builtin_example(which);
    for (int k = 0; k < 100; ++k) {
      Vector x(2);
      x << u(jr), u(jr);
      const double t = u(jr);
      for (Mode m : {Mode::Plus, Mode::Minus}) {
        const Matrix a = cfg.system->jacobian(m, x, t);
        const Matrix b = cfg.system->jacobian_fd(m, x, t);
        worst_jac = std::max(worst_jac, (a - b).cwiseAbs().maxCoeff() / (1 + a.cwiseAbs().maxCoeff()));
      }
    }
  }
  o.require(worst_jac <= 1e-6, "Jacobian agreement");

  o.detail << "measure property violations " << bad_props << "; sliding |h| max " << worst_h << " over "
           << sliding_samples << " samples (tol " << tol_h << ", F_d = 1 and F_d = 0); zero-error max " << worst_zero
           << " (tol " << noise_tol << "); Jacobian rel diff " << worst_jac << " (tol 1e-6)";
}

void c10(Outcome& o) {
  const auto cfg = builtin_example(3);
  const auto rep = disturbance_study(observer_from(cfg), "Ff", 0.1, cfg.sim.x0, cfg.sim.xhat0, cfg.sim.integrator,
                                     MeasureKind::Linf, 0.1);
  o.detail << "tail sup at +0/+10/+20%: " << rep.levels[0].tail_sup << ", " << rep.levels[1].tail_sup << ", "
           << rep.levels[2].tail_sup << "; ratio " << rep.ratio << " (tol 3); below |e(0)| = " << rep.levels[1].e0;
  o.require(rep.finite, "finite");
  o.require(rep.below_initial, "bounded tail");
  o.require(rep.ratio_ok, "ratio");
  o.require(rep.zero_ok, "unperturbed within envelope");
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<void(Outcome&)> body;
};

}  // namespace

int main() {
  const std::vector<Criterion> all = {
      {1, "measure closed forms vs limit oracle", 5, c1},
      {2, "PWA exact certification", 1, c2},
      {3, "nonlinear certification, rate 4", 10, c3},
      {4, "nonlinear observer envelope", 5, c4},
      {5, "PWA observer envelopes", 5, c5},
      {6, "friction oscillator: certificate, envelope, sliding entry", 30, c6},
      {7, "regularization order", 60, c7},
      {8, "synthesis soundness", 60, c8},
      {9, "property suites", 30, c9},
      {10, "friction disturbance robustness", 30, c10},
  };
  int failed = 0;
  for (const auto& c : all) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.body(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.limit_s) {
      o.pass = false;
      o.detail << " [runtime over limit]";
    }
    if (!o.pass) ++failed;
    std::printf("%s %2d %s: %s (%.3f s, limit %.0f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.str().c_str(), secs, c.limit_s);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
  return failed == 0 ? 0 : 1;
}
