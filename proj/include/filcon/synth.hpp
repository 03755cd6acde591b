#pragma once

// Derivative-free search for observer gains maximizing the certified rate.
// Phase 1: seeded grid + Nelder-Mead on -rate plus a sliding-residual penalty.
// Phase 2: among gains that keep the best rate, move to the centre of the
// feasible segment along each free coordinate (largest margin to the boundary).

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "certify.hpp"
#include "systems.hpp"

namespace filcon {

struct GainEntry {
  std::string name;
  int mode;  // +1, -1, or 0 for shared
  Eigen::Index row, col;
};

/// Names free gain entries: l<i>p / l<i>m (or l<i> when shared) for a single
/// output, l<i>_<j>p style otherwise.
inline std::vector<GainEntry> gain_entries(std::size_t n, std::size_t p, bool shared) {
  std::vector<GainEntry> out;
  auto base = [&](std::size_t i, std::size_t j) {
    std::string s = "l" + std::to_string(i + 1);
    if (p > 1) s += "_" + std::to_string(j + 1);
    return s;
  };
  for (int mode : shared ? std::vector<int>{0} : std::vector<int>{+1, -1})
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < p; ++j)
        out.push_back({base(i, j) + (mode > 0 ? "p" : mode < 0 ? "m" : ""), mode, static_cast<Eigen::Index>(i),
                       static_cast<Eigen::Index>(j)});
  return out;
}

struct SynthesisProblem {
  ObserverSpec start;  // initial and frozen gain values
  CertifyOptions certify;
  double lo = -5.0, hi = 5.0;
  std::vector<std::string> freeze;
  bool shared = false;
  std::size_t budget = 400;
  std::uint64_t seed = 1;
  double penalty = 1e3;
};

struct SynthesisResult {
  Matrix L_plus, L_minus;
  Certificate certificate;
  bool feasible = false;
  std::size_t evaluations = 0;
  std::vector<std::string> free_names;
  std::vector<double> free_values;
};

namespace detail {

class GainSearch {
 public:
  explicit GainSearch(const SynthesisProblem& prob) : prob_(prob) {
    prob.start.validate();
    if (!(prob.lo <= prob.hi) || !std::isfinite(prob.lo) || !std::isfinite(prob.hi))
      throw std::invalid_argument("synth: gain box must be finite with lo <= hi");
    if (prob.budget < 50) throw std::invalid_argument("synth: budget must be at least 50");
    const auto& sys = *prob.start.base;
    const auto all = gain_entries(sys.dimension(), sys.output_dimension(), prob.shared);
    for (const auto& f : prob.freeze) {
      const bool known = std::any_of(all.begin(), all.end(), [&](const GainEntry& e) { return e.name == f; });
      if (!known) throw std::invalid_argument("synth: cannot freeze unknown gain '" + f + "'");
    }
    for (const auto& e : all)
      if (std::find(prob.freeze.begin(), prob.freeze.end(), e.name) == prob.freeze.end()) free_.push_back(e);
    base_plus_ = prob.start.L_plus;
    base_minus_ = prob.shared ? prob.start.L_plus : prob.start.L_minus;
    exact_ = sys.pwa().has_value();
    if (!exact_) region_ = prepare_region(sys, prob.certify, !prob.certify.output_range.empty());
  }

  const std::vector<GainEntry>& free() const { return free_; }
  std::size_t evaluations() const { return evals_; }
  bool exhausted() const { return evals_ >= prob_.budget; }

  std::pair<Matrix, Matrix> gains(const std::vector<double>& z) const {
    Matrix lp = base_plus_, lm = base_minus_;
    for (std::size_t k = 0; k < free_.size(); ++k) {
      const auto& e = free_[k];
      if (e.mode >= 0) lp(e.row, e.col) = z[k];
      if (e.mode <= 0) lm(e.row, e.col) = z[k];
    }
    return {lp, lm};
  }

  Certificate certify(const std::vector<double>& z) {
    ++evals_;
    const auto [lp, lm] = gains(z);
    if (exact_) return certify_pwa_exact(ObserverSpec(prob_.start.base, lp, lm), prob_.certify);
    return certify_sampled(region_, &lp, &lm);
  }

  double objective(const Certificate& c) const {
    if (c.verdict == Verdict::Inconclusive || !std::isfinite(c.rate)) return std::numeric_limits<double>::infinity();
    return -c.rate + prob_.penalty * std::max(0.0, c.sliding_residual - c.sliding_tol);
  }

 private:
  const SynthesisProblem& prob_;
  std::vector<GainEntry> free_;
  Matrix base_plus_, base_minus_;
  bool exact_ = false;
  SampledRegion region_;
  std::size_t evals_ = 0;
};

}  // namespace detail

inline SynthesisResult synthesize(const SynthesisProblem& prob) {
  detail::GainSearch search(prob);
  const std::size_t d = search.free().size();
  const std::size_t phase1 = prob.budget / 2;

  std::vector<double> best_z(d);
  for (std::size_t k = 0; k < d; ++k) {
    const auto& e = search.free()[k];
    best_z[k] = std::clamp(e.mode >= 0 ? prob.start.L_plus(e.row, e.col) : prob.start.L_minus(e.row, e.col), prob.lo,
                           prob.hi);
  }
  Certificate best_cert;
  double best_obj = std::numeric_limits<double>::infinity();
  bool best_feasible = false;

  auto consider = [&](const std::vector<double>& z) {
    Certificate c = search.certify(z);
    const double obj = search.objective(c);
    const bool feas = c.verdict == Verdict::Certified;
    // feasible points always beat infeasible ones
    if ((feas && !best_feasible) || (feas == best_feasible && obj < best_obj)) {
      best_obj = obj;
      best_z = z;
      best_cert = c;
      best_feasible = feas;
    }
    return obj;
  };

  if (d == 0) {
    consider(best_z);
  } else {
    // seed grid: 5 levels per coordinate, shuffled with the seed, capped so the
    // evaluation order does not depend on the budget
    constexpr std::size_t kLevels = 5;
    constexpr std::size_t kMaxSeeds = 125;
    std::size_t total = 1;
    for (std::size_t k = 0; k < d && total <= 1'000'000; ++k) total *= kLevels;
    std::vector<std::size_t> order(std::min<std::size_t>(total, 1'000'000));
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(prob.seed);
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(std::min({order.size(), kMaxSeeds, std::max<std::size_t>(prob.budget / 4, 1)}));
    for (std::size_t code : order) {
      if (search.evaluations() >= phase1) break;
      std::vector<double> z(d);
      std::size_t c = code;
      for (std::size_t k = 0; k < d; ++k) {
        const double frac = static_cast<double>(c % kLevels) / static_cast<double>(kLevels - 1);
        z[k] = prob.lo + (prob.hi - prob.lo) * frac;
        c /= kLevels;
      }
      consider(z);
    }

    // Nelder-Mead from the best seed, coordinates clamped to the box
    const double width = prob.hi - prob.lo;
    if (width > 0.0 && search.evaluations() < phase1) {
      auto clampv = [&](std::vector<double> z) {
        for (auto& v : z) v = std::clamp(v, prob.lo, prob.hi);
        return z;
      };
      std::vector<std::vector<double>> simplex{best_z};
      std::vector<double> fval{best_obj};
      for (std::size_t k = 0; k < d && search.evaluations() < phase1; ++k) {
        auto z = best_z;
        z[k] += (z[k] + 0.125 * width <= prob.hi) ? 0.125 * width : -0.125 * width;
        z = clampv(z);
        simplex.push_back(z);
        fval.push_back(consider(z));
      }
      while (simplex.size() == d + 1 && search.evaluations() < phase1) {
        std::vector<std::size_t> idx(d + 1);
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fval[a] < fval[b]; });
        std::vector<std::vector<double>> s2;
        std::vector<double> f2;
        for (auto i : idx) {
          s2.push_back(simplex[i]);
          f2.push_back(fval[i]);
        }
        simplex = std::move(s2);
        fval = std::move(f2);
        double spread = 0.0;
        for (std::size_t i = 1; i <= d; ++i)
          for (std::size_t k = 0; k < d; ++k) spread = std::max(spread, std::abs(simplex[i][k] - simplex[0][k]));
        if (spread < 1e-9 * std::max(1.0, width)) break;
        // flat simplex (typical on a rate plateau): leave the budget to centring
        if (std::isfinite(fval[d]) && fval[d] - fval[0] <= 1e-12 * (1.0 + std::abs(fval[0]))) break;

        std::vector<double> centroid(d, 0.0);
        for (std::size_t i = 0; i < d; ++i)
          for (std::size_t k = 0; k < d; ++k) centroid[k] += simplex[i][k] / static_cast<double>(d);
        auto along = [&](double coef) {
          std::vector<double> z(d);
          for (std::size_t k = 0; k < d; ++k) z[k] = centroid[k] + coef * (simplex[d][k] - centroid[k]);
          return clampv(z);
        };
        const auto zr = along(-1.0);
        const double fr = consider(zr);
        if (fr < fval[0]) {
          if (search.evaluations() >= phase1) {
            simplex[d] = zr;
            fval[d] = fr;
            break;
          }
          const auto ze = along(-2.0);
          const double fe = consider(ze);
          if (fe < fr) {
            simplex[d] = ze;
            fval[d] = fe;
          } else {
            simplex[d] = zr;
            fval[d] = fr;
          }
        } else if (fr < fval[d - 1]) {
          simplex[d] = zr;
          fval[d] = fr;
        } else {
          const bool outside = fr < fval[d];
          const auto zc = along(outside ? -0.5 : 0.5);
          const double fc = consider(zc);
          if (fc < (outside ? fr : fval[d])) {
            simplex[d] = zc;
            fval[d] = fc;
          } else {
            for (std::size_t i = 1; i <= d && search.evaluations() < phase1; ++i) {
              for (std::size_t k = 0; k < d; ++k) simplex[i][k] = simplex[0][k] + 0.5 * (simplex[i][k] - simplex[0][k]);
              fval[i] = consider(simplex[i]);
            }
          }
        }
      }
    }

    // centring: rate must stay >= the best certified rate
    if (best_feasible && width > 0.0) {
      const double target = best_cert.rate;
      auto keeps = [&](const std::vector<double>& z, Certificate* out) {
        Certificate c = search.certify(z);
        const bool ok = c.verdict == Verdict::Certified && c.rate >= target;
        if (ok && out) *out = c;
        return ok;
      };
      for (int sweep = 0; sweep < 5 && !search.exhausted(); ++sweep) {
        // coarse first sweep, refined later
        const double tol = std::max(1e-3, 0.05 / std::pow(4.0, sweep)) * width;
        for (std::size_t k = 0; k < d && !search.exhausted(); ++k) {
          // bisect each end of the feasible segment through best_z along axis k
          auto edge = [&](double bound) {
            auto z = best_z;
            z[k] = bound;
            if (keeps(z, nullptr)) return bound;
            double in = best_z[k], out = bound;
            for (int it = 0; it < 16 && std::abs(out - in) > tol && !search.exhausted(); ++it) {
              z[k] = 0.5 * (in + out);
              if (keeps(z, nullptr)) in = z[k];
              else out = z[k];
            }
            return in;
          };
          const double a = edge(prob.lo);
          if (search.exhausted()) break;
          const double b = edge(prob.hi);
          if (search.exhausted()) break;
          auto z = best_z;
          z[k] = 0.5 * (a + b);
          Certificate c;
          if (z[k] != best_z[k] && keeps(z, &c)) {
            best_z = z;
            best_cert = c;
          }
        }
      }
    }
  }

  SynthesisResult res;
  std::tie(res.L_plus, res.L_minus) = search.gains(best_z);
  res.certificate = best_cert;
  res.feasible = best_feasible;
  res.evaluations = search.evaluations();
  for (const auto& e : search.free()) res.free_names.push_back(e.name);
  res.free_values = best_z;
  return res;
}

}  // namespace filcon
