#pragma once

// Bimodal Filippov plants x' = f+-(x) + u(t), y = g(x), switching on h(x) = 0,
// and the Luenberger-like switched observers attached to them.

#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "expr.hpp"
#include "measures.hpp"

namespace filcon {

enum class Mode { Plus, Minus };

enum class Region { Plus, Minus, Sigma };

/// Membership tolerance for the switching manifold.
inline constexpr double kSigmaTol = 1e-9;

/// One mode's vector field with its Jacobian. A missing Jacobian entry means the
/// component was not symbolically differentiable; a central difference is used.
struct SmoothField {
  std::vector<Expr> components;
  std::vector<std::vector<std::optional<Expr>>> jacobian;

  static SmoothField from_components(std::vector<Expr> comps, std::size_t n) {
    SmoothField f;
    f.components = std::move(comps);
    f.jacobian.assign(f.components.size(), std::vector<std::optional<Expr>>(n));
    for (std::size_t i = 0; i < f.components.size(); ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        try {
          f.jacobian[i][j] = diff(f.components[i], j);
        } catch (const NotDifferentiable&) {
          f.jacobian[i][j] = std::nullopt;
        }
      }
    }
    return f;
  }

  bool fully_symbolic() const {
    for (const auto& row : jacobian)
      for (const auto& e : row)
        if (!e) return false;
    return true;
  }
};

struct SwitchingSurface {
  Expr h;
  std::vector<std::optional<Expr>> grad;
};

/// Raw matrices of a piecewise-affine plant
///   x' = A+- x + b+- + B u(t),  switching on h^T x + h0,  y = C x.
struct PwaData {
  Matrix A_plus, A_minus;
  Vector b_plus, b_minus;
  Matrix B;
  Vector h;
  double h0 = 0.0;
  Matrix C;
};

/// Text form of a plant, one expression string per component.
struct SystemDefinition {
  std::string name;
  std::size_t n = 0;
  ParamTable params;
  std::vector<std::string> f_plus, f_minus;
  std::string h;
  std::vector<std::string> g;  // empty: full-state output
  std::vector<std::string> u;  // empty: no input
};

namespace detail {

inline std::vector<double> to_std(std::span<const double> x) { return {x.begin(), x.end()}; }

inline double fd_partial(const Expr& e, const Vector& x, double t, std::span<const double> p, std::size_t j) {
  const double step = 1e-6 * std::max(1.0, std::abs(x[j]));
  Vector xp = x;
  Vector xm = x;
  xp[j] += step;
  xm[j] -= step;
  return (eval(e, std::span<const double>(xp.data(), xp.size()), t, p) -
          eval(e, std::span<const double>(xm.data(), xm.size()), t, p)) /
         (2.0 * step);
}

inline std::vector<Expr> parse_all(const std::vector<std::string>& src, std::size_t n, const ParamTable& params,
                                   const std::string& what) {
  std::vector<Expr> out;
  out.reserve(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    try {
      out.push_back(parse(src[i], n, params));
    } catch (const ParseError& e) {
      throw ParseError(what + "[" + std::to_string(i) + "] \"" + src[i] + "\": " + e.what(), e.offset());
    }
  }
  return out;
}

}  // namespace detail

class BimodalSystem {
 public:
  BimodalSystem() = default;

  static BimodalSystem from_definition(const SystemDefinition& def) {
    if (def.n == 0) throw std::invalid_argument("system: state dimension must be positive");
    if (def.f_plus.size() != def.n || def.f_minus.size() != def.n)
      throw std::invalid_argument("system: f_plus and f_minus need exactly n = " + std::to_string(def.n) +
                                  " components");
    if (!def.u.empty() && def.u.size() != def.n)
      throw std::invalid_argument("system: input u needs n = " + std::to_string(def.n) + " components");
    BimodalSystem s;
    s.name_ = def.name;
    s.n_ = def.n;
    s.params_ = def.params;
    s.f_plus_ = SmoothField::from_components(detail::parse_all(def.f_plus, def.n, def.params, "f_plus"), def.n);
    s.f_minus_ = SmoothField::from_components(detail::parse_all(def.f_minus, def.n, def.params, "f_minus"), def.n);
    Expr h = detail::parse_all({def.h}, def.n, def.params, "h").front();
    std::vector<Expr> g;
    if (def.g.empty()) {
      for (std::size_t i = 0; i < def.n; ++i) g.push_back(make_state(i));
    } else {
      g = detail::parse_all(def.g, def.n, def.params, "g");
    }
    std::vector<Expr> u;
    if (!def.u.empty()) u = detail::parse_all(def.u, def.n, def.params, "u");
    s.finish(std::move(h), std::move(g), std::move(u));
    return s;
  }

  /// Piecewise-affine plant built from raw matrices. `input` holds the scalar
  /// input channels u_k(t) multiplied by the columns of B.
  static BimodalSystem from_pwa(const PwaData& pwa, const std::vector<std::string>& input, ParamTable params = {},
                                std::string name = "pwa") {
    const auto n = static_cast<std::size_t>(pwa.A_plus.rows());
    if (n == 0 || pwa.A_plus.cols() != pwa.A_plus.rows() || pwa.A_minus.rows() != pwa.A_plus.rows() ||
        pwa.A_minus.cols() != pwa.A_plus.cols())
      throw std::invalid_argument("pwa: A_plus and A_minus must be equal-size square matrices");
    if (static_cast<std::size_t>(pwa.b_plus.size()) != n || static_cast<std::size_t>(pwa.b_minus.size()) != n ||
        static_cast<std::size_t>(pwa.h.size()) != n)
      throw std::invalid_argument("pwa: b_plus, b_minus and h must have length n");
    if (pwa.C.cols() != static_cast<Eigen::Index>(n) || pwa.C.rows() == 0)
      throw std::invalid_argument("pwa: C must be p x n");
    if (pwa.B.size() > 0 && (pwa.B.rows() != static_cast<Eigen::Index>(n) ||
                             pwa.B.cols() != static_cast<Eigen::Index>(input.size())))
      throw std::invalid_argument("pwa: B must be n x m with m input expressions");
    if (pwa.h.isZero(0.0)) throw std::invalid_argument("pwa: h must be nonzero");

    auto affine = [n](const Eigen::Ref<const Vector>& row, double offset) {
      Expr acc = make_number(0.0);
      bool first = true;
      for (std::size_t j = 0; j < n; ++j) {
        const double a = row[static_cast<Eigen::Index>(j)];
        if (a == 0.0) continue;
        Expr term = a == 1.0 ? make_state(j) : make_binary(Node::Kind::Mul, make_number(a), make_state(j));
        acc = first ? term : make_binary(Node::Kind::Add, acc, term);
        first = false;
      }
      if (offset != 0.0 || first) acc = first ? make_number(offset) : make_binary(Node::Kind::Add, acc, make_number(offset));
      return acc;
    };

    std::vector<Expr> fp, fm, g;
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      fp.push_back(affine(pwa.A_plus.row(r).transpose(), pwa.b_plus[r]));
      fm.push_back(affine(pwa.A_minus.row(r).transpose(), pwa.b_minus[r]));
    }
    for (Eigen::Index k = 0; k < pwa.C.rows(); ++k) g.push_back(affine(pwa.C.row(k).transpose(), 0.0));

    std::vector<Expr> u;
    if (!input.empty()) {
      const auto channels = detail::parse_all(input, n, params, "u");
      for (const auto& c : channels)
        if (depends_on_any_state(c)) throw std::invalid_argument("pwa: input must not depend on the state");
      for (std::size_t i = 0; i < n; ++i) {
        Expr acc = make_number(0.0);
        bool first = true;
        for (std::size_t k = 0; k < channels.size(); ++k) {
          const double b = pwa.B(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
          if (b == 0.0) continue;
          Expr term = b == 1.0 ? channels[k] : make_binary(Node::Kind::Mul, make_number(b), channels[k]);
          acc = first ? term : make_binary(Node::Kind::Add, acc, term);
          first = false;
        }
        u.push_back(acc);
      }
    }

    BimodalSystem s;
    s.name_ = std::move(name);
    s.n_ = n;
    s.params_ = std::move(params);
    s.f_plus_ = SmoothField::from_components(std::move(fp), n);
    s.f_minus_ = SmoothField::from_components(std::move(fm), n);
    s.finish(affine(pwa.h, pwa.h0), std::move(g), std::move(u));
    s.pwa_ = pwa;
    return s;
  }

  const std::string& name() const { return name_; }
  std::size_t dimension() const { return n_; }
  std::size_t output_dimension() const { return g_.size(); }
  const ParamTable& params() const { return params_; }
  const SmoothField& field(Mode m) const { return m == Mode::Plus ? f_plus_ : f_minus_; }
  const SwitchingSurface& surface() const { return surface_; }
  const std::vector<Expr>& output_map() const { return g_; }
  const std::vector<Expr>& input() const { return u_; }
  const std::optional<PwaData>& pwa() const { return pwa_; }

  /// Copy with the named parameters replaced; expressions are shared.
  BimodalSystem with_param(std::string_view name, double value) const {
    BimodalSystem s = *this;
    auto i = s.params_.index_of(name);
    if (!i) throw std::invalid_argument("unknown parameter '" + std::string(name) + "'");
    s.params_.values[*i] = value;
    return s;
  }

  /// f+-(x) without the input.
  Vector mode_field(Mode m, const Vector& x, double t) const {
    check_dim(x);
    const auto& f = field(m);
    Vector out(static_cast<Eigen::Index>(n_));
    for (std::size_t i = 0; i < n_; ++i) out[static_cast<Eigen::Index>(i)] = eval(f.components[i], sp(x), t, pv());
    return out;
  }

  Vector input_at(double t) const {
    Vector out = Vector::Zero(static_cast<Eigen::Index>(n_));
    for (std::size_t i = 0; i < u_.size(); ++i) out[static_cast<Eigen::Index>(i)] = eval(u_[i], {}, t, pv());
    return out;
  }

  /// f+-(x) + u(t).
  Vector eval_field(Mode m, const Vector& x, double t) const { return mode_field(m, x, t) + input_at(t); }

  Matrix jacobian(Mode m, const Vector& x, double t) const {
    check_dim(x);
    const auto& f = field(m);
    const auto n = static_cast<Eigen::Index>(n_);
    Matrix J(n, n);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j)
        J(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            f.jacobian[i][j] ? eval(*f.jacobian[i][j], sp(x), t, pv())
                             : detail::fd_partial(f.components[i], x, t, pv(), j);
    return J;
  }

  /// Central-difference Jacobian, used to cross-check the symbolic one.
  Matrix jacobian_fd(Mode m, const Vector& x, double t) const {
    const auto& f = field(m);
    const auto n = static_cast<Eigen::Index>(n_);
    Matrix J(n, n);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j)
        J(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            detail::fd_partial(f.components[i], x, t, pv(), j);
    return J;
  }

  double switching(const Vector& x) const {
    check_dim(x);
    return eval(surface_.h, sp(x), 0.0, pv());
  }

  Vector switching_gradient(const Vector& x) const {
    check_dim(x);
    Vector out(static_cast<Eigen::Index>(n_));
    for (std::size_t j = 0; j < n_; ++j)
      out[static_cast<Eigen::Index>(j)] = surface_.grad[j] ? eval(*surface_.grad[j], sp(x), 0.0, pv())
                                                           : detail::fd_partial(surface_.h, x, 0.0, pv(), j);
    return out;
  }

  Region region(const Vector& x, double tol_h = kSigmaTol) const {
    const double hv = switching(x);
    if (std::abs(hv) <= tol_h) return Region::Sigma;
    return hv > 0.0 ? Region::Plus : Region::Minus;
  }

  Vector output(const Vector& x) const {
    check_dim(x);
    Vector y(static_cast<Eigen::Index>(g_.size()));
    for (std::size_t k = 0; k < g_.size(); ++k) y[static_cast<Eigen::Index>(k)] = eval(g_[k], sp(x), 0.0, pv());
    return y;
  }

  Matrix output_jacobian(const Vector& x) const {
    check_dim(x);
    Matrix D(static_cast<Eigen::Index>(g_.size()), static_cast<Eigen::Index>(n_));
    for (std::size_t k = 0; k < g_.size(); ++k)
      for (std::size_t j = 0; j < n_; ++j)
        D(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) =
            dg_[k][j] ? eval(*dg_[k][j], sp(x), 0.0, pv()) : detail::fd_partial(g_[k], x, 0.0, pv(), j);
    return D;
  }

  void check_dim(const Vector& x) const {
    if (static_cast<std::size_t>(x.size()) != n_)
      throw std::invalid_argument("state has dimension " + std::to_string(x.size()) + ", expected " +
                                  std::to_string(n_));
  }

 private:
  static std::span<const double> sp(const Vector& x) { return {x.data(), static_cast<std::size_t>(x.size())}; }
  std::span<const double> pv() const { return params_.values; }

  void finish(Expr h, std::vector<Expr> g, std::vector<Expr> u) {
    if (depends_on_time(h)) throw std::invalid_argument("system: h must not depend on t");
    for (const auto& gk : g)
      if (depends_on_time(gk)) throw std::invalid_argument("system: output map must not depend on t");
    for (const auto& ui : u)
      if (depends_on_any_state(ui)) throw std::invalid_argument("system: input u must depend on t only");
    if (g.empty()) throw std::invalid_argument("system: output map must have at least one component");
    surface_.h = h;
    surface_.grad.assign(n_, std::nullopt);
    for (std::size_t j = 0; j < n_; ++j) {
      try {
        surface_.grad[j] = diff(h, j);
      } catch (const NotDifferentiable&) {
      }
    }
    dg_.assign(g.size(), std::vector<std::optional<Expr>>(n_));
    for (std::size_t k = 0; k < g.size(); ++k) {
      for (std::size_t j = 0; j < n_; ++j) {
        try {
          dg_[k][j] = diff(g[k], j);
        } catch (const NotDifferentiable&) {
        }
      }
    }
    g_ = std::move(g);
    u_ = std::move(u);
  }

  std::string name_;
  std::size_t n_ = 0;
  ParamTable params_;
  SmoothField f_plus_, f_minus_;
  SwitchingSurface surface_;
  std::vector<Expr> g_;
  std::vector<std::vector<std::optional<Expr>>> dg_;
  std::vector<Expr> u_;
  std::optional<PwaData> pwa_;
};

/// Observer x^' = f+-(x^) + L+-(y - g(x^)) + u(t), switching on h(x^).
struct ObserverSpec {
  std::shared_ptr<const BimodalSystem> base;
  Matrix L_plus, L_minus;

  ObserverSpec() = default;
  ObserverSpec(std::shared_ptr<const BimodalSystem> sys, Matrix lp, Matrix lm)
      : base(std::move(sys)), L_plus(std::move(lp)), L_minus(std::move(lm)) {
    validate();
  }

  const Matrix& gain(Mode m) const { return m == Mode::Plus ? L_plus : L_minus; }

  void validate() const {
    if (!base) throw std::invalid_argument("observer: no base system");
    const auto n = static_cast<Eigen::Index>(base->dimension());
    const auto p = static_cast<Eigen::Index>(base->output_dimension());
    for (const Matrix* L : {&L_plus, &L_minus})
      if (L->rows() != n || L->cols() != p)
        throw std::invalid_argument("observer: gain must be " + std::to_string(n) + "x" + std::to_string(p) +
                                    ", got " + std::to_string(L->rows()) + "x" + std::to_string(L->cols()));
  }

  Vector observer_field(Mode m, const Vector& xhat, const Vector& y, double t) const {
    if (y.size() != static_cast<Eigen::Index>(base->output_dimension()))
      throw std::invalid_argument("observer: output has dimension " + std::to_string(y.size()) + ", expected " +
                                  std::to_string(base->output_dimension()));
    return base->eval_field(m, xhat, t) + gain(m) * (y - base->output(xhat));
  }

  /// df+-/dx(x^) - L+- dg/dx(x^), the matrix bounded by conditions on each mode.
  Matrix error_jacobian(Mode m, const Vector& xhat, double t) const {
    return base->jacobian(m, xhat, t) - gain(m) * base->output_jacobian(xhat);
  }
};

}  // namespace filcon
