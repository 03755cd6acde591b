#pragma once

// Matrix measures (logarithmic norms) and the vector norms inducing them.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace filcon {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Selects the l1, Euclidean or uniform norm and its matrix measure.
enum class MeasureKind { L1, L2, Linf };

inline std::string_view to_string(MeasureKind kind) {
  switch (kind) {
    case MeasureKind::L1: return "l1";
    case MeasureKind::L2: return "l2";
    case MeasureKind::Linf: return "linf";
  }
  return "?";
}

inline MeasureKind parse_measure_kind(std::string_view name) {
  if (name == "l1" || name == "L1" || name == "1") return MeasureKind::L1;
  if (name == "l2" || name == "L2" || name == "2") return MeasureKind::L2;
  if (name == "linf" || name == "Linf" || name == "inf") return MeasureKind::Linf;
  throw std::invalid_argument("unknown measure kind '" + std::string(name) + "' (expected l1, l2 or linf)");
}

namespace detail {

inline void require_square_finite(const Matrix& a) {
  if (a.rows() == 0 || a.rows() != a.cols())
    throw std::invalid_argument("matrix measure: expected a non-empty square matrix, got " +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  if (!a.allFinite()) throw std::invalid_argument("matrix measure: non-finite entry");
}

}  // namespace detail

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, sorted ascending.
/// Only the upper triangle is read.
inline Vector symmetric_eigenvalues(const Matrix& sym) {
  const Eigen::Index n = sym.rows();
  Matrix a = sym.selfadjointView<Eigen::Upper>();
  const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-300);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) <= 1e-15 * scale) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
      }
    }
  }
  Vector eig = a.diagonal();
  std::sort(eig.data(), eig.data() + eig.size());
  return eig;
}

/// mu(A) for the chosen norm:
///   l1   max over columns of a_jj + sum_{i != j} |a_ij|
///   l2   largest eigenvalue of (A + A^T) / 2
///   linf max over rows of a_ii + sum_{j != i} |a_ij|
inline double measure(MeasureKind kind, const Matrix& a) {
  detail::require_square_finite(a);
  const Eigen::Index n = a.rows();
  switch (kind) {
    case MeasureKind::L1: {
      double best = -INFINITY;
      for (Eigen::Index j = 0; j < n; ++j) {
        double s = a(j, j);
        for (Eigen::Index i = 0; i < n; ++i)
          if (i != j) s += std::abs(a(i, j));
        best = std::max(best, s);
      }
      return best;
    }
    case MeasureKind::Linf: {
      double best = -INFINITY;
      for (Eigen::Index i = 0; i < n; ++i) {
        double s = a(i, i);
        for (Eigen::Index j = 0; j < n; ++j)
          if (j != i) s += std::abs(a(i, j));
        best = std::max(best, s);
      }
      return best;
    }
    case MeasureKind::L2: {
      const Matrix sym = 0.5 * (a + a.transpose());
      return symmetric_eigenvalues(sym).maxCoeff();
    }
  }
  throw std::logic_error("measure: bad kind");
}

/// Operator norm induced by the chosen vector norm.
inline double induced_norm(MeasureKind kind, const Matrix& m) {
  switch (kind) {
    case MeasureKind::L1: return m.cwiseAbs().colwise().sum().maxCoeff();
    case MeasureKind::Linf: return m.cwiseAbs().rowwise().sum().maxCoeff();
    case MeasureKind::L2: {
      const Matrix gram = m.transpose() * m;
      return std::sqrt(std::max(0.0, symmetric_eigenvalues(gram).maxCoeff()));
    }
  }
  throw std::logic_error("induced_norm: bad kind");
}

/// One-sided difference quotient (||I + hA|| - 1) / h. Converges to measure(kind, A)
/// as h -> 0+, at first order for l2 and exactly (up to rounding) for l1 / linf.
inline double measure_limit_oracle(MeasureKind kind, const Matrix& a, double h) {
  if (!(h > 0.0)) throw std::domain_error("measure_limit_oracle: h must be positive");
  detail::require_square_finite(a);
  const Matrix m = Matrix::Identity(a.rows(), a.cols()) + h * a;
  return (induced_norm(kind, m) - 1.0) / h;
}

inline double vec_norm(MeasureKind kind, const Vector& v) {
  if (!v.allFinite()) throw std::invalid_argument("vec_norm: non-finite entry");
  switch (kind) {
    case MeasureKind::L1: return v.lpNorm<1>();
    case MeasureKind::L2: return v.norm();
    case MeasureKind::Linf: return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
  }
  throw std::logic_error("vec_norm: bad kind");
}

}  // namespace filcon
