#include <catch_amalgamated.hpp>

#include <random>

#include "filcon/measures.hpp"

using namespace filcon;
using Catch::Approx;

namespace {

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index n) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = u(rng);
  return m;
}

constexpr MeasureKind kAllKinds[] = {MeasureKind::L1, MeasureKind::L2, MeasureKind::Linf};

}  // namespace

TEST_CASE("closed-form measures on worked matrices", "[measures]") {
  // observer error matrix of the PWA example with L = (1, 1)
  CHECK(measure(MeasureKind::L1, mat2(-2, -1, 1, -3)) == -1.0);
  CHECK(measure(MeasureKind::L1, Matrix::Zero(2, 2)) == 0.0);
  // friction oscillator observer Jacobian, l1 = 1.1, l2 = -1, wn = 1, Q = 10
  CHECK(measure(MeasureKind::Linf, mat2(-1.1, 1, 0, -0.1)) == Approx(-0.1).margin(1e-15));
  CHECK(measure(MeasureKind::L2, Matrix::Identity(3, 3)) == Approx(1.0).margin(1e-14));
}

TEST_CASE("l2 measure uses the symmetric part", "[measures]") {
  // (A + A^T)/2 = [[1, 0], [0, -1]] for A = [[1, 2], [-2, -1]]
  CHECK(measure(MeasureKind::L2, mat2(1, 2, -2, -1)) == Approx(1.0).margin(1e-14));
  CHECK(measure(MeasureKind::L2, mat2(-3, 0, 0, -5)) == Approx(-3.0).margin(1e-14));
}

TEST_CASE("measure rejects bad input", "[measures]") {
  CHECK_THROWS_AS(measure(MeasureKind::L1, Matrix::Zero(2, 3)), std::invalid_argument);
  CHECK_THROWS_AS(measure(MeasureKind::L1, Matrix(0, 0)), std::invalid_argument);
  Matrix bad = Matrix::Zero(2, 2);
  bad(0, 1) = NAN;
  CHECK_THROWS_AS(measure(MeasureKind::L2, bad), std::invalid_argument);
  CHECK_THROWS_AS(measure_limit_oracle(MeasureKind::L1, Matrix::Zero(2, 2), 0.0), std::domain_error);
  CHECK_THROWS_AS(measure_limit_oracle(MeasureKind::L1, Matrix::Zero(2, 2), -1e-3), std::domain_error);
  CHECK_THROWS_AS(parse_measure_kind("l3"), std::invalid_argument);
}

TEST_CASE("limit oracle examples", "[measures][oracle]") {
  CHECK(measure_limit_oracle(MeasureKind::L1, mat2(-2, -1, 1, -3), 1e-6) == Approx(-1.0).margin(1e-4));
  CHECK(measure_limit_oracle(MeasureKind::Linf, Matrix::Zero(3, 3), 0.37) == 0.0);
  CHECK(measure_limit_oracle(MeasureKind::L2, mat2(-3, 0, 0, -5), 1e-6) == Approx(-3.0).margin(1e-4));
}

TEST_CASE("vector norms", "[measures]") {
  CHECK(vec_norm(MeasureKind::L1, Vector::Constant(2, 3.0)) == 6.0);
  Vector v(2);
  v << -1, 0;
  CHECK(vec_norm(MeasureKind::Linf, v) == 1.0);
  v << 3, 4;
  CHECK(vec_norm(MeasureKind::L2, v) == Approx(5.0));
}

TEST_CASE("Jacobi eigenvalues match Eigen's symmetric solver", "[measures]") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 1 + trial % 6;
    Matrix a = random_matrix(rng, n);
    Matrix s = 0.5 * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> ref(s);
    const Vector mine = symmetric_eigenvalues(s);
    for (Eigen::Index i = 0; i < n; ++i) CHECK(mine[i] == Approx(ref.eigenvalues()[i]).margin(1e-12));
  }
}

TEST_CASE("measure properties on random matrices", "[measures][property]") {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> ua(0.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index n = 2 + trial % 4;
    const Matrix a = random_matrix(rng, n);
    const Matrix b = random_matrix(rng, n);
    const double alpha = ua(rng);
    Eigen::EigenSolver<Matrix> es(a);
    const auto re = es.eigenvalues().real();
    for (auto kind : kAllKinds) {
      const double ma = measure(kind, a);
      CHECK(measure(kind, Matrix(a + b)) <= ma + measure(kind, b) + 1e-12);
      CHECK(measure(kind, Matrix(alpha * a)) == Approx(alpha * ma).margin(1e-12));
      const double lower = -measure(kind, Matrix(-a));
      CHECK(re.maxCoeff() <= ma + 1e-10);
      CHECK(re.minCoeff() >= lower - 1e-10);
    }
    CHECK(measure(MeasureKind::L1, Matrix(a.transpose())) == measure(MeasureKind::Linf, a));
  }
}

TEST_CASE("limit oracle converges at first order", "[measures][oracle]") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    const Eigen::Index n = 2 + trial % 4;
    const Matrix a = random_matrix(rng, n);
    for (auto kind : kAllKinds) {
      const double exact = measure(kind, a);
      const double d3 = std::abs(exact - measure_limit_oracle(kind, a, 1e-3));
      const double d4 = std::abs(exact - measure_limit_oracle(kind, a, 1e-4));
      const double d5 = std::abs(exact - measure_limit_oracle(kind, a, 1e-5));
      const double c = std::max(d3 / 1e-3, d4 / 1e-4);
      // rounding floor of the difference quotient is about eps / h
      CHECK(d5 <= 1.5 * c * 1e-5 + 1e-9);
      CHECK(std::abs(exact - measure_limit_oracle(kind, a, 1e-6)) <= 1e-4);
    }
  }
}
