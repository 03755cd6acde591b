#include <catch_amalgamated.hpp>

#include <random>

#include "filcon/config.hpp"
#include "filcon/systems.hpp"

using namespace filcon;
using Catch::Approx;

namespace {

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

Vector v1(double a) { return Vector::Constant(1, a); }

}  // namespace

TEST_CASE("field evaluation on the bundled examples", "[systems]") {
  const auto ex1 = builtin_example(1);
  const Vector f1 = ex1.system->eval_field(Mode::Plus, v2(1, 0), 0.0);
  CHECK(f1[0] == -30.0);
  CHECK(f1[1] == 0.0);

  const auto ex2 = builtin_example(2);
  const Vector f2 = ex2.system->eval_field(Mode::Minus, v2(0, 0), 0.0);
  CHECK(f2[0] == 2.0);
  CHECK(f2[1] == Approx(4.0).margin(1e-15));

  const auto ex3 = builtin_example(3);
  const Vector f3 = ex3.system->eval_field(Mode::Plus, v2(0, 1), 0.0);
  CHECK(f3[0] == 1.0);
  CHECK(f3[1] == Approx(-0.2).margin(1e-15));
}

TEST_CASE("region classification and outputs", "[systems]") {
  const auto ex1 = builtin_example(1);
  const auto& s = *ex1.system;
  CHECK(s.region(v2(0.5, 2)) == Region::Plus);
  CHECK(s.region(v2(-0.5, 2)) == Region::Minus);
  CHECK(s.region(v2(1e-12, 2)) == Region::Sigma);
  CHECK(s.output(v2(-3, 1))[0] == 9.0);
  CHECK(s.output_dimension() == 1);
  const Matrix dg = s.output_jacobian(v2(0, 5));
  CHECK(dg(0, 0) == 0.0);
  CHECK(dg(0, 1) == 0.0);
}

TEST_CASE("observer fields", "[systems][observer]") {
  const auto ex1 = builtin_example(1);
  const ObserverSpec o1 = observer_from(ex1);
  const Vector a = o1.observer_field(Mode::Plus, v2(1, 1), v1(4), 0.0);
  CHECK(a[0] == -36.0);
  CHECK(a[1] == -4.0);

  const auto ex2 = builtin_example(2);
  const ObserverSpec o2 = observer_from(ex2);
  const Vector b = o2.observer_field(Mode::Plus, v2(0, 0), v1(0.6), 0.0);
  CHECK(b[0] == Approx(-0.4).margin(1e-15));
  CHECK(b[1] == Approx(-2.4).margin(1e-15));

  CHECK_THROWS_AS(o1.observer_field(Mode::Plus, v2(1, 1), v2(1, 1), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(ObserverSpec(ex1.system, Matrix::Zero(2, 2), Matrix::Zero(2, 1)), std::invalid_argument);
}

TEST_CASE("Jacobians", "[systems]") {
  const auto ex1 = builtin_example(1);
  const Matrix J = ex1.system->jacobian(Mode::Plus, v2(1, 0), 0.0);
  CHECK(J(0, 0) == -15.0);
  CHECK(J(0, 1) == 0.0);
  CHECK(J(1, 0) == 0.0);
  CHECK(J(1, 1) == -4.0);

  const auto ex2 = builtin_example(2);
  const Matrix E = observer_from(ex2).error_jacobian(Mode::Plus, v2(3, -1), 0.7);
  CHECK(E(0, 0) == -2.0);
  CHECK(E(0, 1) == -1.0);
  CHECK(E(1, 0) == 1.0);
  CHECK(E(1, 1) == -3.0);
}

TEST_CASE("PWA construction", "[systems][pwa]") {
  const auto ex2 = builtin_example(2);
  const auto& s = *ex2.system;
  REQUIRE(s.pwa().has_value());
  const Matrix J = s.jacobian(Mode::Minus, v2(-2, 4), 1.3);
  CHECK(J.isApprox(s.pwa()->A_minus));
  // affine in x: F(x + d) - F(x) = A d
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int k = 0; k < 50; ++k) {
    const Vector x = v2(u(rng), u(rng));
    const Vector d = v2(u(rng), u(rng));
    const double t = u(rng);
    for (Mode m : {Mode::Plus, Mode::Minus}) {
      const Matrix& A = m == Mode::Plus ? s.pwa()->A_plus : s.pwa()->A_minus;
      const Vector lhs = s.eval_field(m, Vector(x + d), t) - s.eval_field(m, x, t);
      CHECK((lhs - A * d).norm() <= 1e-12);
    }
  }
  CHECK(s.input_at(0.25)[1] == Approx(4.0));
}

TEST_CASE("symbolic Jacobians agree with finite differences", "[systems][property]") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int which : {1, 2, 3}) {
    const auto cfg = builtin_example(which);
    const auto& s = *cfg.system;
    for (int k = 0; k < 100; ++k) {
      const Vector x = v2(u(rng), u(rng));
      const double t = u(rng);
      for (Mode m : {Mode::Plus, Mode::Minus}) {
        const Matrix a = s.jacobian(m, x, t);
        const Matrix b = s.jacobian_fd(m, x, t);
        CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-6 * (1 + a.cwiseAbs().maxCoeff()));
      }
    }
  }
}

TEST_CASE("definition validation", "[systems]") {
  SystemDefinition def;
  def.name = "bad";
  def.n = 1;
  def.f_plus = {"-x1"};
  def.f_minus = {"x1"};
  def.h = "x1 - t";
  CHECK_THROWS(BimodalSystem::from_definition(def));
  def.h = "x1";
  def.u = {"x1"};
  CHECK_THROWS(BimodalSystem::from_definition(def));
  def.u = {"sin(t)"};
  def.f_plus = {"-x1", "0"};
  CHECK_THROWS(BimodalSystem::from_definition(def));
  def.f_plus = {"-x1"};
  CHECK_NOTHROW(BimodalSystem::from_definition(def));
}

TEST_CASE("parameter override keeps the original intact", "[systems]") {
  const auto ex3 = builtin_example(3);
  const BimodalSystem heavy = ex3.system->with_param("Ff", 0.3);
  const Vector a = ex3.system->eval_field(Mode::Plus, v2(0, 0), 0.0);
  const Vector b = heavy.eval_field(Mode::Plus, v2(0, 0), 0.0);
  CHECK(a[1] == Approx(-0.1));
  CHECK(b[1] == Approx(-0.3));
  CHECK_THROWS(ex3.system->with_param("nope", 1.0));
}

TEST_CASE("config loader errors name the source", "[config]") {
  CHECK_THROWS_WITH(load_config_text("{ \"dimension\": 1, ", "bad.json"), Catch::Matchers::ContainsSubstring("bad.json"));
  const std::string unknown = "{\n \"dimension\": 1,\n \"f_plus\": [\"-x1\"],\n \"f_minus\": [\"x1\"],\n"
                              " \"h\": \"x1\",\n \"colour\": 3\n}";
  CHECK_THROWS_WITH(load_config_text(unknown, "u.json"), Catch::Matchers::ContainsSubstring("u.json:6"));
  const std::string badexpr = "{\n \"dimension\": 1,\n \"f_plus\": [\"-x1 +\"],\n \"f_minus\": [\"x1\"],\n"
                              " \"h\": \"x1\"\n}";
  CHECK_THROWS_AS(load_config_text(badexpr, "e.json"), ConfigError);
  CHECK_THROWS_AS(load_config_file("/nonexistent/x.json"), ConfigError);
  CHECK_THROWS_AS(builtin_example(4), ConfigError);
}
