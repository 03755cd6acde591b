#include <catch_amalgamated.hpp>

#include <numbers>
#include <random>

#include "filcon/expr.hpp"

using namespace filcon;
using Catch::Approx;

namespace {

double ev(const Expr& e, std::vector<double> x, double t = 0.0, std::vector<double> p = {}) {
  return eval(e, x, t, p);
}

}  // namespace

TEST_CASE("parse and evaluate polynomial field component", "[expr]") {
  const Expr e = parse("-9*x1 - 3*x1^2 - 18", 2);
  CHECK(ev(e, {1.0, 0.0}) == -30.0);
  CHECK(ev(e, {-2.0, 5.0}) == 18.0 - 12.0 - 18.0);
}

TEST_CASE("syntax errors carry byte offsets", "[expr]") {
  try {
    parse("x1 +", 2);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 4);
  }
  try {
    parse("x1 * (x2 + 1", 2);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 12);
  }
  CHECK_THROWS_AS(parse("", 1), ParseError);
  CHECK_THROWS_AS(parse("2x1", 1), ParseError);
  CHECK_THROWS_AS(parse("x1^0.5", 1), ParseError);
  CHECK_THROWS_AS(parse("x1^-1", 1), ParseError);
  CHECK_THROWS_AS(parse("x1 $ 2", 1), ParseError);
  CHECK_THROWS_AS(parse("+x1", 1), ParseError);
}

TEST_CASE("identifier resolution", "[expr]") {
  ParamTable p;
  p.set("wn", 2.0);
  CHECK(ev(parse("wn*x2", 2, p), {0.0, 3.0}, 0.0, p.values) == 6.0);
  CHECK_THROWS_AS(parse("x3", 2), ParseError);
  CHECK_THROWS_AS(parse("x0", 2), ParseError);
  CHECK_THROWS_AS(parse("omega*x1", 2, p), ParseError);
  CHECK_THROWS_AS(parse("tan(x1)", 2), ParseError);
  try {
    parse("x1 + foo", 1);
  } catch (const ParseError& e) {
    CHECK(e.offset() == 5);
  }
}

TEST_CASE("function arity is checked", "[expr]") {
  CHECK_THROWS_AS(parse("sin(x1, x2)", 2), ParseError);
  CHECK_THROWS_AS(parse("max(x1)", 2), ParseError);
  CHECK_THROWS_AS(parse("cos()", 2), ParseError);
  CHECK(ev(parse("max(x1, x2) - min(x1, x2)", 2), {1.0, 4.0}) == 3.0);
}

TEST_CASE("evaluation conventions and errors", "[expr]") {
  CHECK(ev(parse("sgn(x2)", 2), {1.0, 0.0}) == 0.0);
  CHECK(ev(parse("sgn(x2)", 2), {1.0, -0.5}) == -1.0);
  CHECK(ev(parse("sin(t)", 1), {0.0}, std::numbers::pi / 2) == Approx(1.0).margin(1e-15));
  CHECK(ev(parse("1e-3*x1 + .5", 1), {2.0}) == Approx(0.502));
  CHECK(ev(parse("-x1^2", 1), {3.0}) == -9.0);
  CHECK_THROWS_AS(ev(parse("1/(x1 - 1)", 1), {1.0}), EvalError);
  CHECK_THROWS_AS(ev(parse("sqrt(x1)", 1), {-1.0}), EvalError);
  try {
    ev(parse("x1 + 1/x1", 1), {0.0});
  } catch (const EvalError& e) {
    CHECK(e.offset() == 6);
  }
}

TEST_CASE("symbolic derivatives", "[expr][diff]") {
  CHECK(to_string(diff(parse("-9*x1 - 3*x1^2 - 18", 2), 0)) == "-9 - 6*x1");
  CHECK(to_string(diff(parse("x1^2", 2), 1)) == "0");
  CHECK(to_string(diff(parse("sin(x1)*x1", 1), 0)) == "cos(x1)*x1 + sin(x1)");
  CHECK(to_string(diff(parse("x1^2", 1), 0)) == "2*x1");
  // non-differentiable nodes are fine off the differentiated path
  CHECK(to_string(diff(parse("abs(x2) + 4*x1", 2), 0)) == "4");
  CHECK_THROWS_AS(diff(parse("abs(x1)", 1), 0), NotDifferentiable);
  CHECK_THROWS_AS(diff(parse("x2*sgn(x1)", 2), 0), NotDifferentiable);
  CHECK_THROWS_AS(diff(parse("max(x1, 0)", 1), 0), NotDifferentiable);
}

namespace {

const char* kCorpus[] = {
    "-9*x1 - 3*x1^2 - 18",
    "-9*x1 + 3*x1^2 + 18",
    "x1^3*x2 - x2/(1 + x1^2)",
    "sin(x1)*cos(x2) + exp(-x1*x2/4)",
    "sqrt(1 + x1^2 + x2^2) - log(2 + x2^2)",
    "-(x1 - x2)^2/(3 + cos(x1))",
    "a*x1 - b*x2^2*t + sin(a*t)",
    "x1*x2*x3 - 2*x3^4 + exp(x2)/5",
    "--x1 + -x2*-x3",
    "(x1 - (x2 - x3)) / (2 - (1 - 3))",
};

ParamTable corpus_params() {
  ParamTable p;
  p.set("a", 0.7);
  p.set("b", -1.3);
  return p;
}

}  // namespace

TEST_CASE("printing round-trips to structurally identical trees", "[expr][property]") {
  const ParamTable p = corpus_params();
  for (const char* src : kCorpus) {
    const Expr e = parse(src, 3, p);
    const std::string printed = to_string(e);
    const Expr again = parse(printed, 3, p);
    INFO(src << "  ->  " << printed);
    CHECK(structurally_equal(e, again));
    CHECK(to_string(again) == printed);
  }
}

TEST_CASE("derivatives agree with central differences", "[expr][property]") {
  const ParamTable p = corpus_params();
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (const char* src : kCorpus) {
    const Expr e = parse(src, 3, p);
    for (std::size_t var = 0; var < 3; ++var) {
      const Expr d = diff(e, var);
      // derivative trees print and re-parse too
      const Expr dr = parse(to_string(d), 3, p);
      for (int k = 0; k < 100; ++k) {
        std::vector<double> x{u(rng), u(rng), u(rng)};
        const double t = u(rng);
        const double h = 1e-5;
        auto xp = x;
        auto xm = x;
        xp[var] += h;
        xm[var] -= h;
        const double fd = (eval(e, xp, t, p.values) - eval(e, xm, t, p.values)) / (2 * h);
        const double sym = eval(d, x, t, p.values);
        INFO(src << " d/dx" << var + 1 << " = " << to_string(d));
        CHECK(std::abs(sym - fd) <= 1e-6 * (1 + std::abs(sym)));
        CHECK(eval(dr, x, t, p.values) == Approx(sym).epsilon(1e-12).margin(1e-12));
      }
    }
  }
}

TEST_CASE("parsing is total on random byte strings", "[expr][property]") {
  const std::string alphabet = "x12t+-*/^() .,e9sincoabqrtmxp_$";
  std::mt19937_64 rng(4242);
  std::uniform_int_distribution<std::size_t> len(0, 24);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  int parsed = 0;
  for (int trial = 0; trial < 5000; ++trial) {
    std::string s;
    const std::size_t n = len(rng);
    for (std::size_t i = 0; i < n; ++i) s += alphabet[pick(rng)];
    try {
      const Expr e = parse(s, 2);
      ++parsed;
      CHECK(structurally_equal(e, parse(to_string(e), 2)));
    } catch (const ParseError& e) {
      CHECK(e.offset() <= s.size());
    }
  }
  CHECK(parsed > 0);
}
