#include <catch_amalgamated.hpp>

#include "filcon/certify.hpp"
#include "filcon/config.hpp"

using namespace filcon;
using Catch::Approx;

namespace {

Matrix col(double a, double b) {
  Matrix m(2, 1);
  m << a, b;
  return m;
}

CertifyOptions opts_for(const ProblemConfig& cfg) { return certify_options_from(cfg); }

}  // namespace

TEST_CASE("PWA example certified exactly", "[certify][pwa]") {
  const auto ex2 = builtin_example(2);
  const auto o = opts_for(ex2);
  const auto c11 = certify_pwa_exact(ObserverSpec(ex2.system, col(1, 1), col(1, 1)), o);
  CHECK(c11.verdict == Verdict::Certified);
  CHECK(c11.c1 == 1.0);
  CHECK(c11.c2 == 1.0);
  CHECK(c11.rate == 1.0);
  CHECK(c11.sliding_residual == 0.0);

  const auto c25 = certify_pwa_exact(ObserverSpec(ex2.system, col(1.5, 2), col(1.5, 2)), o);
  CHECK(c25.verdict == Verdict::Certified);
  CHECK(std::abs(c25.rate - 2.5) <= 1e-12);

  const auto c0 = certify_pwa_exact(ObserverSpec(ex2.system, col(0, 0), col(0, 0)), o);
  CHECK(c0.verdict == Verdict::Falsified);
  CHECK(c0.c1 == -1.0);
}

TEST_CASE("exact and sampled certificates agree on PWA", "[certify][property]") {
  const auto ex2 = builtin_example(2);
  auto o = opts_for(ex2);
  o.grid = 21;
  for (auto [a, b] : {std::pair{1.0, 1.0}, {1.5, 2.0}, {0.0, 0.0}, {-2.0, 3.0}, {0.7, -0.4}}) {
    const ObserverSpec obs(ex2.system, col(a, b), col(a, b));
    const auto e = certify_pwa_exact(obs, o);
    const auto s = certify_observer(obs, o);
    CHECK(std::abs(e.rate - s.rate) <= 1e-12);
    CHECK(e.verdict == s.verdict);
  }
  // mode-dependent gains exercise the surface sampling path
  const ObserverSpec diff(ex2.system, col(1, 1), col(1.2, 0.9));
  const auto e = certify_pwa_exact(diff, o);
  const auto s = certify_observer(diff, o);
  CHECK(std::abs(e.rate - s.rate) <= 1e-12);
  CHECK(std::abs(e.sliding_residual - s.sliding_residual) <= 1e-12);
}

TEST_CASE("nonlinear example certified at rate 4", "[certify]") {
  const auto ex1 = builtin_example(1);
  const auto c = certify_observer(observer_from(ex1), opts_for(ex1));
  CHECK(c.verdict == Verdict::Certified);
  CHECK(std::abs(c.rate - 4.0) <= 1e-9);
  CHECK(std::abs(c.sliding_residual) <= 1e-12);
  CHECK(c.n_sigma > 0);
  CHECK(c.method == "sampled");
}

TEST_CASE("plant check without observer correction", "[certify]") {
  const auto ex1 = builtin_example(1);
  const auto c = certify_plant(*ex1.system, opts_for(ex1));
  // both modes contract at rate 4 without output injection
  CHECK(c.verdict == Verdict::Certified);
  CHECK(c.c1 == 4.0);
  CHECK(c.c2 == 4.0);
  const auto ex2 = builtin_example(2);
  const auto p = certify_plant(*ex2.system, opts_for(ex2));
  CHECK(p.verdict == Verdict::Falsified);
  CHECK(p.c1 == -1.0);
}

TEST_CASE("identical linear modes certify at rate 1", "[certify]") {
  SystemDefinition def;
  def.name = "lin";
  def.n = 2;
  def.f_plus = {"-x1", "-x2"};
  def.f_minus = def.f_plus;
  def.h = "x1 + x2";
  const auto s = std::make_shared<const BimodalSystem>(BimodalSystem::from_definition(def));
  CertifyOptions o;
  o.kind = MeasureKind::L2;
  o.region = {{-1, 1}, {-1, 1}};
  o.grid = 11;
  const auto c = certify_plant(*s, o);
  CHECK(c.verdict == Verdict::Certified);
  CHECK(c.rate == Approx(1.0));
  CHECK(c.sliding_residual == 0.0);
}

TEST_CASE("friction oscillator certified under the max-row measure", "[certify]") {
  const auto ex3 = builtin_example(3);
  const auto c = certify_observer(observer_from(ex3), opts_for(ex3));
  CHECK(c.verdict == Verdict::Certified);
  CHECK(std::abs(c.rate - 0.1) <= 1e-9);
  CHECK(c.sliding_residual == 0.0);
  CHECK(c.sliding_min == 0.0);
}

TEST_CASE("region sampling covers the surface", "[certify]") {
  const auto ex2 = builtin_example(2);
  const auto s = sample_region(*ex2.system, {{-1, 1}, {-0.95, 1.05}}, 5, kSigmaTol);
  // no grid point lies on x2 = 0, so every surface point comes from an edge root
  CHECK(s.sigma.size() == 5);
  for (const auto& x : s.sigma) CHECK(std::abs(x[1]) <= 1e-9);
  CHECK(s.plus.size() == 15 + 5);
  CHECK(s.minus.size() == 10 + 5);
}

TEST_CASE("denser grids never rescue a falsified verdict", "[certify][property]") {
  const auto ex1 = builtin_example(1);
  auto o = opts_for(ex1);
  for (auto [lp, lm] : {std::pair{-4.0, 2.0}, {-2.0, 4.0}, {2.0, -2.0}, {-2.0, 2.0}}) {
    const ObserverSpec obs(ex1.system, col(lp, 0), col(lm, 0));
    o.grid = 21;
    o.output_grid = 21;
    const auto coarse = certify_observer(obs, o);
    o.grid = 41;
    o.output_grid = 41;
    const auto fine = certify_observer(obs, o);
    if (coarse.verdict == Verdict::Falsified) CHECK(fine.verdict == Verdict::Falsified);
    CHECK(fine.rate <= coarse.rate + 1e-12);
  }
}

TEST_CASE("certification errors", "[certify]") {
  const auto ex1 = builtin_example(1);
  CertifyOptions o;
  o.region = {{-1, 1}};
  CHECK_THROWS_AS(certify_observer(observer_from(ex1), o), std::invalid_argument);
  CHECK_THROWS_AS(certify_pwa_exact(observer_from(ex1), opts_for(ex1)), std::invalid_argument);
  o.region = {{1, 2}, {-1, 1}};
  o.output_range = {{0, 25}};
  const auto c = certify_observer(observer_from(ex1), o);
  CHECK(c.verdict == Verdict::Inconclusive);
}
