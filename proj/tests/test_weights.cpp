#include <doctest.h>

#include <cmath>

#include "parporo/geometry.hpp"
#include "parporo/porosity.hpp"
#include "parporo/report.hpp"
#include "parporo/weights.hpp"

using namespace parporo;

TEST_CASE("weight spec") {
  Geometry g = Geometry::create(1, Rational(2), 2);
  WeightSpec ws = make_weight_spec(g, Rational(1, 6));
  CHECK(ws.q == doctest::Approx(0.5));
  CHECK(ws.n == 1);
  CHECK_THROWS(make_weight_spec(g, Rational(0)));
  CHECK_THROWS(make_weight_spec(g, Rational(-1, 3)));
}

TEST_CASE("integral next to a hyperplane matches the closed form") {
  // x in [a, b], E = {x = 0}: ∫ x^{-q} dx dt = l_t (b^{1-q} - a^{1-q}) / (1-q)
  Geometry g = Geometry::create(1, Rational(2), 2);
  for (auto [beta, a, b] : std::vector<std::tuple<Rational, Rational, Rational>>{
           {Rational(1, 6), Rational(1, 4), Rational(3, 4)},
           {Rational(1, 4), Rational(0), Rational(1, 2)},
           {Rational(1, 10), Rational(1, 8), Rational(5, 8)}}) {
    WeightSpec ws = make_weight_spec(g, beta);
    ParabolicRectangle R = make_rectangle(g, {(a + b) / 2}, Rational(0), b - a, Rational(0));
    IntegralResult I = integrate_weight(fixture_hyperplane(1), R, ws, 1e-6);
    const double q = ws.q;
    const double exact =
        R.l_t().get_d() * (std::pow(b.get_d(), 1 - q) - std::pow(a.get_d(), 1 - q)) / (1 - q);
    CHECK(I.converged);
    CHECK(!I.divergent);
    CHECK(I.value.lo <= exact * (1 + 1e-12));
    CHECK(I.value.hi >= exact * (1 - 1e-12));
    CHECK(I.value.width() <= 2e-6 * exact);

    EssinfResult e = essinf_weight(fixture_hyperplane(1), R, ws, 1e-9);
    CHECK(e.value.lo <= std::pow(b.get_d(), -q) + 1e-9);
    CHECK(e.value.hi >= std::pow(b.get_d(), -q) - 1e-9);
  }
}

TEST_CASE("A1 anchor on the canonical root") {
  Geometry g = Geometry::create(1, Rational(2), 2);
  auto root = Root::create(g, canonical_root_spec(1), 1);
  A1Result r = a1_ratio(fixture_hyperplane(1), root_address(*root), Rational(2), make_weight_spec(g, Rational(1, 6)),
                        1e-7);
  CHECK(!r.unbounded);
  CHECK(r.converged);
  CHECK(std::fabs(r.average.mid() - std::sqrt(8.0)) < 1e-5);
  CHECK(std::fabs(r.essinf.mid() - std::sqrt(2.0)) < 1e-5);
  CHECK(std::fabs(r.ratio.mid() - 2.0) < 1e-5);
}

TEST_CASE("annular constant") {
  Interval c = annular_constant(1, 2.0, 1.0 / 6.0);
  CHECK(c.lo == doctest::Approx(3.0 / (1.0 - std::sqrt(0.5))).epsilon(1e-12));
  CHECK(c.hi == doctest::Approx(3.0 / (1.0 - std::sqrt(0.5))).epsilon(1e-12));
  CHECK(c.lo <= c.hi);
  CHECK_THROWS(annular_constant(1, 2.0, 1.0 / 3.0));
}

TEST_CASE("a1 scan is independent of thread count") {
  Geometry g = Geometry::create(1, Rational(2), 2);
  SamplerConfig sc = default_sampler(1);
  sc.samples = 4;
  sc.seed = 9;
  WeightSpec ws = make_weight_spec(g, Rational(1, 8));
  A1ScanReport a = a1_scan(fixture_hyperplane(1), g, sc, Rational(2), ws, 1e-3, 1);
  A1ScanReport b = a1_scan(fixture_hyperplane(1), g, sc, Rational(2), ws, 1e-3, 3);
  CHECK(render(to_json(a)) == render(to_json(b)));
  REQUIRE(a.samples.size() == 4);
  for (const auto& s : a.samples) {
    CHECK(s.result.ratio.lo >= 1 - 1e-9);  // average over R^θ versus an infimum
    CHECK(s.result.ratio.lo <= a.sup_ratio.hi);
  }
  CHECK(a.witness >= 0);
  CHECK(a.witness < 4);
}
