#include <doctest.h>

#include <cmath>

#include "parporo/improvement.hpp"
#include "parporo/report.hpp"

using namespace parporo;

namespace {

std::vector<Rational> quarter_powers(int count) {
  std::vector<Rational> out;
  for (int i = 1; i <= count; ++i) out.push_back(make_rational(BigInt(1), pow2_big(static_cast<unsigned>(2 * i))));
  return out;
}

}  // namespace

TEST_CASE("tower partition next to a hyperplane") {
  Geometry g = Geometry::create(1, Rational(2), 2);
  for (int cap : {2, 3}) {
    CAPTURE(cap);
    auto root = Root::create(g, canonical_root_spec(1), cap);
    TowerPartition t = tower_partition(fixture_hyperplane(1), root_address(*root), quarter_powers(6), Rational(2), cap);
    CHECK(t.union_ok);
    CHECK(t.disjoint_ok);
    CHECK(t.bound_ok);
    CHECK(t.cap_hit);
    REQUIRE(t.C.size() == 6);
    // the free half-width shrinks by 4 per level, so the residual is (1/4)^cap
    CHECK(t.residual == pow_int(Rational(1, 4), static_cast<unsigned>(cap)));
    CHECK(t.layer_measure[0] == Rational(3, 4));
    Rational sum = 0;
    for (const auto& m : t.layer_measure) sum += m;
    CHECK(sum + t.residual == 1);
    for (std::size_t i = 1; i < t.coverage.size(); ++i) CHECK(t.coverage[i] >= t.coverage[i - 1]);
    std::vector<DyadicAddress> all;
    for (const auto& layer : t.C) all.insert(all.end(), layer.begin(), layer.end());
    CHECK(pairwise_disjoint(all));
  }
}

TEST_CASE("tower partition rejects bad δ sequences") {
  Geometry g = Geometry::create(1, Rational(2), 2);
  auto root = Root::create(g, canonical_root_spec(1), 2);
  const DyadicAddress R = root_address(*root);
  CHECK_THROWS(tower_partition(fixture_point(1), R, {Rational(1, 4), Rational(1, 2)}, Rational(2), 2));
  CHECK_THROWS(tower_partition(fixture_point(1), R, {Rational(1, 4), Rational(1, 4)}, Rational(2), 2));
  CHECK_THROWS(tower_partition(fixture_point(1), R, {Rational(1)}, Rational(2), 2));
  CHECK_THROWS(tower_partition(fixture_point(1), R, {Rational(0)}, Rational(2), 2));
}

TEST_CASE("alpha fit on exact power laws") {
  AlphaFit f = alpha_fit({{1.0 / 16, 0.5}, {1.0 / 64, 0.25}, {1.0 / 256, 0.125}});
  CHECK(f.alpha_hat == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(f.K_hat == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(f.eta_hat == doctest::Approx(0.25));
  CHECK(f.r_squared == doctest::Approx(1.0));
  CHECK(f.improving);
  CHECK(f.floored == 0);

  AlphaFit flat = alpha_fit({{0.5, 0.3}, {0.25, 0.3}, {0.125, 0.3}, {0.0625, 0.3}});
  CHECK(std::fabs(flat.alpha_hat) < 1e-12);
  CHECK(flat.r_squared == 1);
  CHECK(!flat.improving);

  std::vector<std::pair<double, double>> pts;
  const double K = 0.7, alpha = 0.37;
  for (int i = 1; i <= 20; ++i) {
    const double d = std::pow(2.0, -i);
    pts.push_back({d, K * std::pow(d, alpha) * (1 + 1e-4 * ((i % 3) - 1))});
  }
  AlphaFit r = alpha_fit(pts);
  CHECK(std::fabs(r.alpha_hat - alpha) < 1e-3);
  CHECK(std::fabs(r.K_hat - K) < 1e-2);
  CHECK(r.eta_hat == doctest::Approx(0.5));

  AlphaFit zero = alpha_fit({{0.5, 0.5}, {0.25, 0.25}, {0.125, 0.0}});
  CHECK(zero.floored == 1);
}

TEST_CASE("alpha fit input validation") {
  CHECK_THROWS(alpha_fit({{0.5, 0.5}, {0.25, 0.25}}));
  CHECK_THROWS(alpha_fit({{0.5, 0.5}, {0.5, 0.25}, {0.5, 0.1}}));
  CHECK_THROWS(alpha_fit({{0.5, 0.5}, {0.25, 1.5}, {0.125, 0.1}}));
  CHECK_THROWS(alpha_fit({{1.5, 0.5}, {0.25, 0.25}, {0.125, 0.1}}));
}

TEST_CASE("dyadic delta grid") {
  auto d = dyadic_delta_grid(5);
  REQUIRE(d.size() == 5);
  CHECK(d[0] == Rational(1, 2));
  CHECK(d[4] == Rational(1, 32));
}

TEST_CASE("harness on the hyperplane") {
  Geometry g = Geometry::create(1, Rational(2), 2);
  HarnessConfig cfg;
  cfg.threads = 1;
  HarnessReport a = characterization_harness(fixture_hyperplane(1), g, cfg);
  CHECK(a.verdict == "consistent");
  CHECK(a.starved_stage.empty());
  CHECK(a.Phi == 15);
  CHECK(a.fit.alpha_hat > 0.3);
  CHECK(a.fit.alpha_hat < 0.4);
  CHECK(a.fit.r_squared >= 0.9);
  CHECK(a.fit_points.size() >= 3);
  REQUIRE(a.a1);
  CHECK(std::isfinite(a.a1->sup_ratio.hi));
  CHECK(a.cross.agree);
  CHECK(a.beta_used > 0);
  CHECK(a.beta_used <= Rational(3, 10));

  cfg.threads = 4;
  cfg.seed = 7;
  HarnessReport b = characterization_harness(fixture_hyperplane(1), g, cfg);
  CHECK(b.fit.alpha_hat == a.fit.alpha_hat);
  cfg.seed = 1;
  HarnessReport c = characterization_harness(fixture_hyperplane(1), g, cfg);
  CHECK(render(to_json(c)) == render(to_json(a)));
}

TEST_CASE("harness reports starvation on a half-space") {
  Geometry g = Geometry::create(1, Rational(2), 2);
  HarnessConfig cfg;
  cfg.samples = 4;
  HarnessReport h = characterization_harness(fixture_halfspace(1), g, cfg);
  CHECK(h.verdict == "inconclusive");
  CHECK(h.starved_stage == "porosity");
}
