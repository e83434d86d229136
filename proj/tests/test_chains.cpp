#include <doctest.h>

#include <cmath>

#include "parporo/chains.hpp"
#include "parporo/geometry.hpp"
#include "parporo/porosity.hpp"
#include "parporo/report.hpp"

using namespace parporo;

namespace {

ClosedSetModel time_band(const Rational& lo, const Rational& hi) {
  BoxUnion bu;
  bu.boxes.push_back({{Rational(-10)}, {Rational(10)}, lo, hi});
  return ClosedSetModel::make(1, bu);
}

struct Built {
  std::shared_ptr<const Root> root;
  CollectionReport F, G;
  StoppingPartition part;
};

Built build(const ClosedSetModel& E, const Geometry& g, const RootSpec& spec, int cap, const Rational& delta) {
  const StoppingParams params = default_parameters(g);
  Built b;
  b.root = Root::create(g, spec, cap);
  const DyadicAddress R = root_address(*b.root);
  FreenessViews views(E, *b.root);
  HoleResult M = translated_hole(views, R, Rational(params.Phi), cap);
  REQUIRE(M.address);
  b.F = admissible_collection(views, R, delta, Rational(params.Phi), cap);
  b.G = complementary_of(b.F, R, cap);
  b.part = stopping_partition(E, *b.root, b.G.rectangles, delta * M.measure, params, cap, make_theta_grid(params), 1);
  return b;
}

}  // namespace

TEST_CASE("epsilon bound and chain plans") {
  Interval eps = eps_max_value(Rational(1, 2), 1);
  CHECK(eps.lo == doctest::Approx(1 - std::sqrt(3.0) / 2).epsilon(1e-9));
  CHECK(eps.lo <= eps.hi);
  // shrinks with dimension
  CHECK(eps_max_value(Rational(1, 2), 2).hi < eps.lo);

  Geometry g = Geometry::create(1, Rational(2), 2);
  ChainInput in;
  ChainPlan plan = doubling_chain(g, canonical_root_spec(1), {0}, 0, in);
  CHECK(plan.ok());
  CHECK(plan.failure.empty());
  CHECK(plan.N2 <= plan.N1);
  CHECK(plan.N1 <= plan.N3);
  CHECK(plan.min_overlap > 1 - in.c0 / 2);
  BigInt covered = 0;
  for (const auto& run : plan.corrections) covered += run.count;
  CHECK(covered == plan.N1);
  auto j = to_json(plan);
  CHECK(j["ok"] == true);

  ChainInput bad = in;
  bad.theta1 = bad.theta2 = bad.psi = Rational(1, 100);
  CHECK_THROWS(doubling_chain(g, canonical_root_spec(1), {0}, 0, bad));
}

TEST_CASE("chain gap check on several roots") {
  for (const char* ps : {"2", "3/2"}) {
    Geometry g = Geometry::create(1, parse_rational(ps), 3);
    for (const char* gs : {"0", "1/3"}) {
      RootSpec spec = canonical_root_spec(1);
      spec.gamma0 = parse_rational(gs);
      auto root = Root::create(g, spec, 3);
      ChainGapReport r = chain_gap_check(*root, 4);
      CHECK(r.checked > 0);
      CHECK(r.violations == 0);
      CHECK(r.worst_ratio < 1);
    }
  }
}

TEST_CASE("theta grid") {
  StoppingParams s{4, 2, 15};
  ThetaGrid a = make_theta_grid(s);
  REQUIRE(a.values.size() == 14);
  CHECK(a.values.front() == -2);
  CHECK(a.values.back() == 11);
  ThetaGrid b = make_theta_grid(s, true);
  CHECK(b.values.size() == 27);
  CHECK(std::is_sorted(b.values.begin(), b.values.end()));
}

TEST_CASE("forward parent moves one level up and later in time") {
  Geometry g = Geometry::create(1, Rational(2), 2);
  auto root = Root::create(g, canonical_root_spec(1), 3);
  StoppingParams s = default_parameters(g);
  DyadicAddress a = root_address(*root);
  a.level = 3;
  a.spatial[0] = 11;
  a.temporal = 100;
  DyadicAddress up = forward_parent(a, s);
  CHECK(up.level == 2);
  CHECK(forward_parent_iter(a, 1, s.theta0) == up);
  CHECK(forward_parent_iter(a, 2, s.theta0) == forward_parent(up, s));
  CHECK(realize(up).t_lo > realize(a).t_lo);
}

TEST_CASE("stopping partition on a time band") {
  Geometry g = Geometry::create(1, Rational(2), 2);
  RootSpec lifted = canonical_root_spec(1);
  lifted.top_time = Rational(1, 2);
  Built b = build(time_band(Rational(-1, 3), Rational(1, 4)), g, lifted, 3, Rational(1, 262144));
  CHECK(b.part.S.size() == 2);
  CHECK(b.part.S[0].size() == 180);
  CHECK(b.part.S[1].size() == 384);
  CHECK(b.part.untermin.empty());
  CHECK(b.part.index_law_ok);
  CHECK(verify_covers_base(b.part).ok);
  CHECK(verify_nesting(b.part).ok);
  CHECK(verify_disjoint_from_F(b.part, b.F).ok);
  for (const auto& Sk : b.part.S) CHECK(pairwise_disjoint(Sk));
  DecayReport d = decay_check(b.part, g);
  CHECK(d.lambda == Rational(63, 64));
  CHECK(d.pass);
  REQUIRE(d.ratios.size() == 1);
  CHECK(d.ratios[0] <= d.lambda.get_d());

  InterimReport ir = interim_bound(g, Rational(1, 262144), 0.5L, default_parameters(g), &b.part);
  CHECK(ir.prefactor > 0);
  CHECK(ir.exponent > 0);
  CHECK(interim_prefactor(g, default_parameters(g)) == ir.prefactor);
}

TEST_CASE("stopping partition around a point") {
  Geometry g = Geometry::create(1, Rational(2), 2);
  RootSpec lifted = canonical_root_spec(1);
  lifted.top_time = Rational(1, 2);
  Built b = build(fixture_point(1), g, lifted, 4, Rational(1, 64));
  CHECK(b.part.S.size() == 1);
  CHECK(b.part.index_law_ok);
  CHECK(verify_covers_base(b.part).ok);
  CHECK(verify_disjoint_from_F(b.part, b.F).ok);
  CHECK(decay_check(b.part, g).pass);

  // same answer through the single-cell entry point
  const StoppingParams params = default_parameters(g);
  for (const auto& a : b.part.base) {
    StoppingOutcome o = stopping_time(fixture_point(1), a, b.part.Lambda, params, 4, make_theta_grid(params));
    REQUIRE(o.tau);
    REQUIRE(b.part.base_tau.at(a).tau);
    CHECK(*o.tau == *b.part.base_tau.at(a).tau);
  }
}
