#include <doctest.h>

#include <cmath>

#include "parporo/geometry.hpp"
#include "parporo/interval.hpp"
#include "parporo/rational.hpp"

using namespace parporo;

TEST_CASE("rational parsing and formatting") {
  CHECK(parse_rational("7") == 7);
  CHECK(parse_rational("-3/8") == Rational(-3, 8));
  CHECK(parse_rational("0.125") == Rational(1, 8));
  CHECK(parse_rational("1e-3") == Rational(1, 1000));
  CHECK(parse_rational("-2.5E+2") == -250);
  CHECK(to_fraction(make_rational(BigInt(6), BigInt(8))) == "3/4");
  CHECK(to_fraction(Rational(4)) == "4");
  CHECK_THROWS(parse_rational("abc"));
  CHECK_THROWS(parse_rational("1/0"));

  // reduced on construction, so equality against a literal works
  const Rational q = make_rational(BigInt(0), BigInt(4));
  CHECK(q == 0);
  CHECK(make_rational(BigInt(6), BigInt(-4)) == Rational(-3, 2));
  CHECK(rational_from_double(0.375) == Rational(3, 8));
}

TEST_CASE("interval arithmetic stays exact on exact operations") {
  Interval a(1, 2), b(3, 4);
  Interval s = a + b;
  CHECK(s.lo == 4);
  CHECK(s.hi == 6);
  Interval r = sqrt(Interval(4.0));
  CHECK(r.is_point());
  CHECK(r.lo == 2);
  Interval third = Interval(1.0) / Interval(3.0);
  CHECK(third.lo < third.hi);
  CHECK(third.contains(1.0 / 3.0));
  CHECK(pow_nonneg(Interval(0.0), -1.0).hi == std::numeric_limits<double>::infinity());
}

TEST_CASE("geometry validation") {
  CHECK_THROWS_AS(Geometry::create(1, Rational(2), 1), GeometryError);
  CHECK_THROWS_AS(Geometry::create(1, Rational(1)), GeometryError);
  CHECK_THROWS_AS(Geometry::create(0, Rational(2)), GeometryError);
  CHECK_THROWS_AS(Geometry::create(kMaxDim + 1, Rational(2)), GeometryError);

  Geometry g = Geometry::create(1, Rational(2));
  CHECK(g.d() == 2);  // smallest d with 2^{2d} >= 9
  CHECK(g.two_dp_exact());
  CHECK(g.two_dp() == 16);
  CHECK(g.k_floor() == 16);
  CHECK(g.k_ceil() == 16);

  Geometry h = Geometry::create(2, Rational(3, 2), 3);
  CHECK(!h.two_dp_exact());  // 2^{4.5}
  CHECK(h.k_floor() == 22);
  CHECK(h.k_ceil() == 23);
  CHECK(std::fabs(static_cast<double>(h.two_dp_ld()) - std::pow(2.0, 4.5)) < 1e-12);
}

TEST_CASE("canonical root and lattice laws") {
  Geometry g = Geometry::create(1, Rational(2), 2);
  auto root = Root::create(g, canonical_root_spec(1), 3);
  const DyadicAddress r0 = root_address(*root);
  const ParabolicRectangle R = realize(r0);
  CHECK(R.t_lo == -1);
  CHECK(R.t_hi == 0);
  CHECK(R.side == 1);
  CHECK(R.x_lo(0) == Rational(-1, 2));

  auto kids = children(r0);
  CHECK(kids.size() == static_cast<std::size_t>(root->children_count(0)));
  CHECK(kids.size() == static_cast<std::size_t>(root->spatial_count(1) * root->k(0)));
  Rational total = 0;
  for (const auto& c : kids) {
    CHECK(parent(c) == r0);
    CHECK(is_ancestor_or_self(r0, c));
    total += realize(c).measure();
  }
  CHECK(total == R.measure());

  for (int i = 0; i <= 3; ++i) {
    BigInt den = pow2_big(static_cast<unsigned>(2 * i)) * BigInt(static_cast<long>(root->K(i)));
    CHECK(root->cell_fraction(i) == make_rational(BigInt(1), den));
  }
  CHECK(root->slab_ratio(1, 3) == root->K(3) / root->K(1));

  DyadicAddress deep = r0;
  deep.level = 3;
  deep.spatial[0] = 37;
  deep.temporal = root->K(3) - 2;
  CHECK(ancestor_at(deep, 0) == r0);
  CHECK(ancestor_at(deep, 2) == parent(deep));
  CHECK(forward_parent_iter(deep, 0, 4) == deep);
  CHECK(!bodies_intersect(deep, translate_address(deep, 1)));
  CHECK(bodies_intersect(deep, parent(deep)));
  CHECK(temporal_hi_units(deep) == 1 - make_rational(BigInt(1), BigInt(static_cast<long>(root->K(3)))));
}

TEST_CASE("truncation sequence stays in range") {
  for (const char* ps : {"2", "3/2", "5/2"}) {
    Geometry g = Geometry::create(1, parse_rational(ps), 3);
    for (const char* gs : {"0", "1/5", "1/2"}) {
      auto seq = gamma_sequence(g, parse_rational(gs), 6);
      REQUIRE(seq.size() == 6);
      for (const auto& lv : seq) {
        CHECK(lv.gamma >= 0);
        CHECK(lv.gamma <= 0.5L);
        CHECK((lv.k == g.k_floor() || lv.k == g.k_ceil()));
      }
    }
  }
}

TEST_CASE("translations and default parameters") {
  CHECK(plus_translation(Rational(0)) == 1);
  CHECK(plus_translation(Rational(1, 3)) == 2);

  Geometry g = Geometry::create(1, Rational(2), 2);
  StoppingParams s = default_parameters(g);
  CHECK(s.theta0 == 4);
  CHECK(s.phi == 2);
  CHECK(s.Phi == 15);
  CHECK(check_parameters(s, g).ok);

  StoppingParams bad = s;
  bad.Phi = bad.phi;
  CHECK(!check_parameters(bad, g).ok);

  auto root = Root::create(g, canonical_root_spec(1), 2);
  DyadicAddress a = root_address(*root);
  a.level = 2;
  a.temporal = 17;
  const ParabolicRectangle ra = realize(a), rb = realize(translate_address(a, 3));
  CHECK(rb.t_lo - ra.t_lo == 3 * ra.l_t());
  CHECK(translate(ra, Rational(3)).t_lo == rb.t_lo);
}
