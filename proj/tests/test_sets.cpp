#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "parporo/geometry.hpp"
#include "parporo/sets.hpp"

using namespace parporo;
using nlohmann::json;

namespace {

json load(const std::string& name) {
  std::ifstream in(std::string(PARPORO_FIXTURES) + "/" + name);
  REQUIRE(in.good());
  return json::parse(in);
}

STPoint pt(double x, double t) {
  STPoint p;
  p.x[0] = x;
  p.t = t;
  return p;
}

}  // namespace

TEST_CASE("fixture files parse and round-trip") {
  for (const char* f : {"point.json", "grid.json", "dense_grid.json", "hyperplane.json", "halfspace.json",
                        "cantor.json", "band.json"}) {
    CAPTURE(f);
    ClosedSetModel E = set_from_json(load(f));
    CHECK(E.n() == 1);
    ClosedSetModel again = set_from_json(set_to_json(E));
    CHECK(set_to_json(again) == set_to_json(E));
  }
  CHECK(set_from_json(load("point.json")).null_set());
  CHECK(!set_from_json(load("halfspace.json")).null_set());
  CHECK(!set_from_json(load("band.json")).null_set());
}

TEST_CASE("malformed set definitions are rejected") {
  CHECK_THROWS(set_from_json(json::parse(R"({"coords": [["0","0"]]})")));
  CHECK_THROWS(set_from_json(json::parse(R"({"type": "blob", "n": 1})")));
  CHECK_THROWS(set_from_json(json::parse(R"({"type": "points", "coords": []})")));
  CHECK_THROWS(set_from_json(json::parse(R"({"type": "boxes", "boxes": [{"lo": ["1","0"], "hi": ["0","1"]}]})")));
  CHECK_THROWS(set_from_json(json::parse(R"({"type": "hyperplane", "n": 1, "axis": 3})")));
  CHECK_THROWS(set_from_json(json::parse(R"({"type": "grid", "n": 1, "spacing": "-1"})")));
  CHECK_THROWS(set_from_json(json::parse(R"({"type": "halfspace", "n": 1, "t0": "0", "side": "sideways"})")));
  CHECK_THROWS(set_from_json(json::parse(R"({"type": "points", "coords": [["0","0"]]})"), 2));
  CHECK_THROWS(set_from_json(json::parse(
      R"({"type": "ifs", "n": 1, "seed": {"lo": ["0"], "hi": ["1"]}, "maps": [{"ratio": "3/2", "shift": ["0"]}]})")));
}

TEST_CASE("parabolic distance") {
  // max(|x|, |t|^{1/p})
  CHECK(parabolic_distance(pt(0, 0), pt(3, 4), 1, 2.0) == doctest::Approx(3.0));
  CHECK(parabolic_distance(pt(0, 0), pt(1, 16), 1, 2.0) == doctest::Approx(4.0));
  Interval b = parabolic_distance_bracket(pt(0, 0), pt(1, 16), 1, 2.0);
  CHECK(b.contains(4.0));

  ClosedSetModel line = fixture_hyperplane(1);
  Interval d = distance_to_set(line, pt(0.25, 7), 2.0);
  CHECK(d.contains(0.25));
  CHECK(d.width() < 1e-12);

  ClosedSetModel origin = fixture_point(1);
  Interval e = distance_to_set(origin, pt(0.5, -1), 2.0);
  CHECK(e.contains(1.0));
}

TEST_CASE("distance range brackets sampled distances") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2, 2);
  for (ClosedSetModel E : {fixture_point(1), fixture_hyperplane(1), fixture_grid(1), fixture_halfspace(1)}) {
    for (int rep = 0; rep < 40; ++rep) {
      STBox box;
      double a = u(rng), b = u(rng), c = u(rng), e = u(rng);
      box.lo[0] = std::min(a, b);
      box.hi[0] = std::max(a, b);
      box.tlo = std::min(c, e);
      box.thi = std::max(c, e);
      Interval r = distance_range(E, box, 2.0);
      for (int k = 0; k <= 4; ++k) {
        STPoint q = pt(box.lo[0] + (box.hi[0] - box.lo[0]) * k / 4, box.tlo + (box.thi - box.tlo) * (4 - k) / 4);
        Interval d = distance_to_set(E, q, 2.0);
        CHECK(r.lo <= d.hi + 1e-12);
        CHECK(d.lo <= r.hi + 1e-12);
      }
    }
  }
}

TEST_CASE("lattice freeness agrees with direct rectangle tests") {
  Geometry g = Geometry::create(1, Rational(2), 2);
  RootSpec spec = canonical_root_spec(1);
  spec.top_time = Rational(1, 2);
  auto root = Root::create(g, spec, 3);
  for (ClosedSetModel E : {fixture_point(1), fixture_hyperplane(1), fixture_grid(1), fixture_halfspace(1),
                           set_from_json(load("band.json"))}) {
    CAPTURE(E.kind());
    LatticeFreeness oracle(E, *root);
    int free_cells = 0;
    for (int lev = 0; lev <= 2; ++lev) {
      DyadicAddress a = root_address(*root);
      a.level = lev;
      for (std::int64_t s = 0; s < root->spatial_count(lev); ++s)
        for (std::int64_t t = 0; t < root->K(lev); ++t) {
          a.spatial[0] = s;
          a.temporal = t;
          Freeness f = oracle.query(a);
          Freeness direct = rectangle_free(E, realize(a));
          if (f != Freeness::Unknown && direct != Freeness::Unknown) CHECK(f == direct);
          if (f == Freeness::Empty) ++free_cells;
        }
    }
    CHECK(free_cells > 0);
  }
}

TEST_CASE("a free parent has only free children") {
  Geometry g = Geometry::create(1, Rational(2), 2);
  auto root = Root::create(g, canonical_root_spec(1), 3);
  ClosedSetModel E = fixture_hyperplane(1);
  LatticeFreeness oracle(E, *root);
  DyadicAddress a = root_address(*root);
  a.level = 1;
  for (std::int64_t s = 0; s < root->spatial_count(1); ++s) {
    a.spatial[0] = s;
    a.temporal = 3;
    if (oracle.query(a) != Freeness::Empty) continue;
    for (const auto& c : children(a)) CHECK(oracle.query(c) == Freeness::Empty);
  }
}
