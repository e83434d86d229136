#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include <json.hpp>

#include "parporo/geometry.hpp"
#include "parporo/interval.hpp"
#include "parporo/rational.hpp"

namespace parporo {

struct SpacePoint {
  std::vector<Rational> x;
  Rational t;
};

struct ClosedBox {  // closed in every coordinate
  std::vector<Rational> lo, hi;
  Rational t_lo, t_hi;
};

struct PointCloud {
  std::vector<SpacePoint> points;
};

struct BoxUnion {
  std::vector<ClosedBox> boxes;
};

struct HalfSpaceTime {
  Rational t0;
  bool after = true;  // {t >= t0} when true, {t <= t0} otherwise
};

struct SpatialHyperplane {
  int axis = 0;
  Rational offset;
};

// {(origin + spacing*z, origin_t - time_spacing*m)} with z integer and m a
// natural number (or any integer when past_only is false).
struct IntegerGrid {
  std::vector<Rational> origin;
  Rational origin_t;
  Rational spacing{1};
  Rational time_spacing{1};
  bool past_only = true;
};

struct IFSMap {
  Rational ratio;
  Rational time_ratio;  // ignored when the attractor is crossed with the time axis
  std::vector<Rational> shift;
  Rational shift_t;
};

// Attractor of x -> ratio*x + shift; with time_axis the set is (attractor) x R,
// otherwise maps act on (x, t) with the separate temporal ratio.
struct IFSFractal {
  std::vector<IFSMap> maps;
  ClosedBox seed;
  bool time_axis = true;
  int depth_cap = 12;
};

using SetShape = std::variant<PointCloud, BoxUnion, HalfSpaceTime, SpatialHyperplane, IntegerGrid, IFSFractal>;

enum class Freeness { Empty, Nonempty, Unknown };
const char* to_string(Freeness f);

struct STPoint {
  std::array<double, kMaxDim> x{};
  double t = 0;
};

struct STBox {  // closed box in double coordinates
  std::array<double, kMaxDim> lo{}, hi{};
  double tlo = 0, thi = 0;
};

class ClosedSetModel {
 public:
  static ClosedSetModel make(int n, SetShape shape);

  int n() const { return n_; }
  const SetShape& shape() const { return *shape_; }
  std::string kind() const;
  // True when the model is Lebesgue-null by construction.
  bool null_set() const { return null_set_; }

  template <class T>
  const T* as() const {
    return std::get_if<T>(shape_.get());
  }

  struct PointData {
    std::array<Interval, kMaxDim> x;
    Interval t;
  };
  const std::vector<PointData>& point_data() const { return point_data_; }

 private:
  int n_ = 1;
  std::shared_ptr<const SetShape> shape_;
  bool null_set_ = true;
  std::vector<PointData> point_data_;
};

Interval rational_bracket(const Rational& q);

double parabolic_distance(const STPoint& a, const STPoint& b, int n, double p);
Interval parabolic_distance_bracket(const STPoint& a, const STPoint& b, int n, double p);

// Bracket with lo <= inf over the box of dist(., E) and hi >= sup over the box.
Interval distance_range(const ClosedSetModel& E, const STBox& box, double p);

Interval distance_to_set(const ClosedSetModel& E, const STPoint& pt, double p);

Freeness rectangle_free(const ClosedSetModel& E, const ParabolicRectangle& rect);

STBox to_box(const ParabolicRectangle& rect);

// Freeness of lattice cells of one root, in integer index arithmetic where the
// model allows it. The shift moves the whole lattice in time by a rational
// number of root time units. Holds lazily built per-level caches, so an
// instance must not be shared between threads.
class LatticeFreeness {
 public:
  LatticeFreeness(const ClosedSetModel& E, const Root& root, const Rational& shift = Rational(0));
  ~LatticeFreeness();
  LatticeFreeness(const LatticeFreeness&) = delete;
  LatticeFreeness& operator=(const LatticeFreeness&) = delete;

  Freeness query(const DyadicAddress& a) const;
  const Root& root() const { return root_; }
  const Rational& shift() const { return shift_; }
  const ClosedSetModel& set() const { return E_; }

 private:
  struct LevelData;
  const LevelData& level_data(int level) const;

  const ClosedSetModel& E_;
  const Root& root_;
  Rational shift_;
  std::vector<std::vector<Rational>> norm_points_;  // normalized points: u_0..u_{n-1}, tau
  mutable std::vector<std::unique_ptr<LevelData>> levels_;
};

ClosedSetModel set_from_json(const nlohmann::json& j, std::optional<int> n = std::nullopt);
nlohmann::json set_to_json(const ClosedSetModel& E);
// Optional "p" carried by a set file, if present.
std::optional<Rational> set_json_p(const nlohmann::json& j);

Rational json_rational(const nlohmann::json& v);
nlohmann::json rational_json(const Rational& q);

// Built-in fixtures.
ClosedSetModel fixture_point(int n);
ClosedSetModel fixture_grid(int n, const Rational& spacing = Rational(1));
ClosedSetModel fixture_hyperplane(int n);
ClosedSetModel fixture_halfspace(int n);
ClosedSetModel fixture_cantor_time(int depth_cap = 12);

}  // namespace parporo
