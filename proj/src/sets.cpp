#include "parporo/sets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

namespace parporo {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::int64_t kIndexCap = std::int64_t{1} << 62;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::int64_t saturating_floor(const Rational& q) {
  BigInt f = floor_big(q);
  if (f > BigInt(static_cast<long>(kIndexCap))) return kIndexCap;
  if (f < BigInt(static_cast<long>(-kIndexCap))) return -kIndexCap;
  return f.get_si();
}

Interval gap_to_interval(const Interval& z, double lo, double hi) {
  Interval below = Interval(lo) - z, above = z - Interval(hi);
  return max(max(Interval(0.0), below), above);
}

Interval far_from_interval(const Interval& z, double lo, double hi) {
  return max(abs(Interval(lo) - z), abs(Interval(hi) - z));
}

// Interval-vs-interval gaps for closed boxes: smallest separation, and the
// largest over x in [a, b] of the separation of x from [lo, hi].
Interval interval_gap(double a, double b, const Interval& lo, const Interval& hi) {
  return max(max(Interval(0.0), Interval(a) - hi), lo - Interval(b));
}

Interval interval_far_gap(double a, double b, const Interval& lo, const Interval& hi) {
  auto g = [&](double x) { return max(max(Interval(0.0), lo - Interval(x)), Interval(x) - hi); };
  return max(g(a), g(b));
}

double widen_down(double v) { return v <= 0 ? 0.0 : next_down(next_down(v * (1 - 8 * 0x1p-53))); }
double widen_up(double v) { return std::isinf(v) ? v : next_up(next_up(v * (1 + 8 * 0x1p-53))); }

// Distance along one axis to the lattice {o + h z}.
double lattice_dist(double x, double o, double h) {
  double r = (x - o) / h;
  return h * std::fabs(r - std::nearbyint(r));
}

std::pair<double, double> lattice_range(double a, double b, double o, double h) {
  double lo, hi;
  if (std::floor((b - o) / h) >= std::ceil((a - o) / h)) {
    lo = 0;
  } else {
    lo = std::min(lattice_dist(a, o, h), lattice_dist(b, o, h));
  }
  if (b - a >= h) {
    hi = h / 2;
  } else {
    hi = std::max(lattice_dist(a, o, h), lattice_dist(b, o, h));
    double zm = std::ceil((a - o) / h - 0.5);
    double mid = o + h * (zm + 0.5);
    if (mid >= a && mid <= b) hi = h / 2;
  }
  return {widen_down(lo), widen_up(hi)};
}

std::pair<double, double> past_lattice_range(double a, double b, double o, double h) {
  // Points o - h m with m >= 0; above o the distance is t - o.
  double lo = kInf, hi = 0;
  if (b >= o) {
    double a2 = std::max(a, o);
    lo = std::min(lo, a2 - o);
    hi = std::max(hi, b - o);
  }
  if (a < o) {
    double b2 = std::min(b, o);
    auto r = lattice_range(a, b2, o, h);
    lo = std::min(lo, r.first);
    hi = std::max(hi, r.second);
  }
  return {widen_down(lo), widen_up(hi)};
}

struct AffineWord {
  Rational R, Rt;
  std::vector<Rational> S;
  Rational St;
  int depth = 0;
};

Rational fixed_point(const Rational& ratio, const Rational& shift) { return shift / (1 - ratio); }

Freeness ifs_free(const IFSFractal& f, int n, const ParabolicRectangle& rect) {
  std::vector<Rational> xlo(n), xhi(n);
  for (int k = 0; k < n; ++k) {
    xlo[k] = rect.x_lo(k);
    xhi[k] = rect.x_hi(k);
  }
  const IFSMap& m0 = f.maps.front();
  std::vector<Rational> xstar(n);
  for (int k = 0; k < n; ++k) xstar[k] = fixed_point(m0.ratio, m0.shift[k]);
  Rational tstar = f.time_axis ? Rational(0) : fixed_point(m0.time_ratio, m0.shift_t);

  bool unknown = false;
  std::vector<AffineWord> stack;
  stack.push_back({Rational(1), Rational(1), std::vector<Rational>(n, Rational(0)), Rational(0), 0});
  while (!stack.empty()) {
    AffineWord w = std::move(stack.back());
    stack.pop_back();
    bool meets = true;
    for (int k = 0; k < n && meets; ++k) {
      Rational blo = w.R * f.seed.lo[k] + w.S[k], bhi = w.R * f.seed.hi[k] + w.S[k];
      meets = blo < xhi[k] && bhi >= xlo[k];
    }
    if (meets && !f.time_axis) {
      Rational blo = w.Rt * f.seed.t_lo + w.St, bhi = w.Rt * f.seed.t_hi + w.St;
      meets = blo < rect.t_hi && bhi >= rect.t_lo;
    }
    if (!meets) continue;
    bool inside = true;
    for (int k = 0; k < n && inside; ++k) {
      Rational v = w.R * xstar[k] + w.S[k];
      inside = xlo[k] <= v && v < xhi[k];
    }
    if (inside && !f.time_axis) {
      Rational v = w.Rt * tstar + w.St;
      inside = rect.t_lo <= v && v < rect.t_hi;
    }
    if (inside) return Freeness::Nonempty;
    if (w.depth >= f.depth_cap) {
      unknown = true;
      continue;
    }
    for (const auto& m : f.maps) {
      AffineWord c;
      c.depth = w.depth + 1;
      c.R = w.R * m.ratio;
      c.S.resize(n);
      for (int k = 0; k < n; ++k) c.S[k] = w.R * m.shift[k] + w.S[k];
      if (!f.time_axis) {
        c.Rt = w.Rt * m.time_ratio;
        c.St = w.Rt * m.shift_t + w.St;
      }
      stack.push_back(std::move(c));
    }
  }
  return unknown ? Freeness::Unknown : Freeness::Empty;
}

struct IntervalWord {
  double R, Rt;
  std::array<Interval, kMaxDim> S;
  Interval St;
  int depth;
};

Interval ifs_range(const IFSFractal& f, int n, const STBox& box, double p) {
  std::array<Interval, kMaxDim> seed_lo, seed_hi, xstar;
  for (int k = 0; k < n; ++k) {
    seed_lo[k] = rational_bracket(f.seed.lo[k]);
    seed_hi[k] = rational_bracket(f.seed.hi[k]);
    xstar[k] = rational_bracket(fixed_point(f.maps[0].ratio, f.maps[0].shift[k]));
  }
  Interval tseed_lo, tseed_hi, tstar;
  if (!f.time_axis) {
    tseed_lo = rational_bracket(f.seed.t_lo);
    tseed_hi = rational_bracket(f.seed.t_hi);
    tstar = rational_bracket(fixed_point(f.maps[0].time_ratio, f.maps[0].shift_t));
  }
  std::vector<double> ratio, tratio;
  std::vector<std::array<Interval, kMaxDim>> shift;
  std::vector<Interval> tshift;
  for (const auto& m : f.maps) {
    ratio.push_back(m.ratio.get_d());
    tratio.push_back(f.time_axis ? 1.0 : m.time_ratio.get_d());
    std::array<Interval, kMaxDim> s{};
    for (int k = 0; k < n; ++k) s[k] = rational_bracket(m.shift[k]);
    shift.push_back(s);
    tshift.push_back(f.time_axis ? Interval(0.0) : rational_bracket(m.shift_t));
  }
  // Ratios are converted to doubles; widen each affine image slightly so the
  // boxes remain enclosures.
  auto scale = [](double r, const Interval& v) { return Interval(next_down(r), next_up(r)) * v; };

  double inf_up = kInf, sup_up = kInf, leaf_lo = kInf;
  std::vector<IntervalWord> stack;
  IntervalWord root{1.0, 1.0, {}, Interval(0.0), 0};
  for (int k = 0; k < n; ++k) root.S[k] = Interval(0.0);
  stack.push_back(root);
  while (!stack.empty()) {
    IntervalWord w = stack.back();
    stack.pop_back();
    Interval gap(0.0), far(0.0), wgap(0.0), wfar(0.0);
    for (int k = 0; k < n; ++k) {
      Interval blo = scale(w.R, seed_lo[k]) + w.S[k], bhi = scale(w.R, seed_hi[k]) + w.S[k];
      gap = max(gap, interval_gap(box.lo[k], box.hi[k], blo, bhi));
      Interval wp = scale(w.R, xstar[k]) + w.S[k];
      wgap = max(wgap, gap_to_interval(wp, box.lo[k], box.hi[k]));
      wfar = max(wfar, far_from_interval(wp, box.lo[k], box.hi[k]));
    }
    if (!f.time_axis) {
      Interval blo = scale(w.Rt, tseed_lo) + w.St, bhi = scale(w.Rt, tseed_hi) + w.St;
      gap = max(gap, root_p(interval_gap(box.tlo, box.thi, blo, bhi), p));
      Interval wp = scale(w.Rt, tstar) + w.St;
      wgap = max(wgap, root_p(gap_to_interval(wp, box.tlo, box.thi), p));
      wfar = max(wfar, root_p(far_from_interval(wp, box.tlo, box.thi), p));
    }
    inf_up = std::min(inf_up, wgap.hi);
    sup_up = std::min(sup_up, wfar.hi);
    if (gap.lo > inf_up || w.depth >= f.depth_cap) {
      leaf_lo = std::min(leaf_lo, gap.lo);
      continue;
    }
    for (std::size_t m = 0; m < f.maps.size(); ++m) {
      IntervalWord c;
      c.depth = w.depth + 1;
      c.R = w.R * ratio[m];
      c.Rt = w.Rt * tratio[m];
      for (int k = 0; k < n; ++k) c.S[k] = scale(w.R, shift[m][k]) + w.S[k];
      c.St = f.time_axis ? Interval(0.0) : scale(w.Rt, tshift[m]) + w.St;
      stack.push_back(c);
    }
  }
  return {std::min(leaf_lo, inf_up), sup_up};
}

SpacePoint parse_point(const json& coords, int n) {
  if (!coords.is_array() || static_cast<int>(coords.size()) != n + 1)
    throw std::invalid_argument("point must list n spatial coordinates followed by time");
  SpacePoint p;
  for (int k = 0; k < n; ++k) p.x.push_back(json_rational(coords[k]));
  p.t = json_rational(coords[n]);
  return p;
}

json point_json(const std::vector<Rational>& x, const Rational& t) {
  json a = json::array();
  for (auto& v : x) a.push_back(rational_json(v));
  a.push_back(rational_json(t));
  return a;
}

ClosedBox parse_box(const json& j, int n, bool with_time) {
  ClosedBox b;
  const json& lo = j.at("lo");
  const json& hi = j.at("hi");
  const std::size_t want = static_cast<std::size_t>(n + (with_time ? 1 : 0));
  if (lo.size() != want || hi.size() != want) throw std::invalid_argument("box corners have wrong dimension");
  for (int k = 0; k < n; ++k) {
    b.lo.push_back(json_rational(lo[k]));
    b.hi.push_back(json_rational(hi[k]));
  }
  if (with_time) {
    b.t_lo = json_rational(lo[n]);
    b.t_hi = json_rational(hi[n]);
  }
  return b;
}

json box_json(const ClosedBox& b, bool with_time) {
  json lo = json::array(), hi = json::array();
  for (std::size_t k = 0; k < b.lo.size(); ++k) {
    lo.push_back(rational_json(b.lo[k]));
    hi.push_back(rational_json(b.hi[k]));
  }
  if (with_time) {
    lo.push_back(rational_json(b.t_lo));
    hi.push_back(rational_json(b.t_hi));
  }
  return {{"lo", lo}, {"hi", hi}};
}

}  // namespace

const char* to_string(Freeness f) {
  switch (f) {
    case Freeness::Empty: return "empty";
    case Freeness::Nonempty: return "nonempty";
    default: return "unknown";
  }
}

Interval rational_bracket(const Rational& q) {
  double d = q.get_d();
  Rational back(d);
  int c = cmp(back, q);
  if (c == 0) return {d, d};
  return c < 0 ? Interval{d, next_up(d)} : Interval{next_down(d), d};
}

ClosedSetModel ClosedSetModel::make(int n, SetShape shape) {
  if (n < 1 || n > kMaxDim) throw std::invalid_argument("set dimension out of range");
  ClosedSetModel E;
  E.n_ = n;
  std::visit(
      overloaded{
          [&](const PointCloud& s) {
            if (s.points.empty()) throw std::invalid_argument("point cloud must be nonempty");
            for (const auto& pt : s.points) {
              if (static_cast<int>(pt.x.size()) != n) throw std::invalid_argument("point has wrong dimension");
              PointData d;
              for (int k = 0; k < n; ++k) d.x[k] = rational_bracket(pt.x[k]);
              d.t = rational_bracket(pt.t);
              E.point_data_.push_back(d);
            }
          },
          [&](const BoxUnion& s) {
            if (s.boxes.empty()) throw std::invalid_argument("box union must be nonempty");
            bool null = true;
            for (const auto& b : s.boxes) {
              if (static_cast<int>(b.lo.size()) != n || static_cast<int>(b.hi.size()) != n)
                throw std::invalid_argument("box has wrong dimension");
              bool degenerate = b.t_lo == b.t_hi;
              for (int k = 0; k < n; ++k) {
                if (b.lo[k] > b.hi[k]) throw std::invalid_argument("box has lo > hi");
                degenerate = degenerate || b.lo[k] == b.hi[k];
              }
              if (b.t_lo > b.t_hi) throw std::invalid_argument("box has t_lo > t_hi");
              null = null && degenerate;
            }
            E.null_set_ = null;
          },
          [&](const HalfSpaceTime&) { E.null_set_ = false; },
          [&](const SpatialHyperplane& s) {
            if (s.axis < 0 || s.axis >= n) throw std::invalid_argument("hyperplane axis out of range");
          },
          [&](const IntegerGrid& s) {
            if (static_cast<int>(s.origin.size()) != n) throw std::invalid_argument("grid origin has wrong dimension");
            if (s.spacing <= 0 || s.time_spacing <= 0) throw std::invalid_argument("grid spacings must be positive");
          },
          [&](const IFSFractal& s) {
            if (s.maps.empty()) throw std::invalid_argument("IFS needs at least one map");
            if (s.depth_cap < 0) throw std::invalid_argument("IFS depth cap must be nonnegative");
            if (static_cast<int>(s.seed.lo.size()) != n || static_cast<int>(s.seed.hi.size()) != n)
              throw std::invalid_argument("IFS seed box has wrong dimension");
            Rational mass = 0;
            for (const auto& m : s.maps) {
              if (m.ratio <= 0 || m.ratio >= 1) throw std::invalid_argument("IFS ratios must lie in (0,1)");
              if (static_cast<int>(m.shift.size()) != n) throw std::invalid_argument("IFS shift has wrong dimension");
              if (!s.time_axis && (m.time_ratio <= 0 || m.time_ratio >= 1))
                throw std::invalid_argument("IFS temporal ratios must lie in (0,1)");
              // Seed invariance f(seed) ⊆ seed keeps every word box an enclosure.
              for (int k = 0; k < n; ++k) {
                if (m.ratio * s.seed.lo[k] + m.shift[k] < s.seed.lo[k] ||
                    m.ratio * s.seed.hi[k] + m.shift[k] > s.seed.hi[k])
                  throw std::invalid_argument("IFS map does not send the seed box into itself");
              }
              if (!s.time_axis && (m.time_ratio * s.seed.t_lo + m.shift_t < s.seed.t_lo ||
                                   m.time_ratio * s.seed.t_hi + m.shift_t > s.seed.t_hi))
                throw std::invalid_argument("IFS map does not send the seed box into itself");
              mass += pow_int(m.ratio, static_cast<unsigned>(n)) * (s.time_axis ? Rational(1) : m.time_ratio);
            }
            E.null_set_ = mass < 1;
          },
      },
      shape);
  E.shape_ = std::make_shared<const SetShape>(std::move(shape));
  return E;
}

std::string ClosedSetModel::kind() const {
  return std::visit(overloaded{[](const PointCloud&) { return "points"; }, [](const BoxUnion&) { return "boxes"; },
                               [](const HalfSpaceTime&) { return "halfspace"; },
                               [](const SpatialHyperplane&) { return "hyperplane"; },
                               [](const IntegerGrid&) { return "grid"; }, [](const IFSFractal&) { return "ifs"; }},
                    *shape_);
}

double parabolic_distance(const STPoint& a, const STPoint& b, int n, double p) {
  double s = 0;
  for (int k = 0; k < n; ++k) s = std::max(s, std::fabs(a.x[k] - b.x[k]));
  return std::max(s, std::pow(std::fabs(a.t - b.t), 1.0 / p));
}

Interval parabolic_distance_bracket(const STPoint& a, const STPoint& b, int n, double p) {
  Interval s(0.0);
  for (int k = 0; k < n; ++k) s = max(s, abs(Interval(a.x[k]) - Interval(b.x[k])));
  return max(s, root_p(abs(Interval(a.t) - Interval(b.t)), p));
}

Interval distance_range(const ClosedSetModel& E, const STBox& box, double p) {
  const int n = E.n();
  return std::visit(
      overloaded{
          [&](const PointCloud&) {
            double lo = kInf, hi = kInf;
            for (const auto& z : E.point_data()) {
              Interval g(0.0), f(0.0);
              for (int k = 0; k < n; ++k) {
                g = max(g, gap_to_interval(z.x[k], box.lo[k], box.hi[k]));
                f = max(f, far_from_interval(z.x[k], box.lo[k], box.hi[k]));
              }
              g = max(g, root_p(gap_to_interval(z.t, box.tlo, box.thi), p));
              f = max(f, root_p(far_from_interval(z.t, box.tlo, box.thi), p));
              lo = std::min(lo, g.lo);
              hi = std::min(hi, f.hi);
            }
            return Interval(lo, hi);
          },
          [&](const BoxUnion& s) {
            double lo = kInf, hi = kInf;
            for (const auto& b : s.boxes) {
              Interval g(0.0), f(0.0);
              for (int k = 0; k < n; ++k) {
                Interval blo = rational_bracket(b.lo[k]), bhi = rational_bracket(b.hi[k]);
                g = max(g, interval_gap(box.lo[k], box.hi[k], blo, bhi));
                f = max(f, interval_far_gap(box.lo[k], box.hi[k], blo, bhi));
              }
              Interval tlo = rational_bracket(b.t_lo), thi = rational_bracket(b.t_hi);
              g = max(g, root_p(interval_gap(box.tlo, box.thi, tlo, thi), p));
              f = max(f, root_p(interval_far_gap(box.tlo, box.thi, tlo, thi), p));
              lo = std::min(lo, g.lo);
              hi = std::min(hi, f.hi);
            }
            return Interval(lo, hi);
          },
          [&](const HalfSpaceTime& s) {
            Interval t0 = rational_bracket(s.t0);
            Interval near, far;
            if (s.after) {
              near = max(Interval(0.0), t0 - Interval(box.thi));
              far = max(Interval(0.0), t0 - Interval(box.tlo));
            } else {
              near = max(Interval(0.0), Interval(box.tlo) - t0);
              far = max(Interval(0.0), Interval(box.thi) - t0);
            }
            return Interval(root_p(near, p).lo, root_p(far, p).hi);
          },
          [&](const SpatialHyperplane& s) {
            Interval a = rational_bracket(s.offset);
            const int k = s.axis;
            return Interval(gap_to_interval(a, box.lo[k], box.hi[k]).lo, far_from_interval(a, box.lo[k], box.hi[k]).hi);
          },
          [&](const IntegerGrid& s) {
            double lo = 0, hi = 0;
            const double h = s.spacing.get_d();
            for (int k = 0; k < n; ++k) {
              auto r = lattice_range(box.lo[k], box.hi[k], s.origin[k].get_d(), h);
              lo = std::max(lo, r.first);
              hi = std::max(hi, r.second);
            }
            const double ht = s.time_spacing.get_d(), ot = s.origin_t.get_d();
            auto r = s.past_only ? past_lattice_range(box.tlo, box.thi, ot, ht) : lattice_range(box.tlo, box.thi, ot, ht);
            lo = std::max(lo, root_p(Interval(r.first), p).lo);
            hi = std::max(hi, root_p(Interval(r.second), p).hi);
            return Interval(lo, hi);
          },
          [&](const IFSFractal& s) { return ifs_range(s, n, box, p); },
      },
      E.shape());
}

Interval distance_to_set(const ClosedSetModel& E, const STPoint& pt, double p) {
  STBox b;
  for (int k = 0; k < E.n(); ++k) b.lo[k] = b.hi[k] = pt.x[k];
  b.tlo = b.thi = pt.t;
  return distance_range(E, b, p);
}

STBox to_box(const ParabolicRectangle& rect) {
  STBox b;
  for (int k = 0; k < rect.n(); ++k) {
    b.lo[k] = rational_bracket(rect.x_lo(k)).lo;
    b.hi[k] = rational_bracket(rect.x_hi(k)).hi;
  }
  b.tlo = rational_bracket(rect.t_lo).lo;
  b.thi = rational_bracket(rect.t_hi).hi;
  return b;
}

Freeness rectangle_free(const ClosedSetModel& E, const ParabolicRectangle& rect) {
  const int n = E.n();
  if (rect.n() != n) throw std::invalid_argument("rectangle and set dimensions differ");
  auto in_half_open = [](const Rational& v, const Rational& lo, const Rational& hi) { return lo <= v && v < hi; };
  return std::visit(
      overloaded{
          [&](const PointCloud& s) {
            for (const auto& z : s.points) {
              bool in = in_half_open(z.t, rect.t_lo, rect.t_hi);
              for (int k = 0; k < n && in; ++k) in = in_half_open(z.x[k], rect.x_lo(k), rect.x_hi(k));
              if (in) return Freeness::Nonempty;
            }
            return Freeness::Empty;
          },
          [&](const BoxUnion& s) {
            for (const auto& b : s.boxes) {
              bool meets = b.t_lo < rect.t_hi && b.t_hi >= rect.t_lo;
              for (int k = 0; k < n && meets; ++k) meets = b.lo[k] < rect.x_hi(k) && b.hi[k] >= rect.x_lo(k);
              if (meets) return Freeness::Nonempty;
            }
            return Freeness::Empty;
          },
          [&](const HalfSpaceTime& s) {
            bool meets = s.after ? s.t0 < rect.t_hi : rect.t_lo <= s.t0;
            return meets ? Freeness::Nonempty : Freeness::Empty;
          },
          [&](const SpatialHyperplane& s) {
            return in_half_open(s.offset, rect.x_lo(s.axis), rect.x_hi(s.axis)) ? Freeness::Nonempty : Freeness::Empty;
          },
          [&](const IntegerGrid& s) {
            for (int k = 0; k < n; ++k) {
              BigInt z = ceil_big((rect.x_lo(k) - s.origin[k]) / s.spacing);
              if (!(s.origin[k] + s.spacing * Rational(z) < rect.x_hi(k))) return Freeness::Empty;
            }
            BigInt m_hi = floor_big((s.origin_t - rect.t_lo) / s.time_spacing);
            BigInt m_lo = floor_big((s.origin_t - rect.t_hi) / s.time_spacing) + 1;
            if (s.past_only && m_lo < 0) m_lo = 0;
            return m_lo <= m_hi ? Freeness::Nonempty : Freeness::Empty;
          },
          [&](const IFSFractal& s) { return ifs_free(s, n, rect); },
      },
      E.shape());
}

// ---------------------------------------------------------------------------

struct LatticeFreeness::LevelData {
  std::unordered_set<DyadicAddress, AddressHash> point_cells;
  std::int64_t plane_index = 0;
  std::int64_t half_threshold = 0;
  struct Range {
    std::array<std::int64_t, kMaxDim> lo, hi;
    std::int64_t tlo, thi;
  };
  std::vector<Range> boxes;
};

LatticeFreeness::LatticeFreeness(const ClosedSetModel& E, const Root& root, const Rational& shift)
    : E_(E), root_(root), shift_(shift) {
  if (E.n() != root.n()) throw std::invalid_argument("set and lattice dimensions differ");
  levels_.resize(static_cast<std::size_t>(root.depth() + 1));
  if (const auto* pc = E.as<PointCloud>()) {
    for (const auto& z : pc->points) {
      std::vector<Rational> u;
      for (int k = 0; k < root.n(); ++k)
        u.push_back((z.x[k] - (root.spec().center[k] - root.spec().side / 2)) / root.spec().side);
      u.push_back((z.t - root.t_low()) / root.time_length() - shift_);
      norm_points_.push_back(std::move(u));
    }
  }
}

LatticeFreeness::~LatticeFreeness() = default;

const LatticeFreeness::LevelData& LatticeFreeness::level_data(int level) const {
  auto& slot = levels_.at(static_cast<std::size_t>(level));
  if (slot) return *slot;
  auto data = std::make_unique<LevelData>();
  const int n = root_.n();
  const Rational N(pow2_big(static_cast<unsigned>(root_.geometry().d() * level)));
  const Rational K(BigInt(static_cast<long>(root_.K(level))));
  auto u_of = [&](int k, const Rational& x) -> Rational {
    return (x - (root_.spec().center[k] - root_.spec().side / 2)) / root_.spec().side;
  };
  auto tau_of = [&](const Rational& t) -> Rational { return (t - root_.t_low()) / root_.time_length() - shift_; };

  if (E_.as<PointCloud>()) {
    for (const auto& u : norm_points_) {
      DyadicAddress a;
      a.root = &root_;
      a.level = level;
      for (int k = 0; k < n; ++k) a.spatial[k] = saturating_floor(u[k] * N);
      a.temporal = saturating_floor(u[n] * K);
      data->point_cells.insert(a);
    }
  } else if (const auto* hp = E_.as<SpatialHyperplane>()) {
    data->plane_index = saturating_floor(u_of(hp->axis, hp->offset) * N);
  } else if (const auto* hs = E_.as<HalfSpaceTime>()) {
    data->half_threshold = saturating_floor(tau_of(hs->t0) * K);
  } else if (const auto* bu = E_.as<BoxUnion>()) {
    for (const auto& b : bu->boxes) {
      LevelData::Range r{};
      for (int k = 0; k < n; ++k) {
        r.lo[k] = saturating_floor(u_of(k, b.lo[k]) * N);
        r.hi[k] = saturating_floor(u_of(k, b.hi[k]) * N);
      }
      r.tlo = saturating_floor(tau_of(b.t_lo) * K);
      r.thi = saturating_floor(tau_of(b.t_hi) * K);
      data->boxes.push_back(r);
    }
  }
  slot = std::move(data);
  return *slot;
}

Freeness LatticeFreeness::query(const DyadicAddress& a) const {
  if (a.root != &root_) throw std::invalid_argument("address belongs to a different lattice");
  const int n = root_.n();
  if (E_.as<IntegerGrid>() || E_.as<IFSFractal>()) return rectangle_free(E_, realize(a, shift_));
  const LevelData& L = level_data(a.level);
  if (E_.as<PointCloud>()) {
    DyadicAddress key = a;
    for (int k = n; k < kMaxDim; ++k) key.spatial[k] = 0;
    return L.point_cells.count(key) ? Freeness::Nonempty : Freeness::Empty;
  }
  if (const auto* hp = E_.as<SpatialHyperplane>())
    return a.spatial[hp->axis] == L.plane_index ? Freeness::Nonempty : Freeness::Empty;
  if (const auto* hs = E_.as<HalfSpaceTime>()) {
    bool meets = hs->after ? a.temporal >= L.half_threshold : a.temporal <= L.half_threshold;
    return meets ? Freeness::Nonempty : Freeness::Empty;
  }
  for (const auto& r : L.boxes) {
    bool in = a.temporal >= r.tlo && a.temporal <= r.thi;
    for (int k = 0; k < n && in; ++k) in = a.spatial[k] >= r.lo[k] && a.spatial[k] <= r.hi[k];
    if (in) return Freeness::Nonempty;
  }
  return Freeness::Empty;
}

// ---------------------------------------------------------------------------

Rational json_rational(const json& v) {
  if (v.is_string()) return parse_rational(v.get<std::string>());
  if (v.is_number_integer()) return Rational(BigInt(std::to_string(v.get<long long>()), 10));
  if (v.is_number_unsigned()) return Rational(BigInt(std::to_string(v.get<unsigned long long>()), 10));
  if (v.is_number_float()) return parse_rational(to_decimal(v.get<double>()));
  throw std::invalid_argument("expected a number or numeric string, got " + v.dump());
}

json rational_json(const Rational& q) { return to_fraction(q); }

std::optional<Rational> set_json_p(const json& j) {
  if (j.contains("p")) return json_rational(j.at("p"));
  return std::nullopt;
}

ClosedSetModel set_from_json(const json& j, std::optional<int> n_hint) {
  if (!j.is_object() || !j.contains("type")) throw std::invalid_argument("set definition needs a \"type\" field");
  const std::string type = j.at("type").get<std::string>();
  auto dim = [&]() -> int {
    if (j.contains("n")) {
      int n = j.at("n").get<int>();
      if (n_hint && *n_hint != n) throw std::invalid_argument("set dimension disagrees with geometry");
      return n;
    }
    if (n_hint) return *n_hint;
    throw std::invalid_argument("set definition of type '" + type + "' needs \"n\"");
  };
  if (type == "points") {
    const json& coords = j.at("coords");
    if (!coords.is_array() || coords.empty()) throw std::invalid_argument("points need a nonempty \"coords\" array");
    int n = static_cast<int>(coords[0].size()) - 1;
    if (n_hint && *n_hint != n) throw std::invalid_argument("set dimension disagrees with geometry");
    PointCloud pc;
    for (const auto& c : coords) pc.points.push_back(parse_point(c, n));
    return ClosedSetModel::make(n, pc);
  }
  if (type == "boxes") {
    const json& boxes = j.at("boxes");
    if (!boxes.is_array() || boxes.empty()) throw std::invalid_argument("boxes need a nonempty \"boxes\" array");
    int n = static_cast<int>(boxes[0].at("lo").size()) - 1;
    if (n_hint && *n_hint != n) throw std::invalid_argument("set dimension disagrees with geometry");
    BoxUnion bu;
    for (const auto& b : boxes) bu.boxes.push_back(parse_box(b, n, true));
    return ClosedSetModel::make(n, bu);
  }
  if (type == "halfspace") {
    HalfSpaceTime h;
    h.t0 = json_rational(j.at("t0"));
    std::string side = j.value("side", "after");
    if (side != "after" && side != "before") throw std::invalid_argument("halfspace side must be after|before");
    h.after = side == "after";
    return ClosedSetModel::make(dim(), h);
  }
  if (type == "hyperplane") {
    SpatialHyperplane h;
    h.axis = j.value("axis", 0);
    h.offset = json_rational(j.value("offset", json("0")));
    return ClosedSetModel::make(dim(), h);
  }
  if (type == "grid") {
    int n = dim();
    IntegerGrid g;
    g.spacing = json_rational(j.value("spacing", json("1")));
    g.time_spacing = json_rational(j.value("time_spacing", json("1")));
    if (j.contains("origin")) {
      for (const auto& v : j.at("origin")) g.origin.push_back(json_rational(v));
    } else {
      g.origin.assign(n, Rational(0));
    }
    g.origin_t = json_rational(j.value("origin_t", json("0")));
    std::string time = j.value("time", "past");
    if (time != "past" && time != "all") throw std::invalid_argument("grid time must be past|all");
    g.past_only = time == "past";
    return ClosedSetModel::make(n, g);
  }
  if (type == "ifs") {
    int n = dim();
    IFSFractal f;
    f.time_axis = j.value("time_axis", true);
    f.depth_cap = j.value("depth_cap", 12);
    f.seed = parse_box(j.at("seed"), n, !f.time_axis);
    for (const auto& m : j.at("maps")) {
      IFSMap map;
      map.ratio = json_rational(m.at("ratio"));
      for (const auto& v : m.at("shift")) map.shift.push_back(json_rational(v));
      if (!f.time_axis) {
        map.time_ratio = json_rational(m.at("time_ratio"));
        map.shift_t = json_rational(m.value("shift_t", json("0")));
      }
      f.maps.push_back(std::move(map));
    }
    return ClosedSetModel::make(n, f);
  }
  throw std::invalid_argument("unknown set type '" + type + "'");
}

json set_to_json(const ClosedSetModel& E) {
  json j;
  j["type"] = E.kind();
  j["n"] = E.n();
  std::visit(overloaded{
                 [&](const PointCloud& s) {
                   json c = json::array();
                   for (const auto& z : s.points) c.push_back(point_json(z.x, z.t));
                   j["coords"] = c;
                 },
                 [&](const BoxUnion& s) {
                   json b = json::array();
                   for (const auto& x : s.boxes) b.push_back(box_json(x, true));
                   j["boxes"] = b;
                 },
                 [&](const HalfSpaceTime& s) {
                   j["t0"] = rational_json(s.t0);
                   j["side"] = s.after ? "after" : "before";
                 },
                 [&](const SpatialHyperplane& s) {
                   j["axis"] = s.axis;
                   j["offset"] = rational_json(s.offset);
                 },
                 [&](const IntegerGrid& s) {
                   j["spacing"] = rational_json(s.spacing);
                   j["time_spacing"] = rational_json(s.time_spacing);
                   json o = json::array();
                   for (auto& v : s.origin) o.push_back(rational_json(v));
                   j["origin"] = o;
                   j["origin_t"] = rational_json(s.origin_t);
                   j["time"] = s.past_only ? "past" : "all";
                 },
                 [&](const IFSFractal& s) {
                   j["time_axis"] = s.time_axis;
                   j["depth_cap"] = s.depth_cap;
                   j["seed"] = box_json(s.seed, !s.time_axis);
                   json maps = json::array();
                   for (const auto& m : s.maps) {
                     json mj;
                     mj["ratio"] = rational_json(m.ratio);
                     json sh = json::array();
                     for (auto& v : m.shift) sh.push_back(rational_json(v));
                     mj["shift"] = sh;
                     if (!s.time_axis) {
                       mj["time_ratio"] = rational_json(m.time_ratio);
                       mj["shift_t"] = rational_json(m.shift_t);
                     }
                     maps.push_back(mj);
                   }
                   j["maps"] = maps;
                 },
             },
             E.shape());
  return j;
}

ClosedSetModel fixture_point(int n) {
  PointCloud pc;
  pc.points.push_back({std::vector<Rational>(n, Rational(0)), Rational(0)});
  return ClosedSetModel::make(n, pc);
}

ClosedSetModel fixture_grid(int n, const Rational& spacing) {
  IntegerGrid g;
  g.origin.assign(n, Rational(0));
  g.origin_t = 0;
  g.spacing = spacing;
  g.time_spacing = spacing;
  g.past_only = true;
  return ClosedSetModel::make(n, g);
}

ClosedSetModel fixture_hyperplane(int n) { return ClosedSetModel::make(n, SpatialHyperplane{0, Rational(0)}); }

ClosedSetModel fixture_halfspace(int n) { return ClosedSetModel::make(n, HalfSpaceTime{Rational(0), true}); }

ClosedSetModel fixture_cantor_time(int depth_cap) {
  IFSFractal f;
  f.time_axis = true;
  f.depth_cap = depth_cap;
  f.seed.lo = {Rational(0)};
  f.seed.hi = {Rational(1)};
  f.maps.push_back({Rational(1, 3), Rational(0), {Rational(0)}, Rational(0)});
  f.maps.push_back({Rational(1, 3), Rational(0), {Rational(2, 3)}, Rational(0)});
  return ClosedSetModel::make(1, f);
}

}  // namespace parporo
