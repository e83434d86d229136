#include "parporo/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

#include "parporo/parallel.hpp"

namespace parporo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Interval exact(const Rational& q) { return rational_bracket(q); }

// ∫_a^b |x - c|^{-q} dx over an interval of the real line.
Interval power_integral_1d(const Rational& a, const Rational& b, const Rational& c, double q) {
  if (b <= a) return Interval(0.0);
  auto piece = [&](const Rational& near, const Rational& far) -> Interval {
    // ∫_near^far u^{-q} du, 0 <= near < far
    if (q == 1.0) {
      if (near == 0) return Interval(kInf);
      double l = std::log(exact(far).hi) - std::log(exact(near).lo);
      double u = std::log(exact(far).lo) - std::log(exact(near).hi);
      return Interval(std::max(0.0, next_down(u)), next_up(l));
    }
    if (near == 0 && q > 1.0) return Interval(kInf);
    const double e = 1.0 - q;
    Interval diff = pow_nonneg(exact(far), e) - pow_nonneg(exact(near), e);
    Interval v = diff / Interval(e);
    return Interval(std::max(0.0, v.lo), v.hi);
  };
  if (a >= c) return piece(a - c, b - c);
  if (b <= c) return piece(c - b, c - a);
  return piece(Rational(0), c - a) + piece(Rational(0), b - c);
}

bool closed_form_available(const ClosedSetModel& E) {
  return E.as<SpatialHyperplane>() != nullptr || E.as<HalfSpaceTime>() != nullptr;
}

IntegralResult closed_form_integral(const ClosedSetModel& E, const ParabolicRectangle& rect, const WeightSpec& spec) {
  IntegralResult r;
  r.converged = true;
  r.cells = 1;
  const int n = rect.n();
  if (const auto* hp = E.as<SpatialHyperplane>()) {
    Interval other = exact(rect.l_t());
    for (int k = 0; k < n; ++k)
      if (k != hp->axis) other = other * exact(rect.side);
    r.value = other * power_integral_1d(rect.x_lo(hp->axis), rect.x_hi(hp->axis), hp->offset, spec.q);
  } else {
    const auto* hs = E.as<HalfSpaceTime>();
    // dist = |t - t0|^{1/p} off the half-space, so w = |t - t0|^{-q/p}.
    const double s = spec.q / spec.p.get_d();
    Interval space(1.0);
    for (int k = 0; k < n; ++k) space = space * exact(rect.side);
    bool meets = hs->after ? rect.t_hi > hs->t0 : rect.t_lo < hs->t0;
    if (meets) {
      r.value = Interval(kInf);
    } else {
      r.value = space * power_integral_1d(rect.t_lo, rect.t_hi, hs->t0, s);
    }
  }
  r.divergent = !std::isfinite(r.value.hi);
  return r;
}

struct Cell {
  STBox box;
  Interval contrib;
  std::uint64_t id;
};
struct CellOrder {
  bool operator()(const Cell& a, const Cell& b) const {
    double wa = a.contrib.width(), wb = b.contrib.width();
    if (wa != wb) return wa < wb;
    return a.id > b.id;
  }
};

Interval box_volume(const STBox& b, int n) {
  Interval v = Interval(b.thi) - Interval(b.tlo);
  for (int k = 0; k < n; ++k) v = v * (Interval(b.hi[k]) - Interval(b.lo[k]));
  return Interval(std::max(0.0, v.lo), v.hi);
}

double parabolic_extent(const STBox& b, int n, double p, int* axis) {
  double best = std::pow(b.thi - b.tlo, 1.0 / p);
  *axis = n;
  for (int k = 0; k < n; ++k) {
    if (b.hi[k] - b.lo[k] > best) {
      best = b.hi[k] - b.lo[k];
      *axis = k;
    }
  }
  return best;
}

// Contribution bracket of one cell; `terminal` marks cells whose upper end is
// unavailable (singular and no closed form).
Interval cell_contribution(const ClosedSetModel& E, const STBox& b, double p, double q, bool* terminal) {
  const int n = E.n();
  *terminal = false;
  Interval vol = box_volume(b, n);
  Interval dr = distance_range(E, b, p);
  Interval lower = vol * pow_nonneg(Interval(dr.hi), -q);
  if (dr.lo > 0) return Interval(lower.lo, (vol * pow_nonneg(Interval(dr.lo), -q)).hi);

  if (E.as<PointCloud>() && q < n + p) {
    int ax;
    const double h = parabolic_extent(b, n, p, &ax);
    // Points within h of the cell are integrated over enclosing parabolic
    // balls; every other point is at distance >= T on the whole cell.
    Interval near_sum(0.0);
    double T = kInf;
    const Interval coef = Interval(std::ldexp(1.0, n + 1)) * Interval(n + p) / Interval(n + p - q);
    for (const auto& z : E.point_data()) {
      Interval g(0.0), f(0.0);
      for (int k = 0; k < n; ++k) {
        Interval a = z.x[k];
        Interval gap = max(Interval(0.0), max(a - Interval(b.hi[k]), Interval(b.lo[k]) - a));
        Interval far = max(a - Interval(b.lo[k]), Interval(b.hi[k]) - a);
        g = max(g, gap);
        f = max(f, far);
      }
      Interval tg = max(Interval(0.0), max(z.t - Interval(b.thi), Interval(b.tlo) - z.t));
      Interval tf = max(z.t - Interval(b.tlo), Interval(b.thi) - z.t);
      g = max(g, root_p(tg, p));
      f = max(f, root_p(tf, p));
      if (g.lo <= h) {
        near_sum += coef * pow_nonneg(Interval(f.hi), n + p - q);
      } else {
        T = std::min(T, g.lo);
      }
    }
    Interval upper = near_sum;
    if (std::isfinite(T)) upper += vol * pow_nonneg(Interval(T), -q);
    return Interval(lower.lo, upper.hi);
  }
  *terminal = true;
  return Interval(lower.lo, kInf);
}

IntegralResult adaptive_integral(const ClosedSetModel& E, const ParabolicRectangle& rect, const WeightSpec& spec,
                                 double tol, std::size_t max_cells) {
  const int n = E.n();
  const double p = spec.p.get_d(), q = spec.q;
  IntegralResult res;
  STBox root = to_box(rect);
  std::priority_queue<Cell, std::vector<Cell>, CellOrder> pq;
  std::vector<Cell> terminal;
  std::uint64_t next_id = 0;
  long double sum_lo = 0, sum_hi = 0;
  auto add = [&](const STBox& b) {
    bool term;
    Interval c = cell_contribution(E, b, p, q, &term);
    ++res.cells;
    if (term) {
      terminal.push_back({b, c, next_id++});
      sum_lo += c.lo;
      return;
    }
    sum_lo += c.lo;
    sum_hi += c.hi;
    pq.push({b, c, next_id++});
  };
  add(root);
  while (!pq.empty()) {
    if (sum_hi - sum_lo <= tol * sum_lo) {
      res.converged = terminal.empty();
      break;
    }
    if (res.cells + 2 > max_cells) break;
    Cell top = pq.top();
    pq.pop();
    sum_lo -= top.contrib.lo;
    sum_hi -= top.contrib.hi;
    int ax;
    parabolic_extent(top.box, n, p, &ax);
    STBox l = top.box, r = top.box;
    if (ax < n) {
      double m = 0.5 * (top.box.lo[ax] + top.box.hi[ax]);
      l.hi[ax] = m;
      r.lo[ax] = m;
    } else {
      double m = 0.5 * (top.box.tlo + top.box.thi);
      l.thi = m;
      r.tlo = m;
    }
    add(l);
    add(r);
  }
  if (pq.empty() && terminal.empty()) res.converged = true;

  // Final outward sum over the leaves, in a fixed order.
  std::vector<Cell> leaves;
  leaves.reserve(pq.size() + terminal.size());
  while (!pq.empty()) {
    leaves.push_back(pq.top());
    pq.pop();
  }
  for (auto& c : terminal) leaves.push_back(c);
  std::sort(leaves.begin(), leaves.end(), [](const Cell& a, const Cell& b) { return a.id < b.id; });
  Interval total(0.0);
  for (const auto& c : leaves) total += c.contrib;
  // The box is an outward rounding of the rectangle; rescale the lower end
  // so it stays below the integral over the rectangle itself.
  Interval boxvol = box_volume(root, n);
  Interval rectvol = exact(rect.measure());
  double shrink = std::min(1.0, (rectvol / Interval(boxvol.hi)).lo);
  total.lo = next_down(total.lo * shrink);
  res.one_sided = !terminal.empty();
  res.value = total;
  if (std::isfinite(total.hi) && total.hi - total.lo > tol * total.lo) res.converged = false;
  return res;
}

}  // namespace

WeightSpec make_weight_spec(const Geometry& geom, const Rational& beta) {
  if (beta <= 0) throw std::invalid_argument("beta must be positive");
  WeightSpec s;
  s.beta = beta;
  s.n = geom.n();
  s.p = geom.p();
  s.q = to_double(beta * (geom.n() + geom.p()));
  return s;
}

IntegralResult integrate_weight(const ClosedSetModel& E, const ParabolicRectangle& rect, const WeightSpec& spec,
                                double tol, std::size_t max_cells) {
  if (!(tol > 0)) throw std::invalid_argument("tolerance must be positive");
  if (E.n() != rect.n()) throw std::invalid_argument("set and rectangle dimensions differ");
  if (closed_form_available(E)) return closed_form_integral(E, rect, spec);
  return adaptive_integral(E, rect, spec, tol, max_cells);
}

EssinfResult essinf_weight(const ClosedSetModel& E, const ParabolicRectangle& rect, const WeightSpec& spec,
                           double tol) {
  EssinfResult r;
  double lx = rect.side.get_d();
  SupBracket b = sup_distance_bracket(E, to_box(rect), spec.p.get_d(), tol * lx);
  r.sup_distance = b.value;
  r.converged = b.converged;
  r.value = pow_nonneg(b.value, -spec.q);
  return r;
}

A1Result a1_ratio(const ClosedSetModel& E, const ParabolicRectangle& rect, const Rational& theta,
                  const WeightSpec& spec, double tol, std::size_t max_cells) {
  A1Result r;
  IntegralResult I = integrate_weight(E, rect, spec, tol, max_cells);
  r.integral = I.value;
  r.average = I.value / exact(rect.measure());
  EssinfResult ess = essinf_weight(E, translate(rect, theta), spec, tol);
  r.essinf = ess.value;
  r.sup_distance = ess.sup_distance;
  r.one_sided = I.one_sided;
  r.converged = I.converged && ess.converged;
  r.ratio = r.average / r.essinf;
  r.unbounded = !std::isfinite(r.ratio.hi);
  return r;
}

A1Result a1_ratio(const ClosedSetModel& E, const DyadicAddress& addr, const Rational& theta, const WeightSpec& spec,
                  double tol, std::size_t max_cells) {
  return a1_ratio(E, realize(addr), theta, spec, tol, max_cells);
}

A1ScanReport a1_scan(const ClosedSetModel& E, const Geometry& geom, const SamplerConfig& sampler,
                     const Rational& theta, const WeightSpec& spec, double tol, int threads, std::size_t max_cells) {
  if (sampler.samples <= 0) throw std::invalid_argument("sample count must be positive");
  A1ScanReport rep;
  rep.theta = theta;
  rep.spec = spec;
  rep.tol = tol;
  rep.samples.resize(static_cast<std::size_t>(sampler.samples));
  parallel_for(rep.samples.size(), resolve_threads(threads), [&](std::size_t i) {
    A1Sample& s = rep.samples[i];
    s.id = static_cast<int>(i);
    s.root = draw_root(geom, sampler, s.id, 1, &s.redraws);
    ParabolicRectangle rect = make_rectangle(geom, s.root.center, s.root.top_time, s.root.side, s.root.gamma0);
    s.result = a1_ratio(E, rect, theta, spec, tol, max_cells);
  });
  rep.sup_ratio = Interval(0.0);
  for (const auto& s : rep.samples) {
    const Interval& v = s.result.ratio;
    if (v.hi > rep.sup_ratio.hi) rep.witness = s.id;
    rep.sup_ratio = Interval(std::max(rep.sup_ratio.lo, v.lo), std::max(rep.sup_ratio.hi, v.hi));
    if (s.result.unbounded) ++rep.unbounded_samples;
    if (s.result.one_sided) ++rep.one_sided_samples;
    if (!s.result.converged) ++rep.unconverged_samples;
  }
  return rep;
}

Interval annular_constant(int n, double p, double alpha) {
  Interval s = Interval(alpha) * (Interval(n) + Interval(p));
  if (!(s.hi < 1)) throw std::invalid_argument("annular constant needs alpha * (n + p) < 1");
  Interval r = pow_nonneg(Interval(2.0), s.lo - 1.0);
  r = hull(r, pow_nonneg(Interval(2.0), s.hi - 1.0));
  Interval lead = hull(pow_nonneg(Interval(2.0), s.lo), pow_nonneg(Interval(2.0), s.hi));
  return lead * (Interval(n) + Interval(p)) * r / (Interval(1.0) - r);
}

}  // namespace parporo
