#include "parporo/porosity.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>
#include <unordered_set>

#include "parporo/parallel.hpp"

namespace parporo {

namespace {

void require_depth(const DyadicAddress& start, int depth_cap) {
  if (depth_cap < 0) throw std::invalid_argument("depth cap must be nonnegative");
  if (start.root == nullptr) throw std::invalid_argument("address without a lattice");
  if (start.level + depth_cap > start.root->depth())
    throw std::out_of_range("depth cap reaches below the lattice's precomputed depth (" +
                            std::to_string(start.root->depth()) + ")");
}

struct Flags {
  bool cap_hit = false, unknown = false, budget = false;
};

// Level-by-level walk below start. on_free(addr, rel) receives every maximal
// free cell; non-free cells at the cap are counted as cap hits.
template <class OnFree>
Flags walk_free(const LatticeFreeness& oracle, const DyadicAddress& start, int cap, std::size_t max_nodes,
                OnFree&& on_free) {
  require_depth(start, cap);
  Flags fl;
  std::vector<DyadicAddress> frontier{start}, next;
  std::size_t nodes = 0;
  for (int rel = 0; rel <= cap && !frontier.empty(); ++rel) {
    next.clear();
    for (const auto& a : frontier) {
      if (++nodes > max_nodes) {
        fl.budget = true;
        return fl;
      }
      Freeness f = oracle.query(a);
      if (f == Freeness::Empty) {
        on_free(a, rel);
        continue;
      }
      if (f == Freeness::Unknown) fl.unknown = true;
      if (rel == cap) {
        fl.cap_hit = true;
      } else {
        for_each_child(a, [&](const DyadicAddress& c) { next.push_back(c); });
      }
    }
    frontier.swap(next);
  }
  return fl;
}

Rational fraction_of(const DyadicAddress& a) { return a.root->cell_fraction(a.level); }

}  // namespace

const LatticeFreeness& FreenessViews::view(const Rational& shift) {
  auto it = views_.find(shift);
  if (it == views_.end()) it = views_.emplace(shift, std::make_unique<LatticeFreeness>(E_, root_, shift)).first;
  return *it->second;
}

HoleResult maximal_hole(const LatticeFreeness& oracle, const DyadicAddress& start, int depth_cap,
                        std::size_t max_nodes) {
  require_depth(start, depth_cap);
  HoleResult res;
  res.shift = oracle.shift();
  std::vector<DyadicAddress> frontier{start}, next;
  std::size_t nodes = 0;
  for (int rel = 0; rel <= depth_cap && !frontier.empty(); ++rel) {
    std::optional<DyadicAddress> best;
    next.clear();
    for (const auto& a : frontier) {
      if (++nodes > max_nodes) {
        res.budget_hit = true;
        return res;
      }
      Freeness f = oracle.query(a);
      if (f == Freeness::Empty) {
        if (!best || address_less(a, *best)) best = a;
        continue;
      }
      if (f == Freeness::Unknown) res.unknown_seen = true;
      if (!best && rel < depth_cap) for_each_child(a, [&](const DyadicAddress& c) { next.push_back(c); });
    }
    if (best) {
      res.address = best;
      res.measure = fraction_of(*best);
      res.side = best->root->side_at(best->level);
      return res;
    }
    if (rel == depth_cap) res.cap_hit = true;
    frontier.swap(next);
  }
  return res;
}

HoleResult maximal_hole(const ClosedSetModel& E, const DyadicAddress& start, int depth_cap) {
  LatticeFreeness oracle(E, *start.root);
  return maximal_hole(oracle, start, depth_cap);
}

HoleResult translated_hole(FreenessViews& views, const DyadicAddress& start, const Rational& theta, int depth_cap,
                           std::size_t max_nodes) {
  if (is_integer(theta)) {
    DyadicAddress moved = translate_address(start, floor_i64(theta));
    return maximal_hole(views.view(Rational(0)), moved, depth_cap, max_nodes);
  }
  Rational shift = theta / Rational(BigInt(static_cast<long>(start.root->K(start.level))));
  return maximal_hole(views.view(shift), start, depth_cap, max_nodes);
}

static void finish(CollectionReport& rep, const DyadicAddress& start) {
  std::sort(rep.rectangles.begin(), rep.rectangles.end(), address_less);
  rep.total_measure = 0;
  for (const auto& a : rep.rectangles) rep.total_measure += fraction_of(a);
  rep.covered_fraction = rep.total_measure / fraction_of(start);
}

CollectionReport free_collection(const LatticeFreeness& oracle, const DyadicAddress& start, int depth_cap,
                                 std::size_t max_nodes) {
  CollectionReport rep;
  rep.shift = oracle.shift();
  Flags fl = walk_free(oracle, start, depth_cap, max_nodes,
                       [&](const DyadicAddress& a, int) { rep.rectangles.push_back(a); });
  rep.depth_cap_hit = fl.cap_hit;
  rep.unknown_seen = fl.unknown;
  rep.budget_hit = fl.budget;
  finish(rep, start);
  return rep;
}

CollectionReport free_collection(const ClosedSetModel& E, const DyadicAddress& start, int depth_cap) {
  LatticeFreeness oracle(E, *start.root);
  return free_collection(oracle, start, depth_cap);
}

CollectionReport admissible_collection(FreenessViews& views, const DyadicAddress& start, const Rational& delta,
                                       const Rational& theta, int depth_cap, std::size_t max_nodes) {
  if (delta <= 0 || delta > 1) throw std::invalid_argument("delta must lie in (0, 1]");
  HoleResult M = translated_hole(views, start, theta, depth_cap, max_nodes);
  CollectionReport rep = free_collection(views.view(Rational(0)), start, depth_cap, max_nodes);
  const Rational bar = delta * M.measure;
  std::erase_if(rep.rectangles, [&](const DyadicAddress& a) { return fraction_of(a) < bar; });
  rep.depth_cap_hit = rep.depth_cap_hit || M.cap_hit;
  rep.unknown_seen = rep.unknown_seen || M.unknown_seen;
  rep.budget_hit = rep.budget_hit || M.budget_hit;
  rep.reference_hole = M.measure;
  finish(rep, start);
  return rep;
}

CollectionReport admissible_collection(const ClosedSetModel& E, const DyadicAddress& start, const Rational& delta,
                                       const Rational& theta, int depth_cap) {
  FreenessViews views(E, *start.root);
  return admissible_collection(views, start, delta, theta, depth_cap);
}

CollectionReport complementary_of(const CollectionReport& F, const DyadicAddress& start, int depth_cap) {
  require_depth(start, depth_cap);
  CollectionReport G;
  G.shift = F.shift;
  G.depth_cap_hit = F.depth_cap_hit;
  G.unknown_seen = F.unknown_seen;
  G.budget_hit = F.budget_hit;
  std::unordered_set<DyadicAddress, AddressHash> members(F.rectangles.begin(), F.rectangles.end());
  if (members.count(start)) {
    finish(G, start);
    return G;
  }
  // Strict ancestors (down to start) of F members: exactly the cells that
  // meet ∪F without lying inside it.
  std::unordered_set<DyadicAddress, AddressHash> meets;
  for (const auto& a : F.rectangles) {
    if (!is_ancestor_or_self(start, a)) throw std::invalid_argument("collection member outside the start cell");
    for (int lv = a.level - 1; lv >= start.level; --lv) {
      if (!meets.insert(ancestor_at(a, lv)).second) break;
    }
  }
  for (const auto& m : meets) {
    for_each_child(m, [&](const DyadicAddress& c) {
      if (!members.count(c) && !meets.count(c)) G.rectangles.push_back(c);
    });
  }
  finish(G, start);
  return G;
}

CollectionReport complementary_collection(const ClosedSetModel& E, const DyadicAddress& start, const Rational& delta,
                                          const Rational& theta, int depth_cap) {
  return complementary_of(admissible_collection(E, start, delta, theta, depth_cap), start, depth_cap);
}

FreeProfile free_profile(const LatticeFreeness& oracle, const DyadicAddress& start, int depth_cap,
                         std::size_t max_nodes) {
  FreeProfile prof;
  prof.free_per_level.assign(static_cast<std::size_t>(depth_cap + 1), 0);
  Flags fl = walk_free(oracle, start, depth_cap, max_nodes,
                       [&](const DyadicAddress&, int rel) { ++prof.free_per_level[static_cast<std::size_t>(rel)]; });
  prof.cap_hit = fl.cap_hit;
  prof.unknown_seen = fl.unknown;
  prof.budget_hit = fl.budget;
  return prof;
}

Rational profile_coverage(const FreeProfile& prof, const DyadicAddress& start, const Rational& delta,
                          const Rational& reference_hole) {
  const Root& R = *start.root;
  const Rational bar = delta * reference_hole;
  Rational total = 0;
  for (std::size_t rel = 0; rel < prof.free_per_level.size(); ++rel) {
    Rational cell = R.cell_fraction(start.level + static_cast<int>(rel));
    if (cell < bar) break;  // cell measures shrink with depth
    total += cell * Rational(static_cast<long>(prof.free_per_level[rel]));
  }
  return total / R.cell_fraction(start.level);
}

Rational union_measure(const std::vector<DyadicAddress>& cells) {
  // Dyadic cells are nested or disjoint: drop those inside another member.
  std::unordered_set<DyadicAddress, AddressHash> all(cells.begin(), cells.end());
  Rational total = 0;
  for (const auto& a : all) {
    bool covered = false;
    for (int lv = a.level - 1; lv >= 0 && !covered; --lv) covered = all.count(ancestor_at(a, lv)) > 0;
    if (!covered) total += fraction_of(a);
  }
  return total;
}

bool pairwise_disjoint(const std::vector<DyadicAddress>& cells) {
  std::unordered_set<DyadicAddress, AddressHash> all;
  for (const auto& a : cells)
    if (!all.insert(a).second) return false;
  for (const auto& a : cells)
    for (int lv = a.level - 1; lv >= 0; --lv)
      if (all.count(ancestor_at(a, lv))) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Sampling

SamplerConfig default_sampler(int n) {
  SamplerConfig c;
  c.center_lo.assign(n, Rational(-1, 4));
  c.center_hi.assign(n, Rational(1, 4));
  c.tmid_lo = Rational(-1, 8);
  c.tmid_hi = Rational(1, 8);
  c.side_lo = 1;
  c.side_hi = 2;
  return c;
}

namespace {
constexpr int kGrainBits = 20;

Rational draw_between(std::uint64_t& state, const Rational& lo, const Rational& hi) {
  std::uint64_t u = splitmix64(state) >> (64 - kGrainBits);
  return lo + (hi - lo) * make_rational(BigInt(static_cast<unsigned long>(u)), pow2_big(kGrainBits));
}
}  // namespace

RootSpec draw_root(const Geometry& geom, const SamplerConfig& cfg, int index, int depth, int* redraws) {
  if (redraws) *redraws = 0;
  if (cfg.base && index == 0) return *cfg.base;
  const int n = geom.n();
  if (static_cast<int>(cfg.center_lo.size()) != n || static_cast<int>(cfg.center_hi.size()) != n)
    throw std::invalid_argument("sampler center ranges have the wrong dimension");
  if (cfg.gamma_lo < 0 || cfg.gamma_hi > Rational(1, 2) || cfg.gamma_lo > cfg.gamma_hi)
    throw std::invalid_argument("sampler gamma range must lie inside [0, 1/2]");
  if (cfg.side_lo <= 0 || cfg.side_lo > cfg.side_hi) throw std::invalid_argument("sampler side range is invalid");
  std::uint64_t state = cfg.seed ^ (0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(index) + 1));
  splitmix64(state);
  RootSpec spec;
  for (int k = 0; k < n; ++k) spec.center.push_back(draw_between(state, cfg.center_lo[k], cfg.center_hi[k]));
  spec.side = draw_between(state, cfg.side_lo, cfg.side_hi);
  Rational tmid = draw_between(state, cfg.tmid_lo, cfg.tmid_hi);
  for (int attempt = 0;; ++attempt) {
    spec.gamma0 = draw_between(state, cfg.gamma_lo, cfg.gamma_hi);
    try {
      gamma_sequence(geom, spec.gamma0, depth);
      break;
    } catch (const std::exception&) {
      if (redraws) ++*redraws;
      if (attempt >= 64) throw;
    }
  }
  spec.top_time = tmid + (1 + spec.gamma0) / 2 * geom.side_pow(spec.side);
  return spec;
}

PorosityReport porosity_scan(const ClosedSetModel& E, const Geometry& geom, const SamplerConfig& sampler,
                             const std::vector<Rational>& deltas, const Rational& theta, const ScanOptions& opts) {
  if (deltas.empty()) throw std::invalid_argument("porosity scan needs at least one delta");
  for (const auto& d : deltas)
    if (d <= 0 || d > 1) throw std::invalid_argument("delta must lie in (0, 1]");
  if (sampler.samples <= 0) throw std::invalid_argument("sample count must be positive");
  PorosityReport rep;
  rep.deltas = deltas;
  rep.theta = theta;
  rep.depth_cap = opts.depth_cap;
  rep.samples.resize(static_cast<std::size_t>(sampler.samples));

  parallel_for(rep.samples.size(), resolve_threads(opts.threads), [&](std::size_t i) {
    PorositySample& s = rep.samples[i];
    s.id = static_cast<int>(i);
    s.root = draw_root(geom, sampler, s.id, opts.depth_cap, &s.redraws);
    auto root = Root::create(geom, s.root, opts.depth_cap);
    FreenessViews views(E, *root);
    DyadicAddress start = root_address(*root);
    HoleResult M = translated_hole(views, start, theta, opts.depth_cap, opts.max_nodes);
    FreeProfile prof = free_profile(views.view(Rational(0)), start, opts.depth_cap, opts.max_nodes);
    s.reference_hole = M.measure;
    s.cap_hit = prof.cap_hit || M.cap_hit;
    s.unknown_seen = prof.unknown_seen || M.unknown_seen;
    s.budget_hit = prof.budget_hit || M.budget_hit;
    bool f_empty = std::all_of(prof.free_per_level.begin(), prof.free_per_level.end(),
                               [](std::int64_t c) { return c == 0; });
    s.starved = (f_empty && prof.cap_hit) || !M.address || s.budget_hit;
    for (const auto& d : deltas) s.covered.push_back(profile_coverage(prof, start, d, M.measure));
  });

  for (const auto& s : rep.samples) {
    if (s.cap_hit) ++rep.cap_hits;
    if (s.starved) ++rep.starved_samples;
  }
  for (std::size_t j = 0; j < deltas.size(); ++j) {
    PorosityPoint pt;
    pt.delta = deltas[j];
    pt.empirical_c = 1;
    for (const auto& s : rep.samples) {
      if (s.covered[j] < pt.empirical_c) {
        pt.empirical_c = s.covered[j];
        pt.witness = s.id;
      }
    }
    rep.curve.push_back(pt);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Sup-distance branch and bound

namespace {

struct BBCell {
  STBox box;
  double ub;
  std::uint64_t id;
};
struct BBOrder {
  bool operator()(const BBCell& a, const BBCell& b) const {
    if (a.ub != b.ub) return a.ub < b.ub;
    return a.id > b.id;
  }
};

double axis_width(const STBox& b, int axis, int n) { return axis < n ? b.hi[axis] - b.lo[axis] : b.thi - b.tlo; }

std::pair<STBox, STBox> split(const STBox& b, int axis, int n) {
  STBox l = b, r = b;
  if (axis < n) {
    double m = 0.5 * (b.lo[axis] + b.hi[axis]);
    l.hi[axis] = m;
    r.lo[axis] = m;
  } else {
    double m = 0.5 * (b.tlo + b.thi);
    l.thi = m;
    r.tlo = m;
  }
  return {l, r};
}

double corner_lower(const ClosedSetModel& E, const STBox& b, double p) {
  const int n = E.n();
  double best = 0;
  for (unsigned mask = 0; mask < (1u << (n + 1)); ++mask) {
    STPoint pt;
    for (int k = 0; k < n; ++k) pt.x[k] = (mask >> k) & 1u ? b.hi[k] : b.lo[k];
    pt.t = (mask >> n) & 1u ? b.thi : b.tlo;
    best = std::max(best, distance_to_set(E, pt, p).lo);
  }
  STPoint c;
  for (int k = 0; k < n; ++k) c.x[k] = 0.5 * (b.lo[k] + b.hi[k]);
  c.t = 0.5 * (b.tlo + b.thi);
  return std::max(best, distance_to_set(E, c, p).lo);
}

}  // namespace

SupBracket sup_distance_bracket(const ClosedSetModel& E, const STBox& box, double p, double abs_tol,
                                std::size_t max_cells) {
  const int n = E.n();
  SupBracket out;
  double lower = corner_lower(E, box, p);
  std::array<double, kMaxDim + 1> w0{};
  for (int a = 0; a <= n; ++a) w0[a] = axis_width(box, a, n);

  std::priority_queue<BBCell, std::vector<BBCell>, BBOrder> pq;
  std::uint64_t next_id = 0;
  pq.push({box, distance_range(E, box, p).hi, next_id++});
  out.cells = 1;
  while (true) {
    const BBCell top = pq.top();
    if (top.ub - lower <= abs_tol) {
      out.converged = true;
      break;
    }
    if (out.cells >= max_cells) break;
    pq.pop();
    int best_axis = -1;
    double best_score = 0, best_rel = 0;
    std::pair<STBox, STBox> best_kids;
    std::pair<double, double> best_ub;
    for (int a = 0; a <= n; ++a) {
      if (!(axis_width(top.box, a, n) > 0)) continue;
      auto kids = split(top.box, a, n);
      double u1 = distance_range(E, kids.first, p).hi, u2 = distance_range(E, kids.second, p).hi;
      double score = std::max(u1, u2);
      double rel = w0[a] > 0 ? axis_width(top.box, a, n) / w0[a] : 0;
      if (best_axis < 0 || score < best_score || (score == best_score && rel > best_rel)) {
        best_axis = a;
        best_score = score;
        best_rel = rel;
        best_kids = kids;
        best_ub = {u1, u2};
      }
    }
    if (best_axis < 0) {  // degenerate point box
      lower = std::max(lower, top.ub);
      pq.push(top);
      out.converged = true;
      break;
    }
    for (int side = 0; side < 2; ++side) {
      const STBox& kb = side == 0 ? best_kids.first : best_kids.second;
      double ub = side == 0 ? best_ub.first : best_ub.second;
      lower = std::max(lower, corner_lower(E, kb, p));
      if (ub >= lower) pq.push({kb, ub, next_id++});
      ++out.cells;
    }
    if (pq.empty()) {
      out.converged = true;
      break;
    }
  }
  double upper = pq.empty() ? lower : std::max(lower, pq.top().ub);
  out.value = Interval(lower, upper);
  return out;
}

SupBracket hole_esssup_bracket(const ClosedSetModel& E, const DyadicAddress& addr, double abs_tol,
                               std::size_t max_cells, const Rational& shift) {
  ParabolicRectangle r = realize(addr, shift);
  return sup_distance_bracket(E, to_box(r), addr.root->geometry().p_double(), abs_tol, max_cells);
}

}  // namespace parporo
