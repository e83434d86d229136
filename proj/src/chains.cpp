#include "parporo/chains.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "parporo/parallel.hpp"

namespace parporo {

namespace {

Rational abs_q(const Rational& q) { return q < 0 ? Rational(-q) : q; }

BigInt big(std::int64_t v) { return BigInt(std::to_string(v), 10); }

BigInt ceil_ld(long double v) {
  if (!std::isfinite(v) || v > 1e30L) throw std::overflow_error("chain parameter is too large to realize");
  return ceil_big(rational_from_double(static_cast<double>(v)));
}

std::int64_t floor_div64(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

Interval eps_max_value(const Rational& c0, int n) {
  if (c0 <= 0 || c0 >= 1) throw std::invalid_argument("c0 must lie in (0, 1)");
  Interval base = rational_bracket(Rational(1 - c0 / 2));
  Interval root = n == 1 ? sqrt(base) : pow_nonneg(base, 1.0 / (n + 1));
  return Interval(1.0) - root;
}

std::pair<std::vector<Rational>, Rational> ChainPlan::q_corner(const BigInt& i) const {
  const int n = root->n();
  std::vector<Rational> x(n);
  for (int k = 0; k < n; ++k) x[k] = Rational(big(q0.spatial[k])) * Lx;
  Rational t = Rational(big(q0.temporal)) * Lt;
  const Rational step = input.theta * Lt;
  t += Rational(i) * step;
  for (const auto& run : corrections) {
    if (i <= run.first) break;
    BigInt used = i - run.first;
    if (used > run.count) used = run.count;
    for (int k = 0; k < n; ++k) x[k] += Rational(used) * run.xi[k];
    t += Rational(used) * run.tau;
  }
  return {x, t};
}

ChainPlan doubling_chain(const Geometry& geom, const RootSpec& spec, const std::array<std::int64_t, kMaxDim>& p_spatial,
                         std::int64_t p_temporal, const ChainInput& in) {
  if (!(in.theta1 > 1) || in.theta1 > in.theta2) throw std::invalid_argument("need 1 < theta1 <= theta2");
  if (in.psi < in.theta1 || in.psi > in.theta2) throw std::invalid_argument("psi must lie in [theta1, theta2]");
  if (!(in.theta > 1)) throw std::invalid_argument("the porosity lag theta must exceed 1");
  const int n = geom.n(), d = geom.d();
  const long double p = geom.p_double();
  const long double dp = d * p;

  ChainPlan plan;
  plan.input = in;
  plan.eps_max = eps_max_value(in.c0, n);
  const long double eps = static_cast<long double>(plan.eps_max.mid());
  const long double theta = to_double(in.theta);
  plan.C1 = std::ldexp(1.0L, d) / eps * std::pow(4.0L * theta / to_double(in.theta1 - 1), 1.0L / p);
  BigInt a = ceil_ld(std::pow(plan.C1, p / (p - 1))) + 1;
  BigInt b = ceil_ld(theta / eps);
  plan.N2 = a > b ? a : b;

  const long double X = 2.0L * (to_double(Rational(plan.N2)) + 1.0L) * theta / to_double(in.theta1 - 1);
  plan.m = std::max(0, static_cast<int>(std::ceil(std::log2(X) / dp)) - 1);
  if (d * (plan.m + 1) > 60) throw std::overflow_error("chain needs a lattice deeper than 64-bit indices allow");
  plan.root = Root::create(geom, spec, plan.m + 1);
  const Root& R = *plan.root;
  const int lev = plan.m + 1;

  plan.P.root = &R;
  plan.P.level = 1;
  plan.P.spatial = p_spatial;
  plan.P.temporal = p_temporal;
  for (int k = 0; k < n; ++k)
    if (p_spatial[k] < 0 || p_spatial[k] >= R.spatial_count(1)) throw std::invalid_argument("P index out of range");
  if (p_temporal < 0 || p_temporal >= R.K(1)) throw std::invalid_argument("P temporal index out of range");

  plan.q0.root = &R;
  plan.q0.level = lev;
  if (in.q0_spatial) {
    plan.q0.spatial = *in.q0_spatial;
  } else {
    for (int k = 0; k < n; ++k) plan.q0.spatial[k] = p_spatial[k] << (d * plan.m);
  }
  plan.q0.temporal = in.q0_temporal ? *in.q0_temporal : p_temporal * R.slab_ratio(1, lev);
  if (!is_ancestor_or_self(plan.P, plan.q0)) throw std::invalid_argument("Q0 must be a level-(m+1) cell inside P");

  plan.target.root = &R;
  plan.target.level = lev;
  for (int k = 0; k < n; ++k)
    plan.target.spatial[k] = in.target_spatial ? (*in.target_spatial)[k] : R.spatial_count(lev) - 1;
  plan.target.temporal = in.target_temporal ? *in.target_temporal : R.K(lev) - 1;
  for (int k = 0; k < n; ++k)
    if (plan.target.spatial[k] < 0 || plan.target.spatial[k] >= R.spatial_count(lev))
      throw std::invalid_argument("target index out of range");
  if (plan.target.temporal < 0 || plan.target.temporal >= R.K(lev))
    throw std::invalid_argument("target temporal index out of range");

  plan.Lx = Rational(BigInt(1), pow2_big(static_cast<unsigned>(d * lev)));
  plan.Lt = Rational(BigInt(1), big(R.K(lev)));
  plan.y.resize(n);
  for (int k = 0; k < n; ++k) plan.y[k] = Rational(big(plan.target.spatial[k] - plan.q0.spatial[k])) * plan.Lx;
  plan.s = in.psi + Rational(big(plan.target.temporal - plan.q0.temporal)) * plan.Lt;
  const Rational step = in.theta * plan.Lt;
  plan.N1 = floor_big(plan.s / step) - 1;

  // N3 = max{ceil(2^{(m+1)dp+1} (θ2+1)/θ) - 1, N2 + 1}
  Rational T = pow_int(geom.two_dp(), static_cast<unsigned>(lev)) * 2;
  BigInt n3a = ceil_big(T * (in.theta2 + 1) / in.theta) - 1;
  plan.N3 = n3a > plan.N2 + 1 ? n3a : BigInt(plan.N2 + 1);

  std::ostringstream why;
  plan.order_ok = plan.N2 <= plan.N1 && plan.N1 <= plan.N3;
  if (!plan.order_ok) why << "N2 <= N1 <= N3 fails; ";

  if (plan.N1 >= 1 && plan.N2 >= 1) {
    BigInt head = plan.N2 < plan.N1 ? plan.N2 : plan.N1;
    CorrectionRun r1;
    r1.first = 0;
    r1.count = head;
    for (int k = 0; k < n; ++k) r1.xi.push_back(plan.y[k] / Rational(plan.N2));
    r1.tau = plan.s / Rational(plan.N2) - Rational(plan.N1 + 1) * step / Rational(plan.N2);
    plan.corrections.push_back(r1);
    if (plan.N1 > head) {
      CorrectionRun r2;
      r2.first = head;
      r2.count = plan.N1 - head;
      r2.xi.assign(n, Rational(0));
      r2.tau = 0;
      plan.corrections.push_back(r2);
    }
  } else {
    why << "N1 < 1; ";
  }

  const Rational eps_lo = rational_from_double(plan.eps_max.lo);
  const Rational overlap_bar = 1 - in.c0 / 2;
  plan.boundaries_ok = !plan.corrections.empty();
  plan.overlap_ok = !plan.corrections.empty();
  plan.min_overlap = 1;
  for (const auto& run : plan.corrections) {
    Rational frac = 1 - run.tau / plan.Lt;
    for (int k = 0; k < n; ++k) {
      Rational rx = abs_q(run.xi[k]) / plan.Lx;
      if (!(rx < eps_lo)) plan.boundaries_ok = false;
      frac *= 1 - rx;
    }
    Rational rt = run.tau / plan.Lt;
    if (rt < 0 || !(rt < eps_lo)) plan.boundaries_ok = false;
    if (frac < plan.min_overlap) plan.min_overlap = frac;
    if (!(frac > overlap_bar)) plan.overlap_ok = false;
  }
  if (!plan.boundaries_ok) why << "correction boundary fails; ";
  if (!plan.overlap_ok) why << "overlap fraction too small; ";

  // Q_{N1}^θ must coincide with the target cell translated by ψ.
  if (plan.N1 >= 0) {
    auto [x, t] = plan.q_corner(plan.N1);
    t += step;
    bool ok = t == Rational(big(plan.target.temporal)) * plan.Lt + in.psi;
    for (int k = 0; k < n; ++k) ok = ok && x[k] == Rational(big(plan.target.spatial[k])) * plan.Lx;
    plan.alignment_ok = ok;
  }
  if (!plan.alignment_ok) why << "final alignment fails; ";
  plan.failure = why.str();
  return plan;
}

// ---------------------------------------------------------------------------

ThetaGrid make_theta_grid(const StoppingParams& params, bool midpoints) {
  ThetaGrid g;
  const std::int64_t lo = params.phi - params.theta0, hi = params.Phi - params.theta0;
  if (lo > hi) throw std::invalid_argument("empty theta search range");
  for (std::int64_t v = lo; v <= hi; ++v) {
    g.values.emplace_back(big(v));
    if (midpoints && v < hi) g.values.push_back(Rational(big(2 * v + 1), BigInt(2)));
  }
  return g;
}

std::size_t StoppingContext::HoleKeyHash::operator()(const HoleKey& k) const noexcept {
  std::size_t h = AddressHash{}(k.a);
  h ^= std::hash<std::string>{}(k.theta.get_str()) + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
  return h;
}

StoppingContext::StoppingContext(const ClosedSetModel& E, const Root& root, Rational Lambda, StoppingParams params,
                                 int depth_cap, ThetaGrid grid)
    : views_(E, root),
      root_(root),
      Lambda_(std::move(Lambda)),
      params_(params),
      depth_cap_(depth_cap),
      grid_(std::move(grid)) {
  if (Lambda_ <= 0) throw std::invalid_argument("Lambda must be positive");
  if (depth_cap_ > root.depth()) throw std::out_of_range("depth cap exceeds the lattice depth");
  if (grid_.values.empty()) throw std::invalid_argument("theta grid is empty");
}

const HoleResult& StoppingContext::hole(const DyadicAddress& cell, const Rational& theta) {
  HoleKey key{cell, theta};
  auto it = holes_.find(key);
  if (it != holes_.end()) return it->second;
  const int rel = depth_cap_ - cell.level;
  HoleResult r;
  if (rel >= 0) r = translated_hole(views_, cell, theta, rel);
  else r.cap_hit = true;
  return holes_.emplace(key, std::move(r)).first->second;
}

const StoppingOutcome& StoppingContext::tau(const DyadicAddress& P) {
  auto it = taus_.find(P);
  if (it != taus_.end()) return it->second;
  StoppingOutcome out;
  for (int k = 1; k <= P.level && !out.tau; ++k) {
    DyadicAddress Q = forward_parent_iter(P, k, params_.theta0);
    std::optional<Rational> best;
    Rational best_theta;
    for (const auto& th : grid_.values) {
      const HoleResult& h = hole(Q, th);
      if (!h.address && h.cap_hit) out.cap_limited = true;
      if (!best || h.measure > *best) {
        best = h.measure;
        best_theta = th;
      }
    }
    if (best && *best >= Lambda_) {
      out.tau = k;
      out.witness_theta = best_theta;
      out.witness_measure = *best;
    }
  }
  return taus_.emplace(P, std::move(out)).first->second;
}

StoppingOutcome stopping_time(const ClosedSetModel& E, const DyadicAddress& P, const Rational& Lambda,
                              const StoppingParams& params, int depth_cap, const ThetaGrid& grid) {
  if (P.level < 1) throw std::invalid_argument("the stopping time needs a cell at level >= 1");
  StoppingContext ctx(E, *P.root, Lambda, params, depth_cap, grid);
  return ctx.tau(P);
}

StoppingPartition stopping_partition(const ClosedSetModel& E, const Root& root, const std::vector<DyadicAddress>& A,
                                     const Rational& Lambda, const StoppingParams& params, int depth_cap,
                                     const ThetaGrid& grid, int threads) {
  StoppingPartition part;
  part.Lambda = Lambda;
  part.params = params;
  part.depth_cap = depth_cap;
  part.base = A;
  std::sort(part.base.begin(), part.base.end(), address_less);
  part.base.erase(std::unique(part.base.begin(), part.base.end()), part.base.end());
  for (const auto& P : part.base) {
    if (P.root != &root) throw std::invalid_argument("base cell belongs to another lattice");
    if (P.level < 1) throw std::invalid_argument("base cells must lie strictly below the root");
  }

  struct ChunkOut {
    std::vector<std::pair<int, DyadicAddress>> members;  // (k, cell)
    std::vector<std::pair<DyadicAddress, StoppingOutcome>> taus;
    std::vector<std::string> law;
    bool cap_limited = false;
  };
  const int workers = resolve_threads(threads);
  const std::size_t chunks = std::min<std::size_t>(part.base.size(), static_cast<std::size_t>(workers) * 4);
  std::vector<ChunkOut> outs(chunks);
  parallel_for(chunks, workers, [&](std::size_t c) {
    StoppingContext ctx(E, root, Lambda, params, depth_cap, grid);
    ChunkOut& o = outs[c];
    for (std::size_t i = c; i < part.base.size(); i += chunks) {
      const DyadicAddress& P = part.base[i];
      StoppingOutcome t = ctx.tau(P);
      o.cap_limited = o.cap_limited || t.cap_limited;
      o.taus.emplace_back(P, t);
      if (!t.tau) continue;
      for (int j = 0; j < *t.tau; ++j) {
        DyadicAddress Q = forward_parent_iter(P, j, params.theta0);
        const StoppingOutcome& tq = ctx.tau(Q);
        if (!tq.tau || *tq.tau != *t.tau - j) {
          o.law.push_back(address_string(P) + " step " + std::to_string(j));
          if (!tq.tau) continue;
        }
        o.members.emplace_back(*tq.tau, Q);
      }
    }
  });

  std::vector<std::set<DyadicAddress, decltype(&address_less)>> S;
  for (auto& o : outs) {
    part.cap_limited = part.cap_limited || o.cap_limited;
    for (auto& [P, t] : o.taus) {
      if (!t.tau) part.untermin.push_back(P);
      part.base_tau.emplace(P, t);
    }
    for (auto& [k, Q] : o.members) {
      while (static_cast<int>(S.size()) < k) S.emplace_back(&address_less);
      S[k - 1].insert(Q);
    }
    if (!o.law.empty() && part.index_law_ok) {
      part.index_law_ok = false;
      part.index_law_violation = o.law.front();
    }
  }
  std::sort(part.untermin.begin(), part.untermin.end(), address_less);
  for (auto& s : S) {
    part.S.emplace_back(s.begin(), s.end());
    part.union_measure.push_back(union_measure(part.S.back()));
  }
  return part;
}

CheckResult verify_nesting(const StoppingPartition& part) {
  CheckResult r;
  for (std::size_t k = 1; k < part.S.size(); ++k) {
    std::unordered_set<DyadicAddress, AddressHash> prev(part.S[k - 1].begin(), part.S[k - 1].end());
    for (const auto& Q : part.S[k]) {
      DyadicAddress up = forward_parent(Q, part.params);
      if (!prev.count(up)) {
        r.ok = false;
        r.detail = "forward parent of " + address_string(Q) + " (S_" + std::to_string(k + 1) + ") is not in S_" +
                   std::to_string(k);
        return r;
      }
    }
  }
  return r;
}

CheckResult verify_disjoint_from_F(const StoppingPartition& part, const CollectionReport& F) {
  CheckResult r;
  std::unordered_set<DyadicAddress, AddressHash> fset(F.rectangles.begin(), F.rectangles.end());
  std::unordered_set<DyadicAddress, AddressHash> anc;
  for (const auto& f : F.rectangles)
    for (int lv = f.level - 1; lv >= 0; --lv)
      if (!anc.insert(ancestor_at(f, lv)).second) break;
  for (std::size_t k = 0; k < part.S.size(); ++k) {
    for (const auto& Q : part.S[k]) {
      bool hit = fset.count(Q) || anc.count(Q);
      for (int lv = Q.level - 1; lv >= 0 && !hit; --lv) hit = fset.count(ancestor_at(Q, lv)) > 0;
      if (hit) {
        r.ok = false;
        r.detail = address_string(Q) + " in S_" + std::to_string(k + 1) + " meets an admissible rectangle";
        return r;
      }
    }
  }
  return r;
}

CheckResult verify_covers_base(const StoppingPartition& part) {
  CheckResult r;
  std::unordered_set<DyadicAddress, AddressHash> all;
  for (const auto& s : part.S) all.insert(s.begin(), s.end());
  for (const auto& P : part.base) {
    if (!all.count(P)) {
      r.ok = false;
      r.detail = address_string(P) + " lies in no S_k";
      return r;
    }
  }
  return r;
}

CheckResult verify_proper_subsets(const StoppingPartition& part) {
  CheckResult r;
  for (std::size_t k = 0; k < part.S.size(); ++k) {
    std::map<DyadicAddress, std::int64_t, decltype(&address_less)> groups(&address_less);
    for (const auto& Q : part.S[k])
      if (Q.level >= 1) ++groups[parent(Q)];
    for (const auto& [par, cnt] : groups) {
      if (cnt >= par.root->children_count(par.level)) {
        r.ok = false;
        r.detail = "all children of " + address_string(par) + " lie in S_" + std::to_string(k + 1);
        return r;
      }
    }
  }
  return r;
}

CheckResult verify_parent_images_disjoint(const StoppingPartition& part) {
  CheckResult r;
  for (std::size_t k = 1; k < part.S.size(); ++k) {
    std::vector<DyadicAddress> img;
    for (const auto& Q : part.S[k]) img.push_back(forward_parent(Q, part.params));
    std::sort(img.begin(), img.end(), address_less);
    img.erase(std::unique(img.begin(), img.end()), img.end());
    if (!pairwise_disjoint(img)) {
      r.ok = false;
      r.detail = "forward parents of S_" + std::to_string(k + 1) + " overlap";
      return r;
    }
  }
  return r;
}

DecayReport decay_check(const StoppingPartition& part, const Geometry& geom) {
  DecayReport rep;
  BigInt den = pow2_big(static_cast<unsigned>(geom.d() * geom.n())) * big(geom.k_ceil());
  rep.lambda = 1 - Rational(BigInt(1), den);
  if (part.union_measure.empty() || part.union_measure[0] == 0) return rep;
  const Rational& s1 = part.union_measure[0];
  Rational lam_pow = 1;
  for (std::size_t k = 1; k < part.union_measure.size(); ++k) {
    lam_pow *= rep.lambda;
    Rational ratio = part.union_measure[k] / s1;
    rep.ratios.push_back(static_cast<long double>(ratio.get_d()));
    if (ratio > lam_pow) rep.pass = false;
    long double root = std::pow(static_cast<long double>(ratio.get_d()), 1.0L / static_cast<long double>(k));
    rep.lambda_hat = std::max(rep.lambda_hat, root);
  }
  return rep;
}

SigmaEstimate measure_sigma(StoppingContext& ctx, const StoppingPartition& part) {
  SigmaEstimate est;
  for (const auto& Sk : part.S) {
    for (const auto& Q : Sk) {
      if (Q.level < 1) continue;
      const HoleResult& own = ctx.hole(Q, Rational(0));
      if (own.measure == 0) continue;
      DyadicAddress up = forward_parent(Q, ctx.params());
      for (const auto& th : ctx.grid().values) {
        const HoleResult& h = ctx.hole(up, th);
        if (h.measure == 0) continue;
        Rational ratio = own.measure / h.measure;
        ++est.pairs;
        if (!est.sigma || ratio < *est.sigma) est.sigma = ratio;
      }
    }
  }
  return est;
}

long double interim_prefactor(const Geometry& geom, const StoppingParams& params) {
  const long double T = geom.two_dp_ld();
  return 4.0L * static_cast<long double>(params.theta0) * T / (T - 1) + 2.0L;
}

InterimReport interim_bound(const Geometry& geom, const Rational& delta, long double sigma,
                            const StoppingParams& params, const StoppingPartition* part) {
  if (!(sigma > 0 && sigma < 1)) throw std::invalid_argument("sigma must lie in (0, 1)");
  if (delta <= 0 || delta > 1) throw std::invalid_argument("delta must lie in (0, 1]");
  InterimReport rep;
  rep.prefactor = interim_prefactor(geom, params);
  const long double dp = geom.d() * geom.p_double();
  rep.exponent = -dp * std::log(2.0L) / std::log(sigma);
  rep.psi_bound = rep.prefactor * std::pow(static_cast<long double>(delta.get_d()), rep.exponent);
  if (!part) return rep;
  for (std::size_t k = 0; k < part->S.size() && rep.contained; ++k) {
    for (const auto& Q : part->S[k]) {
      long double lo = temporal_lo_units(Q).get_d();
      long double hi = temporal_hi_units(Q).get_d();
      bool inside = lo >= 0 && hi <= 1 + rep.psi_bound;
      for (int ax = 0; ax < Q.root->n() && inside; ++ax)
        inside = Q.spatial[ax] >= 0 && Q.spatial[ax] < Q.root->spatial_count(Q.level);
      if (!inside) {
        rep.contained = false;
        rep.detail = address_string(Q) + " leaves the translated hull";
        break;
      }
    }
  }
  return rep;
}

ChainGapReport chain_gap_check(const Root& root, std::int64_t theta0, std::size_t max_cells) {
  ChainGapReport rep;
  const Geometry& g = root.geometry();
  const Rational T = g.two_dp();
  const Rational factor = 2 * Rational(big(theta0)) * T / (T - 1);
  const long double factor_ld = factor.get_d();
  for (int m = 1; m <= root.depth(); ++m) {
    const std::int64_t Km = root.K(m);
    if (static_cast<std::size_t>(Km) > max_cells)
      throw std::length_error("temporal enumeration at level " + std::to_string(m) + " exceeds the cell budget");
    for (std::int64_t tp = 0; tp < Km; ++tp) {
      std::int64_t t = tp;
      for (int j = 1; j <= m; ++j) {
        const int lv = m - j;
        t = floor_div64(t, root.k(lv)) + theta0;
        // gap * K_lv = |tp / r - t| with r = K_m / K_lv
        const std::int64_t r = root.slab_ratio(lv, m);
        const long double num = std::fabs(static_cast<long double>(tp) - static_cast<long double>(t) * r);
        long double ratio = num / static_cast<long double>(r) / factor_ld;
        bool violated = ratio >= 1.0L;
        if (std::fabs(ratio - 1.0L) < 1e-12L) {
          Rational exact_gap = abs_q(make_rational(big(tp), big(r)) - Rational(big(t)));
          violated = !(exact_gap < factor);
        }
        ++rep.checked;
        if (violated) ++rep.violations;
        rep.worst_ratio = std::max(rep.worst_ratio, ratio);
      }
    }
  }
  return rep;
}

}  // namespace parporo
