#include "parporo/improvement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_set>

namespace parporo {

TowerPartition tower_partition(const ClosedSetModel& E, const DyadicAddress& root, const std::vector<Rational>& deltas,
                               const Rational& theta, int depth_cap) {
  if (deltas.empty()) throw std::invalid_argument("tower_partition: empty delta sequence");
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (deltas[i] <= 0 || deltas[i] >= 1) throw std::invalid_argument("tower_partition: delta outside (0,1)");
    if (i > 0 && deltas[i] >= deltas[i - 1])
      throw std::invalid_argument("tower_partition: delta sequence must be strictly decreasing");
  }

  TowerPartition out;
  out.deltas = deltas;
  out.theta = theta;
  out.depth_cap = depth_cap;

  FreenessViews views(E, *root.root);
  const Rational start_measure = union_measure({root});

  std::unordered_set<DyadicAddress, AddressHash> previous, seen_all;
  std::vector<DyadicAddress> accumulated;
  Rational layered = 0;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    CollectionReport F = admissible_collection(views, root, deltas[i], theta, depth_cap);
    out.cap_hit = out.cap_hit || F.depth_cap_hit || F.budget_hit;

    std::unordered_set<DyadicAddress, AddressHash> current(F.rectangles.begin(), F.rectangles.end());
    std::vector<DyadicAddress> layer;
    for (const auto& a : F.rectangles)
      if (!previous.count(a)) layer.push_back(a);
    // F must grow as δ shrinks; anything lost breaks the union identity.
    for (const auto& a : previous)
      if (!current.count(a)) out.union_ok = false;

    std::sort(layer.begin(), layer.end(), &address_less);
    for (const auto& a : layer) {
      if (!seen_all.insert(a).second) out.disjoint_ok = false;
      accumulated.push_back(a);
    }

    std::vector<DyadicAddress> acc_sorted = accumulated;
    std::sort(acc_sorted.begin(), acc_sorted.end(), &address_less);
    if (acc_sorted != F.rectangles) out.union_ok = false;

    Rational lm = union_measure(layer) / start_measure;
    out.coverage.push_back(F.covered_fraction);
    if (i > 0 && lm > 1 - out.coverage[i - 1]) out.bound_ok = false;
    out.layer_measure.push_back(lm);
    layered += lm;
    out.C.push_back(std::move(layer));
    previous = std::move(current);
  }
  if (!pairwise_disjoint(accumulated)) out.disjoint_ok = false;
  for (std::size_t i = 0; i < accumulated.size() && out.disjoint_ok; ++i)
    for (std::size_t j = i + 1; j < accumulated.size(); ++j)
      if (bodies_intersect(accumulated[i], accumulated[j])) {
        out.disjoint_ok = false;
        break;
      }
  out.residual = 1 - layered;
  return out;
}

AlphaFit alpha_fit(const std::vector<std::pair<double, double>>& points, double floor) {
  if (points.size() < 3) throw std::invalid_argument("alpha_fit: need at least 3 points");
  AlphaFit fit;
  std::vector<double> xs, ys;
  for (const auto& [delta, omc] : points) {
    if (!(delta > 0 && delta < 1)) throw std::invalid_argument("alpha_fit: delta outside (0,1)");
    if (!(omc >= 0 && omc <= 1)) throw std::invalid_argument("alpha_fit: 1-c outside [0,1]");
    double v = omc;
    if (v < floor) {
      v = floor;
      ++fit.floored;
    }
    xs.push_back(std::log(delta));
    ys.push_back(std::log(v));
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx <= 1e-300) throw std::invalid_argument("alpha_fit: degenerate input (all deltas equal)");
  fit.alpha_hat = sxy / sxx;
  fit.K_hat = std::exp(my - fit.alpha_hat * mx);
  double ss_res = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double r = ys[i] - (my + fit.alpha_hat * (xs[i] - mx));
    ss_res += r * r;
  }
  // A perfectly flat curve is fitted exactly by the zero slope.
  fit.r_squared = syy > 1e-300 ? 1.0 - ss_res / syy : 1.0;
  if (std::fabs(fit.alpha_hat) < 1e-12) fit.alpha_hat = 0;

  std::vector<double> ds;
  for (const auto& pt : points) ds.push_back(pt.first);
  std::sort(ds.begin(), ds.end(), std::greater<>());
  fit.eta_hat = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < ds.size(); ++i)
    if (ds[i + 1] < ds[i]) fit.eta_hat = std::min(fit.eta_hat, ds[i + 1] / ds[i]);
  fit.improving = fit.alpha_hat > 0;
  return fit;
}

std::vector<Rational> dyadic_delta_grid(int count) {
  std::vector<Rational> out;
  Rational d(1, 2);
  for (int i = 0; i < count; ++i) {
    out.push_back(d);
    d /= 2;
  }
  return out;
}

namespace {

CrossTheta compare_curves(const PorosityReport& a, const PorosityReport& b, double tolerance) {
  CrossTheta ct;
  ct.theta_a = a.theta;
  ct.theta_b = b.theta;
  const int n = static_cast<int>(std::min(a.curve.size(), b.curve.size()));
  const int max_shift = std::max(0, n / 3);
  ct.discrepancy = std::numeric_limits<double>::infinity();
  // Grid points are successive halvings, so a shift j pairs δ_i with 2^{-j} δ_i.
  for (int mag = 0; mag <= max_shift; ++mag) {
    for (int sign : {1, -1}) {
      int j = sign * mag;
      if (mag == 0 && sign < 0) continue;
      double worst = 0;
      int used = 0;
      for (int i = 0; i < n; ++i) {
        int k = i + j;
        if (k < 0 || k >= n) continue;
        double diff = std::fabs(a.curve[i].empirical_c.get_d() - b.curve[k].empirical_c.get_d());
        worst = std::max(worst, diff);
        ++used;
      }
      if (used == 0) continue;
      if (worst < ct.discrepancy - 1e-15) {
        ct.discrepancy = worst;
        ct.best_shift = -j;
      }
    }
  }
  ct.agree = ct.discrepancy <= tolerance;
  return ct;
}

Rational truncate_dyadic(double v, int denom_bits = 20) {
  const double scale = std::ldexp(1.0, denom_bits);
  BigInt num(std::floor(v * scale));
  Rational r(num, BigInt(1) << denom_bits);
  r.canonicalize();
  return r;
}

}  // namespace

HarnessReport characterization_harness(const ClosedSetModel& E, const Geometry& geom, const HarnessConfig& cfg) {
  HarnessReport rep;
  const StoppingParams params = cfg.params ? *cfg.params : default_parameters(geom);
  rep.Phi = Rational(params.Phi);

  SamplerConfig sampler = cfg.sampler ? *cfg.sampler : default_sampler(geom.n());
  sampler.samples = cfg.samples;
  sampler.seed = cfg.seed;
  ScanOptions opts;
  opts.depth_cap = cfg.depth_cap;
  opts.threads = cfg.threads;
  const std::vector<Rational> deltas = dyadic_delta_grid(cfg.delta_exponents);

  auto inconclusive = [&](const std::string& stage) {
    rep.verdict = "inconclusive";
    rep.starved_stage = stage;
    return rep;
  };

  rep.scan = porosity_scan(E, geom, sampler, deltas, rep.Phi, opts);
  if (rep.scan.starved()) return inconclusive("porosity");

  // c(δ) is a step function of δ with jumps at lattice admission thresholds.
  // One point per plateau (its largest δ) keeps plateau lengths, which only
  // reflect the dyadic resolution, out of the regression.
  std::vector<std::pair<double, double>> all, steps;
  for (std::size_t i = 0; i < rep.scan.curve.size(); ++i) {
    const auto& pt = rep.scan.curve[i];
    std::pair<double, double> xy{pt.delta.get_d(), Rational(1 - pt.empirical_c).get_d()};
    all.push_back(xy);
    if (i == 0 || pt.empirical_c != rep.scan.curve[i - 1].empirical_c) steps.push_back(xy);
  }
  rep.fit_points = steps.size() >= 3 ? steps : all;
  rep.fit = alpha_fit(rep.fit_points);

  const Rational n_plus_p = Rational(geom.n()) + geom.p();
  Rational cap = Rational(9, 10) / n_plus_p;
  Rational half = truncate_dyadic(rep.fit.alpha_hat / 2);
  rep.beta_used = half < cap ? half : cap;
  if (rep.beta_used <= 0) {
    rep.verdict = "inconsistent";
    rep.reasons.push_back("alpha_hat <= 0: no integrable weight exponent");
  } else {
    SamplerConfig a1s = sampler;
    a1s.samples = cfg.a1_samples;
    WeightSpec ws = make_weight_spec(geom, rep.beta_used);
    rep.a1 = a1_scan(E, geom, a1s, Rational(2), ws, cfg.a1_tol, cfg.threads);
    if (rep.a1->one_sided_samples > 0 || rep.a1->unconverged_samples > 0) return inconclusive("a1");
  }

  rep.cross_scan = porosity_scan(E, geom, sampler, deltas, cfg.theta_cross, opts);
  if (rep.cross_scan->starved()) return inconclusive("cross_theta");
  rep.cross = compare_curves(rep.scan, *rep.cross_scan, cfg.cross_tolerance);

  if (!rep.fit.improving) rep.reasons.push_back("alpha_hat not positive");
  if (rep.fit.r_squared < 0.9) rep.reasons.push_back("log-log fit r2 below 0.9");
  if (rep.a1 && (rep.a1->unbounded_samples > 0 || !std::isfinite(rep.a1->sup_ratio.hi)))
    rep.reasons.push_back("A1 ratio unbounded");
  if (!rep.cross.agree) rep.reasons.push_back("porosity curves disagree across theta");
  if (rep.verdict.empty()) rep.verdict = rep.reasons.empty() ? "consistent" : "inconsistent";
  return rep;
}

}  // namespace parporo
