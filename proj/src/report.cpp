#include "parporo/report.hpp"

#include <sstream>

#include "parporo/sets.hpp"

namespace parporo {

json decimal_json(double v) { return to_decimal(v); }
json decimal_json(long double v) { return to_decimal(static_cast<double>(v)); }

json interval_json(const Interval& iv) { return json::array({to_decimal(iv.lo), to_decimal(iv.hi)}); }

json root_spec_json(const RootSpec& spec) {
  json c = json::array();
  for (const auto& v : spec.center) c.push_back(to_fraction(v));
  return {{"center", c},
          {"top_time", to_fraction(spec.top_time)},
          {"side", to_fraction(spec.side)},
          {"gamma0", to_fraction(spec.gamma0)}};
}

json address_json(const DyadicAddress& a) {
  json s = json::array();
  const int n = a.root ? a.root->n() : 1;
  for (int i = 0; i < n; ++i) s.push_back(a.spatial[i]);
  return {{"level", a.level}, {"spatial", s}, {"temporal", a.temporal}, {"label", address_string(a)}};
}

json params_json(const StoppingParams& s) { return {{"theta0", s.theta0}, {"phi", s.phi}, {"Phi", s.Phi}}; }

json to_json(const HoleResult& h) {
  json j = {{"measure", to_fraction(h.measure)},
            {"side", to_fraction(h.side)},
            {"shift", to_fraction(h.shift)},
            {"cap_hit", h.cap_hit},
            {"unknown_seen", h.unknown_seen},
            {"budget_hit", h.budget_hit}};
  j["address"] = h.address ? address_json(*h.address) : json(nullptr);
  return j;
}

json to_json(const CollectionReport& c) {
  json rects = json::array();
  for (const auto& a : c.rectangles) rects.push_back(address_json(a));
  json j = {{"rectangles", rects},
            {"count", c.rectangles.size()},
            {"shift", to_fraction(c.shift)},
            {"total_measure", to_fraction(c.total_measure)},
            {"covered_fraction", to_fraction(c.covered_fraction)},
            {"depth_cap_hit", c.depth_cap_hit},
            {"unknown_seen", c.unknown_seen},
            {"budget_hit", c.budget_hit}};
  j["reference_hole"] = c.reference_hole ? json(to_fraction(*c.reference_hole)) : json(nullptr);
  return j;
}

json to_json(const PorosityReport& r) {
  json deltas = json::array(), samples = json::array(), curve = json::array();
  for (const auto& d : r.deltas) deltas.push_back(to_fraction(d));
  for (const auto& s : r.samples) {
    json cov = json::array();
    for (const auto& c : s.covered) cov.push_back(to_fraction(c));
    samples.push_back({{"id", s.id},
                       {"root", root_spec_json(s.root)},
                       {"hole", to_fraction(s.reference_hole)},
                       {"covered", cov},
                       {"cap_hit", s.cap_hit},
                       {"unknown_seen", s.unknown_seen},
                       {"budget_hit", s.budget_hit},
                       {"starved", s.starved},
                       {"redraws", s.redraws}});
  }
  for (const auto& p : r.curve)
    curve.push_back({{"delta", to_fraction(p.delta)},
                     {"empirical_c", to_fraction(p.empirical_c)},
                     {"empirical_c_decimal", to_decimal(p.empirical_c.get_d())},
                     {"witness", p.witness}});
  return {{"deltas", deltas},         {"theta", to_fraction(r.theta)}, {"depth_cap", r.depth_cap},
          {"samples", samples},       {"curve", curve},                {"cap_hits", r.cap_hits},
          {"starved_samples", r.starved_samples}};
}

json to_json(const A1Result& r) {
  return {{"integral", interval_json(r.integral)},
          {"average", interval_json(r.average)},
          {"essinf", interval_json(r.essinf)},
          {"ratio", interval_json(r.ratio)},
          {"sup_distance", interval_json(r.sup_distance)},
          {"unbounded", r.unbounded},
          {"converged", r.converged},
          {"one_sided", r.one_sided}};
}

json to_json(const A1ScanReport& r) {
  json samples = json::array();
  for (const auto& s : r.samples)
    samples.push_back({{"id", s.id}, {"root", root_spec_json(s.root)}, {"result", to_json(s.result)},
                       {"redraws", s.redraws}});
  return {{"theta", to_fraction(r.theta)},
          {"beta", to_fraction(r.spec.beta)},
          {"q", to_decimal(r.spec.q)},
          {"tol", to_decimal(r.tol)},
          {"samples", samples},
          {"sup_ratio", interval_json(r.sup_ratio)},
          {"witness", r.witness},
          {"unbounded_samples", r.unbounded_samples},
          {"one_sided_samples", r.one_sided_samples},
          {"unconverged_samples", r.unconverged_samples}};
}

json to_json(const ChainPlan& plan) {
  json y = json::array(), runs = json::array();
  for (const auto& v : plan.y) y.push_back(to_fraction(v));
  for (const auto& run : plan.corrections) {
    json xi = json::array();
    for (const auto& v : run.xi) xi.push_back(to_fraction(v));
    runs.push_back({{"first", run.first.get_str()}, {"count", run.count.get_str()}, {"xi", xi},
                    {"tau", to_fraction(run.tau)}});
  }
  return {{"P", address_json(plan.P)},
          {"q0", address_json(plan.q0)},
          {"target", address_json(plan.target)},
          {"psi", to_fraction(plan.input.psi)},
          {"c0", to_fraction(plan.input.c0)},
          {"theta", to_fraction(plan.input.theta)},
          {"theta1", to_fraction(plan.input.theta1)},
          {"theta2", to_fraction(plan.input.theta2)},
          {"eps_max", interval_json(plan.eps_max)},
          {"C1", decimal_json(plan.C1)},
          {"m", plan.m},
          {"N1", plan.N1.get_str()},
          {"N2", plan.N2.get_str()},
          {"N3", plan.N3.get_str()},
          {"Lx", to_fraction(plan.Lx)},
          {"Lt", to_fraction(plan.Lt)},
          {"y", y},
          {"s", to_fraction(plan.s)},
          {"corrections", runs},
          {"min_overlap", to_fraction(plan.min_overlap)},
          {"boundaries_ok", plan.boundaries_ok},
          {"overlap_ok", plan.overlap_ok},
          {"alignment_ok", plan.alignment_ok},
          {"order_ok", plan.order_ok},
          {"ok", plan.ok()},
          {"failure", plan.failure}};
}

json to_json(const StoppingPartition& part, const DecayReport& decay) {
  json S = json::array(), measures = json::array(), base = json::array(), unterm = json::array();
  for (std::size_t k = 0; k < part.S.size(); ++k) {
    json members = json::array();
    for (const auto& a : part.S[k]) members.push_back(address_string(a));
    S.push_back({{"k", k + 1}, {"count", part.S[k].size()}, {"members", members}});
  }
  for (const auto& m : part.union_measure) measures.push_back(to_fraction(m));
  for (const auto& a : part.base) {
    const auto& o = part.base_tau.at(a);
    base.push_back({{"address", address_string(a)},
                    {"tau", o.tau ? json(*o.tau) : json(nullptr)},
                    {"witness_theta", to_fraction(o.witness_theta)},
                    {"witness_measure", to_fraction(o.witness_measure)}});
  }
  for (const auto& a : part.untermin) unterm.push_back(address_string(a));
  json ratios = json::array();
  for (auto r : decay.ratios) ratios.push_back(decimal_json(r));
  return {{"Lambda", to_fraction(part.Lambda)},
          {"params", params_json(part.params)},
          {"depth_cap", part.depth_cap},
          {"base", base},
          {"S", S},
          {"union_measure", measures},
          {"unterminated", unterm},
          {"cap_limited", part.cap_limited},
          {"index_law_ok", part.index_law_ok},
          {"index_law_violation", part.index_law_violation},
          {"decay", {{"lambda", to_fraction(decay.lambda)},
                     {"lambda_hat", decimal_json(decay.lambda_hat)},
                     {"ratios", ratios},
                     {"pass", decay.pass}}}};
}

json to_json(const TowerPartition& t) {
  json deltas = json::array(), layers = json::array();
  for (const auto& d : t.deltas) deltas.push_back(to_fraction(d));
  for (std::size_t i = 0; i < t.C.size(); ++i) {
    json members = json::array();
    for (const auto& a : t.C[i]) members.push_back(address_string(a));
    layers.push_back({{"i", i},
                      {"delta", to_fraction(t.deltas[i])},
                      {"count", t.C[i].size()},
                      {"measure", to_fraction(t.layer_measure[i])},
                      {"coverage", to_fraction(t.coverage[i])},
                      {"members", members}});
  }
  return {{"deltas", deltas},          {"theta", to_fraction(t.theta)},     {"depth_cap", t.depth_cap},
          {"layers", layers},          {"residual", to_fraction(t.residual)}, {"union_ok", t.union_ok},
          {"disjoint_ok", t.disjoint_ok}, {"bound_ok", t.bound_ok},       {"cap_hit", t.cap_hit}};
}

json to_json(const AlphaFit& f) {
  return {{"alpha_hat", decimal_json(f.alpha_hat)}, {"K_hat", decimal_json(f.K_hat)},
          {"eta_hat", decimal_json(f.eta_hat)},     {"r2", decimal_json(f.r_squared)},
          {"floored", f.floored},                   {"improving", f.improving}};
}

json to_json(const HarnessReport& h) {
  json curve = json::array();
  for (const auto& p : h.scan.curve)
    curve.push_back({{"delta", to_fraction(p.delta)}, {"c", to_fraction(p.empirical_c)},
                     {"c_decimal", to_decimal(p.empirical_c.get_d())}});
  json fit_points = json::array();
  for (const auto& [d, v] : h.fit_points) fit_points.push_back({{"delta", to_decimal(d)}, {"one_minus_c", to_decimal(v)}});
  json j = {{"porosity_curve", curve},
            {"Phi", to_fraction(h.Phi)},
            {"alpha_hat", decimal_json(h.fit.alpha_hat)},
            {"K_hat", decimal_json(h.fit.K_hat)},
            {"eta_hat", decimal_json(h.fit.eta_hat)},
            {"r2", decimal_json(h.fit.r_squared)},
            {"floored_points", h.fit.floored},
            {"fit_points", fit_points},
            {"beta_used", to_fraction(h.beta_used)},
            {"verdict", h.verdict},
            {"reasons", h.reasons},
            {"starved_stage", h.starved_stage.empty() ? json(nullptr) : json(h.starved_stage)},
            {"porosity_scan", {{"starved_samples", h.scan.starved_samples}, {"cap_hits", h.scan.cap_hits}}}};
  j["a1_sup"] = h.a1 ? interval_json(h.a1->sup_ratio) : json(nullptr);
  if (h.cross_scan) {
    json cc = json::array();
    for (const auto& p : h.cross_scan->curve)
      cc.push_back({{"delta", to_fraction(p.delta)}, {"c", to_fraction(p.empirical_c)}});
    j["cross_theta"] = {{"theta_a", to_fraction(h.cross.theta_a)},
                        {"theta_b", to_fraction(h.cross.theta_b)},
                        {"delta_shift_log2", h.cross.best_shift},
                        {"discrepancy", decimal_json(h.cross.discrepancy)},
                        {"agree", h.cross.agree},
                        {"curve_b", cc}};
  } else {
    j["cross_theta"] = nullptr;
  }
  return j;
}

std::string porosity_csv(const PorosityReport& r) {
  std::ostringstream os;
  os << "delta,c\n";
  for (const auto& p : r.curve) os << to_decimal(p.delta.get_d()) << ',' << to_decimal(p.empirical_c.get_d()) << '\n';
  return os.str();
}

std::string a1_csv(const A1ScanReport& r) {
  std::ostringstream os;
  os << "beta,ratio_lo,ratio_hi\n";
  os << to_decimal(r.spec.beta.get_d()) << ',' << to_decimal(r.sup_ratio.lo) << ',' << to_decimal(r.sup_ratio.hi)
     << '\n';
  return os.str();
}

std::string render(const json& j) { return j.dump(2) + "\n"; }

}  // namespace parporo
