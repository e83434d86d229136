// parporo: command-line front end for the lattice, porosity, weight, chain and
// improvement modules. Every report embeds the resolved configuration.

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "parporo/chains.hpp"
#include "parporo/geometry.hpp"
#include "parporo/improvement.hpp"
#include "parporo/parallel.hpp"
#include "parporo/porosity.hpp"
#include "parporo/report.hpp"
#include "parporo/sets.hpp"
#include "parporo/weights.hpp"

using namespace parporo;

namespace {

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Exit code 2: the computation ran but a cap starved it.
struct Outcome {
  json report;
  bool inconclusive = false;
  std::string csv;
};

const std::vector<std::pair<std::string, std::string>> kOptions = {
    {"set", "set definition file (JSON)"},
    {"n", "spatial dimension"},
    {"p", "parabolic exponent, rational or 'e'"},
    {"d", "division rate (default: smallest with 2^{dp} >= 9)"},
    {"cap", "depth cap of hole searches"},
    {"seed", "sampler seed"},
    {"tol", "relative tolerance of A1 quadrature"},
    {"beta", "weight exponent beta"},
    {"theta", "temporal lag in slab units"},
    {"samples", "number of sampled roots"},
    {"delta", "delta value, or comma-separated list"},
    {"deltas", "number of dyadic deltas when no list is given"},
    {"format", "json or csv"},
    {"out", "write the report to this file"},
    {"center", "root center, comma-separated"},
    {"top", "root top time"},
    {"side", "root side length"},
    {"gamma0", "root truncation gamma0 in [0, 1/2]"},
    {"psi", "chain target shift"},
    {"c0", "chain overlap constant"},
    {"theta1", "lower chain lag"},
    {"theta2", "upper chain lag"},
    {"p-spatial", "spatial indices of the level-1 cell"},
    {"p-temporal", "temporal index of the level-1 cell"},
    {"threads", "worker threads (0 = hardware)"},
    {"midpoints", "add half-integer lags to the theta grid (true/false)"}};

class Settings {
 public:
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;

  bool has(const std::string& k) const {
    auto it = values.find(k);
    return it != values.end() && !it->second.empty();
  }
  std::string str(const std::string& k, const std::string& def = "") const { return has(k) ? values.at(k) : def; }

  Rational rational(const std::string& k, const Rational& def) const {
    if (!has(k)) return def;
    try {
      return parse_rational(values.at(k));
    } catch (const std::exception&) {
      throw InputError("--" + k + ": not a number: '" + values.at(k) + "'");
    }
  }
  long long integer(const std::string& k, long long def) const {
    if (!has(k)) return def;
    Rational r = rational(k, Rational(static_cast<long>(def)));
    if (!is_integer(r)) throw InputError("--" + k + ": expected an integer");
    auto v = to_i64(r.get_num());
    if (!v) throw InputError("--" + k + ": out of range");
    return *v;
  }
  double real(const std::string& k, double def) const { return has(k) ? rational(k, Rational(0)).get_d() : def; }
  std::vector<Rational> list(const std::string& k) const {
    std::vector<Rational> out;
    if (!has(k)) return out;
    std::stringstream ss(values.at(k));
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        out.push_back(parse_rational(item));
      } catch (const std::exception&) {
        throw InputError("--" + k + ": bad list entry '" + item + "'");
      }
    }
    return out;
  }
};

void merge_config_file(Settings& s, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file '" + path + "'");
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("malformed config JSON: ") + e.what());
  }
  if (!cfg.is_object()) throw InputError("config file must hold a JSON object");
  for (auto it = cfg.begin(); it != cfg.end(); ++it) {
    if (!s.values.count(it.key())) throw InputError("unknown config key '" + it.key() + "'");
    if (s.options.at(it.key())->count() > 0) continue;  // flags win
    const json& v = it.value();
    if (v.is_string()) {
      s.values[it.key()] = v.get<std::string>();
    } else if (v.is_array() && it.key() != "set") {
      std::string joined;
      for (const auto& e : v) joined += (joined.empty() ? "" : ",") + (e.is_string() ? e.get<std::string>() : e.dump());
      s.values[it.key()] = joined;
    } else {
      s.values[it.key()] = v.dump();
    }
  }
}

Rational parse_p(const std::string& text) {
  if (text == "e") return rational_from_double(std::exp(1.0));
  try {
    return parse_rational(text);
  } catch (const std::exception&) {
    throw InputError("--p: not a number: '" + text + "'");
  }
}

struct Resolved {
  json set_json;
  std::optional<ClosedSetModel> E;
  std::optional<Geometry> geom;
  RootSpec root;
  bool root_given = false;
  int threads = 1;
  json config;
};

Resolved resolve(const Settings& s, bool needs_set) {
  Resolved r;
  std::optional<Rational> set_p;
  if (s.has("set")) {
    const std::string v = s.str("set");
    try {
      if (!v.empty() && v.front() == '{') {
        r.set_json = json::parse(v);
      } else {
        std::ifstream in(v);
        if (!in) throw InputError("cannot open set file '" + v + "'");
        r.set_json = json::parse(in);
      }
    } catch (const json::parse_error& e) {
      throw InputError(std::string("malformed set JSON: ") + e.what());
    }
    try {
      set_p = set_json_p(r.set_json);
    } catch (const std::exception& e) {
      throw InputError(std::string("malformed set JSON: ") + e.what());
    }
  } else if (needs_set) {
    throw InputError("--set is required for this command");
  }

  const long long n = s.integer("n", r.set_json.is_object() && r.set_json.contains("n") ? r.set_json["n"].get<int>() : 1);
  const Rational p = s.has("p") ? parse_p(s.str("p")) : set_p.value_or(Rational(2));
  std::optional<int> d;
  if (s.has("d")) d = static_cast<int>(s.integer("d", 2));
  try {
    r.geom = Geometry::create(static_cast<int>(n), p, d);
  } catch (const std::exception& e) {
    throw InputError(std::string("invalid geometry: ") + e.what());
  }
  if (!r.set_json.is_null()) {
    try {
      r.E = set_from_json(r.set_json, r.geom->n());
    } catch (const std::exception& e) {
      throw InputError(std::string("malformed set JSON: ") + e.what());
    }
  }

  r.root = canonical_root_spec(r.geom->n());
  for (const char* k : {"center", "top", "side", "gamma0"}) r.root_given = r.root_given || s.has(k);
  if (s.has("center")) {
    r.root.center = s.list("center");
    if (static_cast<int>(r.root.center.size()) != r.geom->n()) throw InputError("--center needs n coordinates");
  }
  r.root.top_time = s.rational("top", r.root.top_time);
  r.root.side = s.rational("side", r.root.side);
  r.root.gamma0 = s.rational("gamma0", r.root.gamma0);
  if (r.root.side <= 0) throw InputError("--side must be positive");
  if (r.root.gamma0 < 0 || r.root.gamma0 > Rational(1, 2)) throw InputError("--gamma0 must lie in [0, 1/2]");

  r.threads = resolve_threads(static_cast<int>(s.integer("threads", 0)));

  r.config = {{"n", r.geom->n()},
              {"p", to_fraction(r.geom->p())},
              {"d", r.geom->d()},
              {"root", root_spec_json(r.root)},
              {"set", r.E ? set_to_json(*r.E) : json(nullptr)}};
  return r;
}

std::shared_ptr<const Root> build_root(const Resolved& r, int depth) {
  try {
    return Root::create(*r.geom, r.root, depth);
  } catch (const std::exception& e) {
    throw InputError(std::string("invalid root: ") + e.what());
  }
}

int cap_of(const Settings& s, int def) {
  long long c = s.integer("cap", def);
  if (c < 1 || c > 30) throw InputError("--cap must lie in [1, 30]");
  return static_cast<int>(c);
}

Rational theta_of(const Settings& s, const Geometry& g) {
  return s.rational("theta", Rational(default_parameters(g).Phi));
}

SamplerConfig sampler_of(const Settings& s, const Resolved& r, int default_samples, bool force_base) {
  SamplerConfig c = default_sampler(r.geom->n());
  c.samples = static_cast<int>(s.integer("samples", default_samples));
  if (c.samples < 1) throw InputError("--samples must be positive");
  c.seed = static_cast<std::uint64_t>(s.integer("seed", 1));
  if (force_base || r.root_given) c.base = r.root;
  return c;
}

// ---------------------------------------------------------------------------

Outcome cmd_lattice(const Settings& s, Resolved& r) {
  const int depth = cap_of(s, 3);
  auto root = build_root(r, depth);
  const Geometry& g = *r.geom;
  json levels = json::array();
  for (int i = 0; i <= depth; ++i) {
    json lv = {{"level", i},
               {"K", root->K(i)},
               {"spatial_count", root->spatial_count(i)},
               {"cell_fraction", to_fraction(root->cell_fraction(i))},
               {"side", to_fraction(root->side_at(i))},
               {"time_length", to_fraction(root->time_length_at(i))}};
    if (i < depth) {
      lv["gamma"] = decimal_json(root->gamma(i));
      lv["k"] = root->k(i);
    }
    levels.push_back(lv);
  }
  Outcome o;
  o.report = {{"two_dp", to_fraction(g.two_dp())},
              {"two_dp_exact", g.two_dp_exact()},
              {"k_floor", g.k_floor()},
              {"k_ceil", g.k_ceil()},
              {"default_parameters", params_json(default_parameters(g))},
              {"t_low", to_fraction(root->t_low())},
              {"time_length", to_fraction(root->time_length())},
              {"levels", levels}};
  r.config["cap"] = depth;
  return o;
}

Outcome cmd_maxhole(const Settings& s, Resolved& r) {
  const int cap = cap_of(s, 3);
  auto root = build_root(r, cap);
  Outcome o;
  HoleResult h;
  if (s.has("theta")) {
    FreenessViews views(*r.E, *root);
    h = translated_hole(views, root_address(*root), s.rational("theta", 0), cap);
    r.config["theta"] = to_fraction(s.rational("theta", 0));
  } else {
    h = maximal_hole(*r.E, root_address(*root), cap);
  }
  o.report = to_json(h);
  if (h.address) {
    SupBracket b = hole_esssup_bracket(*r.E, *h.address, 1e-6 * h.side.get_d(), 400000, h.shift);
    o.report["sup_distance"] = interval_json(b.value);
  }
  o.inconclusive = !h.address && (h.cap_hit || h.budget_hit);
  r.config["cap"] = cap;
  return o;
}

Outcome cmd_porosity(const Settings& s, Resolved& r) {
  const int cap = cap_of(s, 3);
  const Rational theta = theta_of(s, *r.geom);
  SamplerConfig sampler = sampler_of(s, r, 16, false);
  std::vector<Rational> deltas;
  if (s.has("delta")) {
    deltas = s.list("delta");
  } else {
    deltas = dyadic_delta_grid(static_cast<int>(s.integer("deltas", 12)));
  }
  for (const auto& d : deltas)
    if (d <= 0 || d > 1) throw InputError("--delta values must lie in (0, 1]");
  ScanOptions opts;
  opts.depth_cap = cap;
  opts.threads = r.threads;
  PorosityReport rep = porosity_scan(*r.E, *r.geom, sampler, deltas, theta, opts);
  Outcome o;
  o.report = to_json(rep);
  o.csv = porosity_csv(rep);
  o.inconclusive = rep.starved();
  r.config["cap"] = cap;
  r.config["theta"] = to_fraction(theta);
  r.config["samples"] = sampler.samples;
  r.config["seed"] = sampler.seed;
  return o;
}

Outcome cmd_a1(const Settings& s, Resolved& r) {
  const Rational beta = s.rational("beta", Rational(1, 6));
  if (beta <= 0) throw InputError("--beta must be positive");
  const Rational theta = s.rational("theta", Rational(2));
  const double tol = s.real("tol", 1e-3);
  if (!(tol > 0)) throw InputError("--tol must be positive");
  SamplerConfig sampler = sampler_of(s, r, 1, true);
  WeightSpec ws = make_weight_spec(*r.geom, beta);
  A1ScanReport rep = a1_scan(*r.E, *r.geom, sampler, theta, ws, tol, r.threads);
  Outcome o;
  o.report = to_json(rep);
  o.csv = a1_csv(rep);
  o.inconclusive = rep.one_sided_samples > 0;
  r.config["beta"] = to_fraction(beta);
  r.config["theta"] = to_fraction(theta);
  r.config["tol"] = to_decimal(tol);
  r.config["samples"] = sampler.samples;
  r.config["seed"] = sampler.seed;
  return o;
}

Outcome cmd_chain(const Settings& s, Resolved& r) {
  ChainInput in;
  in.psi = s.rational("psi", in.psi);
  in.c0 = s.rational("c0", in.c0);
  in.theta1 = s.rational("theta1", in.theta1);
  in.theta2 = s.rational("theta2", in.theta2);
  in.theta = s.rational("theta", in.theta);
  std::array<std::int64_t, kMaxDim> ps{};
  auto given = s.list("p-spatial");
  if (!given.empty()) {
    if (static_cast<int>(given.size()) != r.geom->n()) throw InputError("--p-spatial needs n indices");
    for (std::size_t i = 0; i < given.size(); ++i) ps[i] = floor_i64(given[i]);
  }
  const std::int64_t pt = s.integer("p-temporal", 0);
  ChainPlan plan;
  try {
    plan = doubling_chain(*r.geom, r.root, ps, pt, in);
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("invalid chain input: ") + e.what());
  }
  Outcome o;
  o.report = to_json(plan);
  return o;
}

Outcome cmd_stopping(const Settings& s, Resolved& r) {
  const int cap = cap_of(s, 3);
  auto root = build_root(r, cap);
  const StoppingParams params = default_parameters(*r.geom);
  const Rational delta = s.rational("delta", Rational(1, 4));
  if (delta <= 0 || delta > 1) throw InputError("--delta must lie in (0, 1]");
  const DyadicAddress R = root_address(*root);
  FreenessViews views(*r.E, *root);
  HoleResult M = translated_hole(views, R, Rational(params.Phi), cap);
  Outcome o;
  r.config["cap"] = cap;
  r.config["delta"] = to_fraction(delta);
  if (!M.address) {
    o.report = {{"reference_hole", to_json(M)}, {"partition", nullptr}};
    o.inconclusive = true;
    return o;
  }
  const Rational Lambda = delta * M.measure;
  CollectionReport F = admissible_collection(views, R, delta, Rational(params.Phi), cap);
  CollectionReport G = complementary_of(F, R, cap);
  ThetaGrid grid = make_theta_grid(params, s.str("midpoints") == "true");
  StoppingPartition part = stopping_partition(*r.E, *root, G.rectangles, Lambda, params, cap, grid, r.threads);
  DecayReport decay = decay_check(part, *r.geom);
  o.report = {{"reference_hole", to_json(M)}, {"partition", to_json(part, decay)}};
  json checks;
  auto put = [&](const char* name, const CheckResult& c) { checks[name] = {{"ok", c.ok}, {"detail", c.detail}}; };
  put("covers_base", verify_covers_base(part));
  put("nesting", verify_nesting(part));
  put("disjoint_from_F", verify_disjoint_from_F(part, F));
  put("proper_subsets", verify_proper_subsets(part));
  put("parent_images_disjoint", verify_parent_images_disjoint(part));
  o.report["checks"] = checks;
  o.report["F_count"] = F.rectangles.size();
  o.report["G_count"] = G.rectangles.size();
  o.inconclusive = !part.untermin.empty();
  return o;
}

Outcome cmd_tower(const Settings& s, Resolved& r) {
  const int cap = cap_of(s, 3);
  auto root = build_root(r, cap);
  const Rational theta = theta_of(s, *r.geom);
  std::vector<Rational> deltas = s.list("delta");
  if (deltas.size() <= 1) {
    const Rational d0 = deltas.empty() ? Rational(1, 2) : deltas.front();
    const long long k = s.integer("deltas", 4);
    deltas.clear();
    Rational d = d0;
    for (long long i = 0; i < k; ++i, d /= 2) deltas.push_back(d);
  }
  TowerPartition t;
  try {
    t = tower_partition(*r.E, root_address(*root), deltas, theta, cap);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  Outcome o;
  o.report = to_json(t);
  r.config["cap"] = cap;
  r.config["theta"] = to_fraction(theta);
  return o;
}

Outcome cmd_characterize(const Settings& s, Resolved& r) {
  HarnessConfig cfg;
  cfg.seed = static_cast<std::uint64_t>(s.integer("seed", 1));
  cfg.samples = static_cast<int>(s.integer("samples", cfg.samples));
  cfg.depth_cap = cap_of(s, 4);
  cfg.delta_exponents = static_cast<int>(s.integer("deltas", cfg.delta_exponents));
  cfg.a1_tol = s.real("tol", cfg.a1_tol);
  cfg.theta_cross = s.rational("theta", cfg.theta_cross);
  cfg.threads = r.threads;
  if (cfg.delta_exponents < 3) throw InputError("--deltas must be at least 3");
  if (cfg.theta_cross <= 1) throw InputError("--theta must exceed 1");
  HarnessReport h = characterization_harness(*r.E, *r.geom, cfg);
  Outcome o;
  o.report = to_json(h);
  o.inconclusive = h.verdict == "inconclusive";
  r.config["seed"] = cfg.seed;
  r.config["samples"] = cfg.samples;
  r.config["cap"] = cfg.depth_cap;
  r.config["deltas"] = cfg.delta_exponents;
  r.config["tol"] = to_decimal(cfg.a1_tol);
  r.config["theta_cross"] = to_fraction(cfg.theta_cross);
  return o;
}

using Handler = Outcome (*)(const Settings&, Resolved&);

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"parporo: parabolic dyadic lattices, porosity and A1+ weights"};
  app.require_subcommand(1);

  const std::vector<std::tuple<std::string, std::string, Handler, bool>> commands = {
      {"lattice", "dump the truncated dyadic lattice of a root", cmd_lattice, false},
      {"maxhole", "largest E-free dyadic subrectangle", cmd_maxhole, true},
      {"porosity", "empirical porosity curve over a delta grid", cmd_porosity, true},
      {"a1", "A1+ ratio scan of dist(., E)^(-beta(n+p))", cmd_a1, true},
      {"chain", "doubling chain plan for a level-1 cell", cmd_chain, false},
      {"stopping", "stopping-time partition and decay check", cmd_stopping, true},
      {"tower", "towering collections for a decreasing delta sequence", cmd_tower, true},
      {"characterize", "end-to-end consistency harness", cmd_characterize, true},
  };

  std::map<std::string, Settings> settings;
  std::map<std::string, std::string> config_path;
  for (const auto& [name, help, fn, needs_set] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    Settings& st = settings[name];
    for (const auto& [opt, text] : kOptions) {
      st.values[opt] = "";
      st.options[opt] = sub->add_option("--" + opt, st.values[opt], text);
    }
    sub->add_option("--config", config_path[name], "JSON file with option defaults");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  for (const auto& [name, help, fn, needs_set] : commands) {
    if (!app.got_subcommand(name)) continue;
    Settings& st = settings[name];
    try {
      if (!config_path[name].empty()) merge_config_file(st, config_path[name]);
      const std::string format = st.str("format", "json");
      if (format != "json" && format != "csv") throw InputError("--format must be json or csv");
      Resolved r = resolve(st, needs_set);
      Outcome o = fn(st, r);
      r.config["command"] = name;
      r.config["format"] = format;
      std::string text;
      if (format == "csv") {
        if (o.csv.empty()) throw InputError("csv output is only available for porosity and a1");
        text = o.csv;
      } else {
        o.report["config"] = r.config;
        o.report["status"] = o.inconclusive ? "inconclusive" : "ok";
        text = render(o.report);
      }
      if (st.has("out")) {
        std::ofstream out(st.str("out"), std::ios::binary);
        if (!out) throw InputError("cannot write '" + st.str("out") + "'");
        out << text;
      } else {
        std::cout << text;
      }
      return o.inconclusive ? 2 : 0;
    } catch (const InputError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    } catch (const std::invalid_argument& e) {
      std::cerr << "error: invalid input: " << e.what() << "\n";
      return 1;
    } catch (const std::out_of_range& e) {
      std::cerr << "error: out of range: " << e.what() << "\n";
      return 1;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }
  return 1;
}
