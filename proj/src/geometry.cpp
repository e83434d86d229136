#include "parporo/geometry.hpp"

#include <sstream>

#include "bigfloat.hpp"

namespace parporo {

using detail::BigFloat;

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw GeometryError("lattice index arithmetic overflows 64 bits");
  return r;
}

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) throw GeometryError("lattice index arithmetic overflows 64 bits");
  return r;
}

}  // namespace

Geometry Geometry::create(int n, const Rational& p, std::optional<int> d, int precision_bits) {
  if (n < 1 || n > kMaxDim)
    throw GeometryError("spatial dimension must lie in [1, " + std::to_string(kMaxDim) + "]");
  if (p <= 1) throw GeometryError("parabolic exponent p must exceed 1");
  if (precision_bits < 64) throw GeometryError("precision_bits must be at least 64");
  if (d && *d < 1) throw GeometryError("division rate d must be positive");

  const Rational nine(9);
  auto power_for = [&](int dd) { return BigFloat::exp2(precision_bits, Rational(dd) * p); };

  int dd = 0;
  if (d) {
    dd = *d;
    if (power_for(dd).cmp(nine) < 0) {
      std::ostringstream msg;
      msg << "d*p = " << dd * p.get_d() << " is below log2(9) = 3.169925";
      throw GeometryError(msg.str());
    }
  } else {
    dd = 1;
    while (power_for(dd).cmp(nine) < 0) ++dd;
  }

  Geometry g;
  g.n_ = n;
  g.d_ = dd;
  g.p_ = p;
  g.p_double_ = p.get_d();
  g.precision_bits_ = precision_bits;
  Rational dp = Rational(dd) * p;
  if (is_integer(dp)) {
    if (dp > 62) throw GeometryError("2^{dp} exceeds the supported lattice size");
    g.two_dp_ = Rational(pow2_big(static_cast<unsigned>(dp.get_num().get_ui())));
    g.two_dp_exact_ = true;
    g.k_floor_ = g.k_ceil_ = *to_i64(g.two_dp_.get_num());
  } else {
    BigFloat t = power_for(dd);
    g.two_dp_ = t.to_rational();
    g.two_dp_exact_ = false;
    auto kf = to_i64(t.floor()), kc = to_i64(t.ceil());
    if (!kf || !kc || *kc > (std::int64_t{1} << 40)) throw GeometryError("2^{dp} exceeds the supported lattice size");
    g.k_floor_ = *kf;
    g.k_ceil_ = *kc;
  }
  g.two_dp_ld_ = BigFloat(precision_bits, g.two_dp_).to_ld();
  return g;
}

Rational Geometry::side_pow(const Rational& side) const {
  if (side == 1) return Rational(1);
  if (is_integer(p_)) return pow_int(side, static_cast<unsigned>(p_.get_num().get_ui()));
  return BigFloat::pow(precision_bits_, side, p_).to_rational();
}

long double Geometry::two_pow(const Rational& exponent) const {
  return BigFloat::exp2(precision_bits_, exponent).to_ld();
}

std::vector<TruncationLevel> gamma_sequence(const Geometry& geom, const Rational& gamma0, int depth) {
  if (gamma0 < 0 || gamma0 > Rational(1, 2)) throw GeometryError("gamma0 must lie in [0, 1/2]");
  if (depth < 0) throw GeometryError("depth must be nonnegative");
  std::vector<TruncationLevel> out;
  out.reserve(depth);

  if (geom.two_dp_exact()) {
    // k_floor == k_ceil, so the branch never matters and γ stays exact.
    const Rational& T = geom.two_dp();
    Rational x = 1 - gamma0;  // x = 1 - γ
    for (int i = 0; i < depth; ++i) {
      out.push_back({static_cast<long double>(Rational(1 - x).get_d()), geom.k_ceil()});
      x = x * T / Rational(geom.k_ceil());
    }
    return out;
  }

  const mpfr_prec_t bits = geom.precision_bits() + 64;
  BigFloat T = BigFloat::exp2(bits, Rational(geom.d()) * geom.p());
  BigFloat one(bits, Rational(1)), two(bits, Rational(2));
  BigFloat x(bits, Rational(1 - gamma0));
  BigFloat thr_x = (T + one) / (two * T);
  BigFloat tol(bits, Rational(1, pow2_big(static_cast<unsigned>(geom.precision_bits() / 2))));
  for (int i = 0; i < depth; ++i) {
    BigFloat diff = x - thr_x;  // γ ≤ threshold  <=>  diff ≥ 0
    if (diff.abs().cmp(tol) < 0)
      throw GeometryError("truncation parameter at level " + std::to_string(i) +
                          " is too close to the k-branch threshold to decide");
    std::int64_t k = diff.cmp(BigFloat(bits)) >= 0 ? geom.k_ceil() : geom.k_floor();
    long double g = (one - x).to_ld();
    if (g < -1e-30L || g > 0.5L + 1e-30L) throw std::logic_error("truncation parameter left [0, 1/2]");
    out.push_back({g, k});
    x = x * T / BigFloat(bits, Rational(k));
  }
  return out;
}

RootSpec canonical_root_spec(int n) {
  RootSpec s;
  s.center.assign(n, Rational(0));
  s.top_time = 0;
  s.side = 1;
  s.gamma0 = 0;
  return s;
}

std::shared_ptr<const Root> Root::create(const Geometry& geom, const RootSpec& spec, int depth) {
  if (static_cast<int>(spec.center.size()) != geom.n()) throw GeometryError("root center has wrong dimension");
  if (spec.side <= 0) throw GeometryError("root side must be positive");
  if (depth < 0) throw GeometryError("depth must be nonnegative");
  if (geom.d() * depth > 60 || geom.n() * geom.d() * depth > 120)
    throw GeometryError("requested depth exceeds the 64-bit spatial index range");
  auto r = std::shared_ptr<Root>(new Root());
  r->geom_ = geom;
  r->spec_ = spec;
  r->levels_ = gamma_sequence(geom, spec.gamma0, depth);
  r->K_.push_back(1);
  for (auto& lv : r->levels_) {
    std::int64_t next = checked_mul(r->K_.back(), lv.k);
    if (next > (std::int64_t{1} << 58)) throw GeometryError("requested depth exceeds the 64-bit temporal index range");
    r->K_.push_back(next);
  }
  r->side_pow_p_ = geom.side_pow(spec.side);
  r->lt_ = (1 - spec.gamma0) * r->side_pow_p_;
  r->t_low_ = spec.top_time - r->side_pow_p_;
  return r;
}

long double Root::gamma(int level) const {
  if (level < depth()) return levels_.at(level).gamma;
  if (level != depth()) throw std::out_of_range("level beyond root depth");
  // 1 - γ_i = (1 - γ0) 2^{dp i} / K_i
  long double x = Rational(1 - spec_.gamma0).get_d();
  long double T = geom_.two_dp_ld();
  for (int i = 0; i < level; ++i) x = x * T / static_cast<long double>(levels_[i].k);
  return 1 - x;
}

std::int64_t Root::children_count(int level) const {
  return (std::int64_t{1} << (geom_.d() * geom_.n())) * k(level);
}

Rational Root::measure() const { return pow_int(spec_.side, geom_.n()) * lt_; }

Rational Root::cell_fraction(int level) const {
  BigInt den = pow2_big(static_cast<unsigned>(geom_.d() * geom_.n() * level)) * BigInt(static_cast<long>(K(level)));
  return Rational(BigInt(1), den);
}

Rational Root::side_at(int level) const {
  return make_rational(spec_.side.get_num(), spec_.side.get_den() * pow2_big(static_cast<unsigned>(geom_.d() * level)));
}

Rational Root::time_length_at(int level) const { return lt_ / Rational(static_cast<long>(K(level))); }

bool address_less(const DyadicAddress& a, const DyadicAddress& b) {
  if (a.level != b.level) return a.level < b.level;
  if (a.temporal != b.temporal) return a.temporal < b.temporal;
  return a.spatial < b.spatial;
}

std::size_t AddressHash::operator()(const DyadicAddress& a) const noexcept {
  std::uint64_t h = 0x9E3779B97F4A7C15ull ^ static_cast<std::uint64_t>(a.level);
  auto mix = [&](std::uint64_t v) {
    h ^= v + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    h *= 0xBF58476D1CE4E5B9ull;
  };
  mix(static_cast<std::uint64_t>(a.temporal));
  for (auto s : a.spatial) mix(static_cast<std::uint64_t>(s));
  mix(reinterpret_cast<std::uintptr_t>(a.root));
  return static_cast<std::size_t>(h ^ (h >> 31));
}

DyadicAddress root_address(const Root& root) {
  DyadicAddress a;
  a.root = &root;
  return a;
}

void for_each_child(const DyadicAddress& addr, const std::function<void(const DyadicAddress&)>& fn) {
  const Root& R = *addr.root;
  if (addr.level >= R.depth()) throw std::out_of_range("children requested below the root's precomputed depth");
  const int n = R.n(), d = R.geometry().d();
  const std::int64_t k = R.k(addr.level);
  const std::int64_t per_axis = std::int64_t{1} << d;
  const std::int64_t combos = std::int64_t{1} << (d * n);
  DyadicAddress c;
  c.root = addr.root;
  c.level = addr.level + 1;
  const std::int64_t tbase = checked_mul(addr.temporal, k);
  for (std::int64_t code = 0; code < combos; ++code) {
    std::int64_t rest = code;
    for (int ax = n - 1; ax >= 0; --ax) {
      c.spatial[ax] = (addr.spatial[ax] << d) + (rest % per_axis);
      rest /= per_axis;
    }
    for (std::int64_t r = 0; r < k; ++r) {
      c.temporal = tbase + r;
      fn(c);
    }
  }
}

std::vector<DyadicAddress> children(const DyadicAddress& addr) {
  std::vector<DyadicAddress> out;
  out.reserve(static_cast<std::size_t>(addr.root->children_count(addr.level)));
  for_each_child(addr, [&](const DyadicAddress& c) { out.push_back(c); });
  return out;
}

DyadicAddress parent(const DyadicAddress& addr) {
  if (addr.level == 0) throw std::out_of_range("a level-0 address has no parent");
  const Root& R = *addr.root;
  DyadicAddress p = addr;
  p.level = addr.level - 1;
  for (int ax = 0; ax < R.n(); ++ax) p.spatial[ax] = addr.spatial[ax] >> R.geometry().d();
  p.temporal = floor_div(addr.temporal, R.k(p.level));
  return p;
}

DyadicAddress ancestor_at(const DyadicAddress& addr, int level) {
  if (level > addr.level || level < 0) throw std::out_of_range("ancestor level out of range");
  const Root& R = *addr.root;
  DyadicAddress p = addr;
  p.level = level;
  const int shift = R.geometry().d() * (addr.level - level);
  for (int ax = 0; ax < R.n(); ++ax) p.spatial[ax] = addr.spatial[ax] >> shift;
  p.temporal = floor_div(addr.temporal, R.slab_ratio(level, addr.level));
  return p;
}

DyadicAddress forward_parent(const DyadicAddress& addr, const StoppingParams& params) {
  return forward_parent_iter(addr, 1, params.theta0);
}

DyadicAddress forward_parent_iter(const DyadicAddress& addr, int i, std::int64_t theta0) {
  DyadicAddress a = addr;
  for (int s = 0; s < i; ++s) {
    a = parent(a);
    a.temporal = checked_add(a.temporal, theta0);
  }
  return a;
}

DyadicAddress translate_address(const DyadicAddress& addr, std::int64_t theta) {
  DyadicAddress a = addr;
  a.temporal = checked_add(a.temporal, theta);
  return a;
}

bool is_ancestor_or_self(const DyadicAddress& anc, const DyadicAddress& desc) {
  if (anc.root != desc.root || anc.level > desc.level) return false;
  return ancestor_at(desc, anc.level) == anc;
}

bool bodies_intersect(const DyadicAddress& a, const DyadicAddress& b) {
  return a.level <= b.level ? is_ancestor_or_self(a, b) : is_ancestor_or_self(b, a);
}

Rational temporal_lo_units(const DyadicAddress& addr) {
  return make_rational(BigInt(static_cast<long>(addr.temporal)), BigInt(static_cast<long>(addr.root->K(addr.level))));
}

Rational temporal_hi_units(const DyadicAddress& addr) {
  return make_rational(BigInt(static_cast<long>(addr.temporal)) + 1, BigInt(static_cast<long>(addr.root->K(addr.level))));
}

Rational ParabolicRectangle::measure() const { return pow_int(side, static_cast<unsigned>(n())) * l_t(); }

ParabolicRectangle make_rectangle(const Geometry& geom, const std::vector<Rational>& center,
                                  const Rational& top_time, const Rational& side, const Rational& gamma) {
  if (static_cast<int>(center.size()) != geom.n()) throw GeometryError("rectangle center has wrong dimension");
  if (side <= 0) throw GeometryError("rectangle side must be positive");
  if (gamma < 0 || gamma >= 1) throw GeometryError("rectangle truncation must lie in [0, 1)");
  ParabolicRectangle r;
  r.center = center;
  r.top_time = top_time;
  r.side = side;
  r.gamma = gamma.get_d();
  Rational lp = geom.side_pow(side);
  r.t_lo = top_time - lp;
  r.t_hi = top_time - gamma * lp;
  return r;
}

ParabolicRectangle realize(const DyadicAddress& addr, const Rational& shift) {
  const Root& R = *addr.root;
  const Rational lx = R.side_at(addr.level);
  ParabolicRectangle r;
  r.side = lx;
  r.center.resize(R.n());
  for (int ax = 0; ax < R.n(); ++ax) {
    r.center[ax] = R.spec().center[ax] - R.spec().side / 2 +
                   lx * (Rational(BigInt(static_cast<long>(addr.spatial[ax]))) + Rational(1, 2));
  }
  r.t_lo = R.t_low() + R.time_length() * (temporal_lo_units(addr) + shift);
  r.t_hi = r.t_lo + R.time_length_at(addr.level);
  r.gamma = R.gamma(addr.level);
  // top = t_lo + L_i^p, with L_i^p = l_t / (1 - γ_i); exact when γ_i is.
  Rational one_minus_gamma = addr.level == 0 ? Rational(1 - R.spec().gamma0)
                                             : rational_from_double(static_cast<double>(1 - r.gamma));
  r.top_time = r.t_lo + (r.t_hi - r.t_lo) / one_minus_gamma;
  return r;
}

ParabolicRectangle translate(const ParabolicRectangle& rect, const Rational& theta) {
  ParabolicRectangle r = rect;
  Rational shift = theta * rect.l_t();
  r.t_lo += shift;
  r.t_hi += shift;
  r.top_time += shift;
  return r;
}

Rational plus_translation(const Rational& gamma) {
  if (gamma >= 1) throw GeometryError("truncation must be below 1");
  return (1 + gamma) / (1 - gamma);
}

StoppingParams default_parameters(const Geometry& geom) { return {4, 2, geom.k_ceil() - 1}; }

ParameterCheck check_parameters(const StoppingParams& s, const Geometry& geom) {
  ParameterCheck out;
  if (s.theta0 < 2 || s.phi < 2 || s.Phi < 2) {
    out.ok = false;
    out.failed = "pre";
    return out;
  }
  const Rational T_minus_1 = geom.two_dp() - 1;
  auto ceil_of = [&](std::int64_t mult) { return ceil_i64(Rational(mult * s.theta0) / T_minus_1); };
  const std::int64_t c2 = ceil_of(2), c4 = ceil_of(4);
  out.conditions[0] = s.phi <= s.Phi - s.theta0 - c2;
  out.conditions[1] = s.phi <= s.theta0 && s.theta0 <= s.Phi;
  out.conditions[2] = s.Phi >= geom.k_ceil() - 1;
  out.conditions[3] = s.phi <= geom.k_floor() - 1 - s.theta0 - c2;
  out.conditions[4] = s.phi - s.theta0 <= -c4;
  static const char* names[5] = {"i", "ii", "iii", "iv", "v"};
  for (int i = 0; i < 5; ++i) {
    if (!out.conditions[i]) {
      out.ok = false;
      if (!out.failed.empty()) out.failed += ",";
      out.failed += names[i];
    }
  }
  return out;
}

std::string address_string(const DyadicAddress& a) {
  std::ostringstream os;
  os << "L" << a.level << ":s(";
  const int n = a.root ? a.root->n() : 1;
  for (int i = 0; i < n; ++i) os << (i ? "," : "") << a.spatial[i];
  os << "):t" << a.temporal;
  return os.str();
}

}  // namespace parporo
