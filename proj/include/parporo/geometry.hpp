#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "parporo/rational.hpp"

namespace parporo {

inline constexpr int kMaxDim = 4;

class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Geometry {
 public:
  static Geometry create(int n, const Rational& p, std::optional<int> d = std::nullopt,
                         int precision_bits = 128);

  int n() const { return n_; }
  int d() const { return d_; }
  const Rational& p() const { return p_; }
  double p_double() const { return p_double_; }
  int precision_bits() const { return precision_bits_; }

  // 2^{dp}: exact when d*p is an integer, otherwise rounded at precision_bits.
  const Rational& two_dp() const { return two_dp_; }
  long double two_dp_ld() const { return two_dp_ld_; }
  bool two_dp_exact() const { return two_dp_exact_; }
  std::int64_t k_floor() const { return k_floor_; }
  std::int64_t k_ceil() const { return k_ceil_; }

  // L^p, exact when p is an integer or L == 1, otherwise rounded at
  // precision_bits and then held as an exact rational.
  Rational side_pow(const Rational& side) const;

  // 2^{d(n+p)}-style helpers evaluated at working precision.
  long double two_pow(const Rational& exponent) const;

 private:
  int n_ = 1, d_ = 1, precision_bits_ = 128;
  Rational p_;
  double p_double_ = 2.0;
  Rational two_dp_;
  long double two_dp_ld_ = 0;
  bool two_dp_exact_ = false;
  std::int64_t k_floor_ = 0, k_ceil_ = 0;
};

struct StoppingParams {
  std::int64_t theta0 = 4;
  std::int64_t phi = 2;
  std::int64_t Phi = 2;
};

struct TruncationLevel {
  long double gamma = 0;
  std::int64_t k = 0;
};

// (γ_i, k_i) for i in [0, depth). Refuses when a γ_i sits within
// 2^{-precision_bits/2} of the branch threshold and the two branches differ.
std::vector<TruncationLevel> gamma_sequence(const Geometry& geom, const Rational& gamma0, int depth);

struct RootSpec {
  std::vector<Rational> center;
  Rational top_time;
  Rational side{1};
  Rational gamma0{0};
};

// Q(0,1) x [-1, 0) with γ0 = 0.
RootSpec canonical_root_spec(int n);

class Root {
 public:
  static std::shared_ptr<const Root> create(const Geometry& geom, const RootSpec& spec, int depth);

  const Geometry& geometry() const { return geom_; }
  const RootSpec& spec() const { return spec_; }
  int depth() const { return static_cast<int>(levels_.size()); }
  int n() const { return geom_.n(); }

  long double gamma(int level) const;
  std::int64_t k(int level) const { return levels_.at(level).k; }
  std::int64_t K(int level) const { return K_.at(level); }
  // K(hi) / K(lo): number of level-hi slabs in one level-lo slab.
  std::int64_t slab_ratio(int lo, int hi) const { return K_.at(hi) / K_.at(lo); }
  std::int64_t spatial_count(int level) const { return std::int64_t{1} << (geom_.d() * level); }
  std::int64_t children_count(int level) const;

  const Rational& t_low() const { return t_low_; }
  const Rational& time_length() const { return lt_; }
  const Rational& side_pow_p() const { return side_pow_p_; }
  Rational measure() const;

  // |level-i cell| / |root|, exactly 1 / (2^{dni} K_i).
  Rational cell_fraction(int level) const;
  Rational side_at(int level) const;
  Rational time_length_at(int level) const;

 private:
  Root() = default;
  Geometry geom_;
  RootSpec spec_;
  std::vector<TruncationLevel> levels_;
  std::vector<std::int64_t> K_;
  Rational side_pow_p_, t_low_, lt_;
};

struct DyadicAddress {
  const Root* root = nullptr;
  int level = 0;
  std::array<std::int64_t, kMaxDim> spatial{};
  std::int64_t temporal = 0;

  friend bool operator==(const DyadicAddress& a, const DyadicAddress& b) {
    return a.root == b.root && a.level == b.level && a.temporal == b.temporal && a.spatial == b.spatial;
  }
};

// Order used for deterministic reporting: level, then temporal, then spatial.
bool address_less(const DyadicAddress& a, const DyadicAddress& b);

struct AddressHash {
  std::size_t operator()(const DyadicAddress& a) const noexcept;
};

DyadicAddress root_address(const Root& root);
std::vector<DyadicAddress> children(const DyadicAddress& addr);
void for_each_child(const DyadicAddress& addr, const std::function<void(const DyadicAddress&)>& fn);
DyadicAddress parent(const DyadicAddress& addr);
DyadicAddress ancestor_at(const DyadicAddress& addr, int level);
DyadicAddress forward_parent(const DyadicAddress& addr, const StoppingParams& params);
// π_i^+ : i-fold forward parent; i = 0 returns addr.
DyadicAddress forward_parent_iter(const DyadicAddress& addr, int i, std::int64_t theta0);
// Extended-lattice translation by an integer number of own slabs.
DyadicAddress translate_address(const DyadicAddress& addr, std::int64_t theta);

bool is_ancestor_or_self(const DyadicAddress& anc, const DyadicAddress& desc);
bool bodies_intersect(const DyadicAddress& a, const DyadicAddress& b);

// Temporal bounds of an address in root time units, measured from the root's
// lower face: [temporal / K, (temporal + 1) / K).
Rational temporal_lo_units(const DyadicAddress& addr);
Rational temporal_hi_units(const DyadicAddress& addr);

struct ParabolicRectangle {
  std::vector<Rational> center;
  Rational top_time;
  Rational side;
  long double gamma = 0;
  Rational t_lo, t_hi;  // exact body bounds in time

  int n() const { return static_cast<int>(center.size()); }
  Rational l_x() const { return side; }
  Rational l_t() const { return t_hi - t_lo; }
  Rational measure() const;
  Rational x_lo(int axis) const { return center[axis] - side / 2; }
  Rational x_hi(int axis) const { return center[axis] + side / 2; }
};

ParabolicRectangle make_rectangle(const Geometry& geom, const std::vector<Rational>& center,
                                  const Rational& top_time, const Rational& side, const Rational& gamma);

// shift: extra temporal translation in root time units (for non-lattice views).
ParabolicRectangle realize(const DyadicAddress& addr, const Rational& shift = Rational(0));

ParabolicRectangle translate(const ParabolicRectangle& rect, const Rational& theta);

// θ with R^θ = R⁺(γ): (1+γ)/(1−γ).
Rational plus_translation(const Rational& gamma);

StoppingParams default_parameters(const Geometry& geom);

struct ParameterCheck {
  bool ok = true;
  std::array<bool, 5> conditions{};
  std::string failed;  // names of failing conditions, e.g. "iii"
};
ParameterCheck check_parameters(const StoppingParams& params, const Geometry& geom);

std::string address_string(const DyadicAddress& a);

}  // namespace parporo
