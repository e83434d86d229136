#pragma once

#include <cstddef>
#include <vector>

#include "parporo/geometry.hpp"
#include "parporo/interval.hpp"
#include "parporo/porosity.hpp"
#include "parporo/sets.hpp"

namespace parporo {

// w = dist_p(., E)^{-q} with q = beta * (n + p).
struct WeightSpec {
  Rational beta;
  int n = 1;
  Rational p{2};
  double q = 0;
};

WeightSpec make_weight_spec(const Geometry& geom, const Rational& beta);

struct IntegralResult {
  Interval value;
  bool converged = false;
  bool one_sided = false;  // upper bound unavailable near E for this model
  bool divergent = false;  // the integral is +inf
  std::size_t cells = 0;
};

inline constexpr std::size_t kDefaultQuadCells = 1u << 21;

// ∫_rect w. Stops once width <= tol * value or the cell budget is spent.
IntegralResult integrate_weight(const ClosedSetModel& E, const ParabolicRectangle& rect, const WeightSpec& spec,
                                double tol, std::size_t max_cells = kDefaultQuadCells);

struct EssinfResult {
  Interval value;
  Interval sup_distance;
  bool converged = false;
};

EssinfResult essinf_weight(const ClosedSetModel& E, const ParabolicRectangle& rect, const WeightSpec& spec,
                           double tol);

struct A1Result {
  Interval integral;
  Interval average;
  Interval essinf;
  Interval ratio;
  Interval sup_distance;
  bool unbounded = false;
  bool converged = false;
  bool one_sided = false;
};

A1Result a1_ratio(const ClosedSetModel& E, const ParabolicRectangle& rect, const Rational& theta,
                  const WeightSpec& spec, double tol, std::size_t max_cells = kDefaultQuadCells);
A1Result a1_ratio(const ClosedSetModel& E, const DyadicAddress& addr, const Rational& theta, const WeightSpec& spec,
                  double tol, std::size_t max_cells = kDefaultQuadCells);

struct A1Sample {
  int id = 0;
  RootSpec root;
  A1Result result;
  int redraws = 0;
};

struct A1ScanReport {
  Rational theta;
  WeightSpec spec;
  double tol = 0;
  std::vector<A1Sample> samples;
  Interval sup_ratio;  // [max of lower ends, max of upper ends]
  int witness = 0;
  int unbounded_samples = 0;
  int one_sided_samples = 0;
  int unconverged_samples = 0;
};

A1ScanReport a1_scan(const ClosedSetModel& E, const Geometry& geom, const SamplerConfig& sampler,
                     const Rational& theta, const WeightSpec& spec, double tol, int threads = 0,
                     std::size_t max_cells = kDefaultQuadCells);

// Constant of the annular estimate for E-free rectangles:
// 2^{a(n+p)} (n+p) Σ_{i>=1} 2^{(a(n+p)-1) i}. Requires a(n+p) < 1.
Interval annular_constant(int n, double p, double alpha);

}  // namespace parporo
