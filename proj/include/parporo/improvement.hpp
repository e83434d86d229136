#pragma once

#include <optional>
#include <string>
#include <vector>

#include "parporo/geometry.hpp"
#include "parporo/porosity.hpp"
#include "parporo/sets.hpp"
#include "parporo/weights.hpp"

namespace parporo {

struct TowerPartition {
  std::vector<Rational> deltas;
  Rational theta;
  int depth_cap = 0;
  std::vector<std::vector<DyadicAddress>> C;  // C[i], sorted
  std::vector<Rational> coverage;             // covered fraction of F_{δ_i}
  std::vector<Rational> layer_measure;        // Σ_{C_i} |P| / |R|
  Rational residual;                          // 1 - Σ_i layer_measure[i]
  bool union_ok = true;     // ∪_{i<=k} C_i = F_{δ_k}
  bool disjoint_ok = true;  // all members pairwise disjoint
  bool bound_ok = true;     // layer_measure[i] <= 1 - coverage[i-1]
  bool cap_hit = false;
};

TowerPartition tower_partition(const ClosedSetModel& E, const DyadicAddress& root, const std::vector<Rational>& deltas,
                               const Rational& theta, int depth_cap);

struct AlphaFit {
  double alpha_hat = 0;
  double K_hat = 0;
  double eta_hat = 0;
  double r_squared = 0;
  int floored = 0;  // points whose 1-c was raised to the floor
  bool improving = false;
};

// Least squares of log(1-c) against log δ. Points are (δ, 1-c).
AlphaFit alpha_fit(const std::vector<std::pair<double, double>>& points, double floor = 1e-12);

struct HarnessConfig {
  std::uint64_t seed = 1;
  int samples = 12;
  int depth_cap = 4;
  int delta_exponents = 18;  // δ = 2^{-1} ... 2^{-delta_exponents}
  Rational theta_cross{2};
  double a1_tol = 1e-2;
  int a1_samples = 4;
  double cross_tolerance = 0.1;
  int threads = 0;
  std::optional<StoppingParams> params;  // Φ defaults to k_ceil - 1
  std::optional<SamplerConfig> sampler;
};

struct CrossTheta {
  Rational theta_a, theta_b;
  int best_shift = 0;  // δ_b = 2^{shift} δ_a
  double discrepancy = 0;
  bool agree = false;
};

struct HarnessReport {
  std::string verdict;  // consistent | inconsistent | inconclusive
  std::string starved_stage;
  std::vector<std::string> reasons;
  Rational Phi;
  PorosityReport scan;
  std::vector<std::pair<double, double>> fit_points;  // (δ, 1-c) fed to the fit
  AlphaFit fit;
  Rational beta_used;
  std::optional<A1ScanReport> a1;
  std::optional<PorosityReport> cross_scan;
  CrossTheta cross;
};

HarnessReport characterization_harness(const ClosedSetModel& E, const Geometry& geom, const HarnessConfig& cfg);

std::vector<Rational> dyadic_delta_grid(int count);

}  // namespace parporo
