#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "parporo/geometry.hpp"
#include "parporo/interval.hpp"
#include "parporo/porosity.hpp"
#include "parporo/sets.hpp"

namespace parporo {

// ---------------------------------------------------------------------------
// Doubling chain (level-1 base cell P, target in R^ψ)

struct ChainInput {
  Rational psi{2};
  Rational c0{Rational(1, 2)};
  Rational theta1{2}, theta2{2};
  Rational theta{2};  // porosity lag of each chain step
  // Spatial/temporal indices of the level-(m+1) endpoints; defaults are the
  // first cell of P and the last cell of the translated root.
  std::optional<std::array<std::int64_t, kMaxDim>> q0_spatial, target_spatial;
  std::optional<std::int64_t> q0_temporal, target_temporal;
};

// A block of `count` identical corrections. ξ in units of l_x(R), τ in units
// of l_t(R).
struct CorrectionRun {
  BigInt first;
  BigInt count;
  std::vector<Rational> xi;
  Rational tau;
};

struct ChainPlan {
  std::shared_ptr<const Root> root;
  DyadicAddress P, q0, target;  // target lives in R; the chain aims at target + (0, ψ)
  ChainInput input;
  Interval eps_max;
  long double C1 = 0;
  int m = 0;
  BigInt N1, N2, N3;
  Rational Lx, Lt;  // root-normalized sides of Q_0
  std::vector<Rational> y;
  Rational s;
  std::vector<CorrectionRun> corrections;

  Rational min_overlap;  // smallest (1 - τ/L_t) Π (1 - |ξ_k|/L_x) over steps
  bool boundaries_ok = false;
  bool overlap_ok = false;
  bool alignment_ok = false;
  bool order_ok = false;
  std::string failure;
  bool ok() const { return boundaries_ok && overlap_ok && alignment_ok && order_ok; }

  // Lower-left spatial corner and lower time of Q_i in root units.
  std::pair<std::vector<Rational>, Rational> q_corner(const BigInt& i) const;
};

Interval eps_max_value(const Rational& c0, int n);

// Builds the root (to the needed depth) and the plan for the level-1 cell
// with the given indices.
ChainPlan doubling_chain(const Geometry& geom, const RootSpec& spec, const std::array<std::int64_t, kMaxDim>& p_spatial,
                         std::int64_t p_temporal, const ChainInput& input);

// ---------------------------------------------------------------------------
// Stopping time machinery

struct ThetaGrid {
  std::vector<Rational> values;
};
// Integers of [φ-θ0, Φ-θ0], optionally with the midpoints between them.
ThetaGrid make_theta_grid(const StoppingParams& params, bool midpoints = false);

struct StoppingOutcome {
  std::optional<int> tau;
  Rational witness_theta;
  Rational witness_measure;
  bool cap_limited = false;  // some hole search hit the cap without a hole
};

// Evaluates τ_Λ with hole searches reaching down to absolute level depth_cap.
// Caches holes by (address, shift) and τ by address; single-threaded.
class StoppingContext {
 public:
  StoppingContext(const ClosedSetModel& E, const Root& root, Rational Lambda, StoppingParams params, int depth_cap,
                  ThetaGrid grid);

  const StoppingOutcome& tau(const DyadicAddress& P);
  // |M(cell^θ)| with θ in own slab units.
  const HoleResult& hole(const DyadicAddress& cell, const Rational& theta);

  const Rational& Lambda() const { return Lambda_; }
  const StoppingParams& params() const { return params_; }
  int depth_cap() const { return depth_cap_; }
  const ThetaGrid& grid() const { return grid_; }
  std::size_t hole_searches() const { return holes_.size(); }

 private:
  struct HoleKey {
    DyadicAddress a;
    Rational theta;
    bool operator==(const HoleKey& o) const { return a == o.a && theta == o.theta; }
  };
  struct HoleKeyHash {
    std::size_t operator()(const HoleKey& k) const noexcept;
  };
  FreenessViews views_;
  const Root& root_;
  Rational Lambda_;
  StoppingParams params_;
  int depth_cap_;
  ThetaGrid grid_;
  std::unordered_map<HoleKey, HoleResult, HoleKeyHash> holes_;
  std::unordered_map<DyadicAddress, StoppingOutcome, AddressHash> taus_;
};

StoppingOutcome stopping_time(const ClosedSetModel& E, const DyadicAddress& P, const Rational& Lambda,
                              const StoppingParams& params, int depth_cap, const ThetaGrid& grid);

struct StoppingPartition {
  Rational Lambda;
  StoppingParams params;
  int depth_cap = 0;
  std::vector<DyadicAddress> base;  // A, sorted
  std::map<DyadicAddress, StoppingOutcome, decltype(&address_less)> base_tau{&address_less};
  std::vector<std::vector<DyadicAddress>> S;  // S[k-1] = S_k, each sorted
  std::vector<Rational> union_measure;        // |∪S_k| as fraction of |root|
  std::vector<DyadicAddress> untermin;        // base members with no τ under the cap/grid
  bool cap_limited = false;
  bool index_law_ok = true;  // τ(π_i^+P) = τ(P) - i along every chain
  std::string index_law_violation;
};

StoppingPartition stopping_partition(const ClosedSetModel& E, const Root& root, const std::vector<DyadicAddress>& A,
                                     const Rational& Lambda, const StoppingParams& params, int depth_cap,
                                     const ThetaGrid& grid, int threads = 1);

struct CheckResult {
  bool ok = true;
  std::string detail;  // first violation
};

CheckResult verify_nesting(const StoppingPartition& part);
CheckResult verify_disjoint_from_F(const StoppingPartition& part, const CollectionReport& F);
CheckResult verify_covers_base(const StoppingPartition& part);
CheckResult verify_proper_subsets(const StoppingPartition& part);
CheckResult verify_parent_images_disjoint(const StoppingPartition& part);

struct DecayReport {
  Rational lambda;  // 1 - 1/(2^{dn} k_ceil)
  long double lambda_hat = 0;
  std::vector<long double> ratios;  // |∪S_{k+1}| / |∪S_1|
  bool pass = true;
};
DecayReport decay_check(const StoppingPartition& part, const Geometry& geom);

// Empirical single-step doubling ratio min |M(π_{j-1}^+P)| / |M(π_j^+P^ψ)| over
// the partition's chains and the θ-grid, skipping zero measures.
struct SigmaEstimate {
  std::optional<Rational> sigma;
  std::size_t pairs = 0;
};
SigmaEstimate measure_sigma(StoppingContext& ctx, const StoppingPartition& part);

struct InterimReport {
  long double prefactor = 0;
  long double exponent = 0;  // -dp ln2 / ln σ
  long double psi_bound = 0;
  bool contained = true;
  std::string detail;
};
long double interim_prefactor(const Geometry& geom, const StoppingParams& params);
InterimReport interim_bound(const Geometry& geom, const Rational& delta, long double sigma,
                            const StoppingParams& params, const StoppingPartition* part = nullptr);

// Chain gap: for all cells at levels 1..depth and every j <= level,
// dist_t(∂low P, ∂low π_j^+P) < 2θ0 2^{dp}/(2^{dp}-1) l_t(π_j^+P). Temporal
// indices are enumerated exhaustively (the gap does not depend on space).
struct ChainGapReport {
  std::size_t checked = 0;
  std::size_t violations = 0;
  long double worst_ratio = 0;  // max of gap / bound
};
ChainGapReport chain_gap_check(const Root& root, std::int64_t theta0, std::size_t max_cells = 50'000'000);

}  // namespace parporo
