#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "parporo/geometry.hpp"
#include "parporo/interval.hpp"
#include "parporo/sets.hpp"

namespace parporo {

inline constexpr std::size_t kDefaultNodeBudget = 4'000'000;

struct HoleResult {
  std::optional<DyadicAddress> address;
  Rational shift;    // temporal view shift (root time units) the address lives in
  Rational measure;  // as a fraction of |root|
  Rational side;     // l_x of the hole, 0 when none
  bool cap_hit = false;
  bool unknown_seen = false;
  bool budget_hit = false;
};

struct CollectionReport {
  std::vector<DyadicAddress> rectangles;  // sorted with address_less
  Rational shift;
  Rational total_measure;     // fraction of |root|
  Rational covered_fraction;  // total_measure / |start|
  bool depth_cap_hit = false;
  bool unknown_seen = false;
  bool budget_hit = false;
  std::optional<Rational> reference_hole;  // |M(R^θ)| for admissible collections
};

// Caches one LatticeFreeness per temporal shift of a root lattice.
class FreenessViews {
 public:
  FreenessViews(const ClosedSetModel& E, const Root& root) : E_(E), root_(root) {}
  const LatticeFreeness& view(const Rational& shift);
  const ClosedSetModel& set() const { return E_; }
  const Root& root() const { return root_; }

 private:
  const ClosedSetModel& E_;
  const Root& root_;
  std::map<Rational, std::unique_ptr<LatticeFreeness>> views_;
};

HoleResult maximal_hole(const LatticeFreeness& oracle, const DyadicAddress& start, int depth_cap,
                        std::size_t max_nodes = kDefaultNodeBudget);
HoleResult maximal_hole(const ClosedSetModel& E, const DyadicAddress& start, int depth_cap);

// M(start^θ): integer θ stays inside the extended lattice, other θ use a
// shifted view.
HoleResult translated_hole(FreenessViews& views, const DyadicAddress& start, const Rational& theta, int depth_cap,
                           std::size_t max_nodes = kDefaultNodeBudget);

CollectionReport free_collection(const LatticeFreeness& oracle, const DyadicAddress& start, int depth_cap,
                                 std::size_t max_nodes = kDefaultNodeBudget);
CollectionReport free_collection(const ClosedSetModel& E, const DyadicAddress& start, int depth_cap);

CollectionReport admissible_collection(FreenessViews& views, const DyadicAddress& start, const Rational& delta,
                                       const Rational& theta, int depth_cap,
                                       std::size_t max_nodes = kDefaultNodeBudget);
CollectionReport admissible_collection(const ClosedSetModel& E, const DyadicAddress& start, const Rational& delta,
                                       const Rational& theta, int depth_cap);

// Maximal dyadic subrectangles of start disjoint from ∪F whose parent meets ∪F.
CollectionReport complementary_of(const CollectionReport& F, const DyadicAddress& start, int depth_cap);
CollectionReport complementary_collection(const ClosedSetModel& E, const DyadicAddress& start, const Rational& delta,
                                          const Rational& theta, int depth_cap);

// Counts of maximal free cells per level below start (index = relative level).
struct FreeProfile {
  std::vector<std::int64_t> free_per_level;
  bool cap_hit = false;
  bool unknown_seen = false;
  bool budget_hit = false;
};
FreeProfile free_profile(const LatticeFreeness& oracle, const DyadicAddress& start, int depth_cap,
                         std::size_t max_nodes = kDefaultNodeBudget);

// Covered fraction of start by the members of the profile admitted at δ.
Rational profile_coverage(const FreeProfile& prof, const DyadicAddress& start, const Rational& delta,
                          const Rational& reference_hole);

Rational union_measure(const std::vector<DyadicAddress>& cells);
bool pairwise_disjoint(const std::vector<DyadicAddress>& cells);

struct SamplerConfig {
  std::vector<Rational> center_lo, center_hi;
  Rational tmid_lo, tmid_hi;  // midpoint of the root's time slab
  Rational side_lo{1}, side_hi{1};
  Rational gamma_lo{0}, gamma_hi{Rational(1, 2)};
  int samples = 16;
  std::uint64_t seed = 1;
  std::optional<RootSpec> base;  // when set, sample 0 is this root
};

SamplerConfig default_sampler(int n);
// Deterministic in (config, index); redraws when a γ0 lands on an ambiguous
// k-branch, counting attempts in *redraws.
RootSpec draw_root(const Geometry& geom, const SamplerConfig& cfg, int index, int depth, int* redraws = nullptr);

struct ScanOptions {
  int depth_cap = 3;
  std::size_t max_nodes = kDefaultNodeBudget;
  int threads = 0;
};

struct PorositySample {
  int id = 0;
  RootSpec root;
  Rational reference_hole;
  std::vector<Rational> covered;  // one entry per δ
  bool cap_hit = false;
  bool unknown_seen = false;
  bool budget_hit = false;
  bool starved = false;
  int redraws = 0;
};

struct PorosityPoint {
  Rational delta;
  Rational empirical_c;
  int witness = 0;
};

struct PorosityReport {
  std::vector<Rational> deltas;
  Rational theta;
  int depth_cap = 0;
  std::vector<PorositySample> samples;
  std::vector<PorosityPoint> curve;
  int cap_hits = 0;
  int starved_samples = 0;
  bool starved() const { return starved_samples > 0; }
};

PorosityReport porosity_scan(const ClosedSetModel& E, const Geometry& geom, const SamplerConfig& sampler,
                             const std::vector<Rational>& deltas, const Rational& theta, const ScanOptions& opts);

struct SupBracket {
  Interval value;
  bool converged = false;
  std::size_t cells = 0;
};

// Branch and bound for sup over a closed box of dist_p(., E).
SupBracket sup_distance_bracket(const ClosedSetModel& E, const STBox& box, double p, double abs_tol,
                                std::size_t max_cells = 400000);

SupBracket hole_esssup_bracket(const ClosedSetModel& E, const DyadicAddress& addr, double abs_tol,
                               std::size_t max_cells = 400000, const Rational& shift = Rational(0));

}  // namespace parporo
