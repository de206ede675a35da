#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bellow/actuator.hpp"
#include "bellow/segmentation.hpp"
#include "bellow/surrogate.hpp"

namespace bellow {

// Shared parameters of every module in the actuator.
struct SharedParams {
  double r_in = 0.0;
  double t = 0.0;
  double P = 0.0;  // kPa

  friend bool operator==(const SharedParams&, const SharedParams&) = default;
};

// Per-segment module geometry.
struct SegmentParams {
  double R = 0.0;
  double l = 0.0;

  friend bool operator==(const SegmentParams&, const SegmentParams&) = default;
};

struct MatchBudget {
  int upper_iters = 1000;
  int lower_iters = 15;

  friend bool operator==(const MatchBudget&, const MatchBudget&) = default;
};

struct MatchProblem {
  std::vector<ArcSegment> segments;  // lines are planned with rigid modules
  double p_max = 10.0;               // kPa
  std::optional<double> kappa_max;   // defaults to the largest arc curvature
  double r_ou_min = 0.0;
  double r_ou_max = 0.0;
  MatchBudget budget;
  double target_cost = 0.02;
  std::uint64_t seed = 0;
  // Run the per-segment lower-level searches on worker threads.
  bool parallel = true;

  double effective_kappa_max() const;
};

// Throws ValidationError for problems that cannot be posed at all. P_max = 0
// is accepted and reported as an infeasible result.
void validate_problem(const MatchProblem& p);

// Number of modules approximating a length L with modules of length l.
int module_count(double L, double l);

// Weighted shape mismatch of one segment. Throws ValidationError when (x, y)
// violates the constraints for `seg`.
double segment_cost(const SharedParams& x, const SegmentParams& y, const ArcSegment& seg,
                    const SurrogateModel& surrogate);
// Same value without the constraint check.
double segment_cost_unchecked(const SharedParams& x, const SegmentParams& y, const ArcSegment& seg,
                              const SurrogateModel& surrogate);

// Every violated row of the design constraints, by name; empty when feasible.
std::vector<std::string> feasibility_violations(const SharedParams& x, const SegmentParams& y, const ArcSegment& seg,
                                                double p_max, double kappa_max);

// Feasible region for y given x, parameterized as R in [R_lo, R_hi] and
// l in [l_lo, l_hi(R)) with l_hi(R) = min(L, 4 (R - r_in)).
struct LowerBox {
  double R_lo = 0.0, R_hi = 0.0;
  double l_lo = 0.0;
  double L = 0.0;
  double r_in = 0.0;

  bool empty() const;
  double l_hi(double R) const;
  // Maps unit coordinates into the box; v in [0, 1) covers [l_lo, l_hi(R)).
  SegmentParams at(double u, double v) const;
};

std::optional<LowerBox> lower_box(const SharedParams& x, const ArcSegment& seg, double r_ou_min, double r_ou_max);

struct LowerResult {
  bool feasible = false;
  SegmentParams y;
  double cost = 0.0;
  int evaluations = 0;
};

LowerResult optimize_lower(const SharedParams& x, const ArcSegment& seg, const SurrogateModel& surrogate,
                           int budget, std::uint64_t seed, double r_ou_min, double r_ou_max);

struct SegmentMatch {
  ArcSegment segment;
  double R = 0.0;
  double l = 0.0;
  int n = 0;               // identical modules on this segment
  double theta = 0.0;      // predicted per-module bend
  double cost = 0.0;       // d_j; 0 for lines
  double length_error = 0.0;  // L - n l
  bool rigid = false;

  friend bool operator==(const SegmentMatch&, const SegmentMatch&) = default;
};

struct MatchResult {
  bool feasible = false;
  std::vector<std::string> violations;
  SharedParams x;
  std::vector<SegmentMatch> segments;
  double mean_cost = 0.0;
  double kappa_max = 0.0;
  int upper_iterations = 0;
  int lower_evaluations = 0;
  std::uint64_t seed = 0;
  MatchBudget budget;
  bool extrapolated = false;  // the surrogate warned on the final design
  std::vector<double> best_cost_history;

  friend bool operator==(const MatchResult&, const MatchResult&) = default;
};

// Called after each upper-level evaluation with (iteration, budget, best mean).
using MatchProgress = std::function<void(int, int, double)>;

MatchResult optimize(const MatchProblem& problem, const SurrogateModel& surrogate,
                     const MatchProgress& progress = {});

struct StraightPlan {
  ModuleDesign module;  // rigid
  int count = 1;
  double length_error = 0.0;  // L - count l
};

// Rigid modules covering a straight segment. `reference` supplies R and l;
// l shrinks toward its lower bound 4t only when L is shorter than one module.
StraightPlan plan_straight(const ArcSegment& seg, const SharedParams& x, const SegmentParams& reference);

// Module stack for a feasible result. Throws ValidationError otherwise.
ActuatorSpec assemble(const MatchResult& result, const Material& material = agilus30());

}  // namespace bellow
