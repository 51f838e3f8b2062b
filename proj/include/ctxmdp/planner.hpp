#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

#include "ctxmdp/confidence.hpp"
#include "ctxmdp/mdp.hpp"

namespace ctxmdp {

class InfeasibleBand : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Feasibility slack on sum(lo) <= 1 <= sum(hi).
inline constexpr double kBandFeasibilityTolerance = 1e-12;

/// argmax_P sum_k P_k w_k subject to lo <= P <= hi, sum P = 1.
///
/// Greedy water-filling: every successor starts at its lower bound and the
/// remaining mass goes to successors in decreasing order of w, each up to
/// its upper bound. Ties in w keep index order. Throws InfeasibleBand when
/// sum(lo) > 1 or sum(hi) < 1.
Eigen::VectorXd optimistic_transition_row(const Eigen::Ref<const Eigen::VectorXd>& lo,
                                          const Eigen::Ref<const Eigen::VectorXd>& hi,
                                          const Eigen::Ref<const Eigen::VectorXd>& w);

struct PlanDiagnostics {
  /// Row entries visited while building P*; equals C |A| on full layers.
  long long row_operations = 0;
  /// Rows whose band was infeasible and got the normalized centers instead.
  int infeasible_rows = 0;
  double max_row_sum_error = 0.0;
};

/// Jointly optimistic policy, kernel and reward over a set of bands.
struct OptimisticPlan {
  Policy policy;
  TransitionKernel kernel;
  RewardFunction reward;
  /// w(s) per layer; the terminal layer is zero.
  std::vector<Eigen::VectorXd> values;
  PlanDiagnostics diagnostics;

  double root_value() const { return values.front()[0]; }
};

/// Extended dynamic programming: backward induction where each (s,a) takes
/// r*(s,a) = r+(s,a) and the band-feasible row maximizing the expected
/// next-layer value. Returns the maximizer of W(r, pi, P) over the bands.
OptimisticPlan optimistic_plan(const TopologyPtr& topology, const ConfidenceBands& bands);

/// Normalized band centers, the substitute for an infeasible row.
Eigen::VectorXd normalized_centers(const Eigen::Ref<const Eigen::VectorXd>& centers);

/// Exact optimum by enumerating every policy and, per row, every vertex of
/// the band polytope. Intended as a test oracle for small instances (at
/// most 256 policies and 6 successors per row); throws std::invalid_argument
/// beyond that.
double brute_force_optimistic(const TopologyPtr& topology, const ConfidenceBands& bands);

}  // namespace ctxmdp
