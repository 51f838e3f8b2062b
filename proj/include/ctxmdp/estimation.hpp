#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "ctxmdp/design_matrix.hpp"
#include "ctxmdp/glm.hpp"
#include "ctxmdp/mdp.hpp"

namespace ctxmdp {

/// Observations of one state-action pair, ordered by episode. Features are
/// stored column-major, one column per visit.
struct PairLog {
  std::vector<int> episodes;
  std::vector<double> side_info;            // d x visits
  std::vector<double> reward_features;      // m x visits
  std::vector<double> transition_features;  // n x visits
  std::vector<double> rewards;              // realized r_{x_u}(s,a)
  std::vector<int> next_states;             // observed successor (local index)

  int visits() const { return static_cast<int>(episodes.size()); }

  Eigen::Map<const Eigen::MatrixXd> reward_design(int m) const {
    return {reward_features.data(), m, visits()};
  }
  Eigen::Map<const Eigen::MatrixXd> transition_design(int n) const {
    return {transition_features.data(), n, visits()};
  }
  Eigen::Map<const Eigen::VectorXd> reward_responses() const {
    return {rewards.data(), visits()};
  }
  /// 1{s'_u = next_state} for every visit.
  Eigen::VectorXd transition_responses(int next_state) const;
};

/// Design matrices M (per pair, psi features) and N (per triple, phi
/// features) plus the observation log they were built from.
///
/// A visit of (s,a) updates N for every successor s' of (s,a); the logged
/// response for s' is the indicator of whether s' was reached.
class SufficientStats {
 public:
  SufficientStats(TopologyPtr topology, FeatureMaps maps,
                  long refresh_period = DesignMatrix::kDefaultRefreshPeriod);

  /// Reassembles stats from checkpointed parts.
  SufficientStats(TopologyPtr topology, FeatureMaps maps, std::vector<PairLog> logs,
                  std::vector<DesignMatrix> reward_matrices,
                  std::vector<DesignMatrix> transition_matrices, int episodes_recorded);

  const LayeredTopology& topology() const { return *topology_; }
  const TopologyPtr& topology_ptr() const { return topology_; }
  const FeatureMaps& feature_maps() const { return maps_; }

  void record_episode(const Trajectory& trajectory);

  const DesignMatrix& reward_matrix(int pair) const { return reward_matrices_[pair]; }
  const DesignMatrix& transition_matrix(int triple) const { return transition_matrices_[triple]; }
  const std::vector<DesignMatrix>& reward_matrices() const { return reward_matrices_; }
  const std::vector<DesignMatrix>& transition_matrices() const { return transition_matrices_; }
  const PairLog& log(int pair) const { return logs_[pair]; }
  const std::vector<PairLog>& logs() const { return logs_; }
  int visits(int pair) const { return logs_[pair].visits(); }
  int episodes_recorded() const { return episodes_recorded_; }

  /// I + sum of logged outer products, recomputed from the log.
  Eigen::MatrixXd rebuild_reward_matrix(int pair) const;
  Eigen::MatrixXd rebuild_transition_matrix(int triple) const;

 private:
  TopologyPtr topology_;
  FeatureMaps maps_;
  std::vector<PairLog> logs_;
  std::vector<DesignMatrix> reward_matrices_;
  std::vector<DesignMatrix> transition_matrices_;
  int episodes_recorded_ = 0;
};

/// Free-function form of SufficientStats::record_episode.
inline void record_episode(SufficientStats& stats, const Trajectory& trajectory) {
  stats.record_episode(trajectory);
}

struct MqleOptions {
  int max_iterations = 100;
  double tolerance = 1e-8;  // on ||score||
};

struct MqleResult {
  /// Estimate after projection onto the norm ball.
  Eigen::VectorXd params;
  /// Root of the score equation before projection.
  Eigen::VectorXd unprojected;
  bool converged = false;
  int iterations = 0;
  /// ||sum_u (y_u - sigma(w_u^T p)) w_u|| at the unprojected solution.
  double residual = 0.0;
  bool projected = false;
};

/// Maximum quasi-likelihood estimate: zeroes the score
/// sum_u (y_u - sigma(w_u^T p)) w_u by damped Newton iterations, then
/// projects onto the ball ||p|| <= norm_bound.
///
/// `features` holds one observation per column. On a rank-deficient design
/// the iterates stay in the span of the observed features, so a zero start
/// yields the minimum-norm root. When `converged` is false the caller is
/// expected to keep its previous estimate.
MqleResult solve_mqle(const Eigen::Ref<const Eigen::MatrixXd>& features,
                      const Eigen::Ref<const Eigen::VectorXd>& responses, const LinkFunction& link,
                      double norm_bound, const MqleOptions& options = {},
                      const std::optional<Eigen::VectorXd>& warm_start = std::nullopt);

/// ||sum_u (y_u - sigma(w_u^T p)) w_u||, using the link's working mean.
double mqle_score_residual(const Eigen::Ref<const Eigen::MatrixXd>& features,
                           const Eigen::Ref<const Eigen::VectorXd>& responses,
                           const LinkFunction& link, const Eigen::Ref<const Eigen::VectorXd>& params);

}  // namespace ctxmdp
