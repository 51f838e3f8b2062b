#pragma once

#include <Eigen/Dense>

#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "ctxmdp/confidence.hpp"
#include "ctxmdp/episode_source.hpp"
#include "ctxmdp/estimation.hpp"
#include "ctxmdp/planner.hpp"

namespace ctxmdp {

enum class RefreshSchedule {
  /// Re-solve a pair's estimates whenever its log grew.
  every_visit,
  /// Re-solve once the log has doubled since the last solve.
  doubling,
};

struct LearnerConfig {
  ConfidenceConfig confidence;
  MqleOptions solver;
  /// B: estimates are projected onto ||p|| <= B; also sets the slope floors.
  double norm_bound = 10.0;
  RefreshSchedule refresh = RefreshSchedule::every_visit;
  long design_refresh_period = DesignMatrix::kDefaultRefreshPeriod;
};

/// What a learner commits to before an episode.
struct EpisodeDecision {
  Policy policy;
  /// v-hat: optimistic root value, NaN for learners without a model.
  double optimistic_value = std::numeric_limits<double>::quiet_NaN();
  int infeasible_rows = 0;
  /// Largest |row sum - 1| of the planned kernel.
  double row_sum_error = 0.0;
};

/// Counters of the estimate refresh that followed an episode.
struct RefreshReport {
  int solves = 0;
  int iterations = 0;
  int failures = 0;
};

struct EpisodeOutcome {
  EpisodeDecision decision;
  Trajectory trajectory;
  RefreshReport refresh;
};

/// Common learner interface used by the experiment harness.
class Learner {
 public:
  virtual ~Learner() = default;

  virtual std::string name() const = 0;
  virtual EpisodeDecision decide(const Eigen::VectorXd& side_info) = 0;
  virtual RefreshReport observe(const Trajectory& trajectory) = 0;

  /// decide, roll out through `source`, observe.
  EpisodeOutcome learn_episode(const Eigen::VectorXd& side_info, const EpisodeSource& source,
                               int episode, Rng& rng);
};

/// Optimistic learner: MQLE estimates, confidence bands and extended
/// dynamic programming each episode.
class OfuLearner : public Learner {
 public:
  OfuLearner(TopologyPtr topology, FeatureMaps maps, LinkFunction link, LearnerConfig config);

  struct EpisodePlan {
    Policy policy;
    OptimisticPlan plan;
    ConfidenceBands bands;
  };

  std::string name() const override { return "ofu"; }

  /// Bands and optimistic plan for the next episode; does not mutate.
  EpisodePlan plan_episode(const Eigen::VectorXd& side_info) const;

  EpisodeDecision decide(const Eigen::VectorXd& side_info) override;
  RefreshReport observe(const Trajectory& trajectory) override;

  /// Re-solves every stale estimate. Calling it again without new data is a
  /// no-op.
  RefreshReport refresh_estimates();

  /// Index of the next episode (recorded episodes + 1).
  int episode() const { return stats_.episodes_recorded() + 1; }
  const SufficientStats& stats() const { return stats_; }
  const ParameterTables& estimates() const { return estimates_; }
  const LearnerConfig& config() const { return config_; }
  const LinkFunction& link() const { return link_; }
  const TopologyPtr& topology() const { return topology_; }

  /// Unprojected solver outputs used as warm starts.
  const ParameterTables& raw_estimates() const { return raw_; }
  /// Log length at the last solve, per pair.
  const std::vector<int>& solved_visits() const { return solved_visits_; }

  /// Restores a checkpointed learner.
  OfuLearner(LinkFunction link, LearnerConfig config, SufficientStats stats,
             ParameterTables estimates, ParameterTables raw, std::vector<int> solved_visits);

 private:
  bool stale(int pair) const;
  void solve_pair(int pair, RefreshReport& report);

  TopologyPtr topology_;
  LinkFunction link_;
  LearnerConfig config_;
  SufficientStats stats_;
  ParameterTables estimates_;
  ParameterTables raw_;
  std::vector<int> solved_visits_;
};

/// The optimistic learner with constant features phi(x) = psi(x) = (1):
/// the same loop, blind to side information.
std::unique_ptr<OfuLearner> make_context_blind_learner(TopologyPtr topology, int side_info_dim,
                                                        double x_max, LinkFunction link,
                                                        LearnerConfig config);

/// Uniformly random deterministic policy each episode.
class RandomLearner : public Learner {
 public:
  RandomLearner(TopologyPtr topology, std::uint64_t seed);

  std::string name() const override { return "random"; }
  EpisodeDecision decide(const Eigen::VectorXd& side_info) override;
  RefreshReport observe(const Trajectory&) override { return {}; }

 private:
  TopologyPtr topology_;
  Rng rng_;
};

}  // namespace ctxmdp
