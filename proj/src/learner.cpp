#include "ctxmdp/learner.hpp"

#include <stdexcept>

namespace ctxmdp {

EpisodeOutcome Learner::learn_episode(const Eigen::VectorXd& side_info,
                                      const EpisodeSource& source, int episode, Rng& rng) {
  EpisodeOutcome outcome{decide(side_info), {}, {}};
  outcome.trajectory = source.rollout(side_info, outcome.decision.policy, episode, rng);
  outcome.refresh = observe(outcome.trajectory);
  return outcome;
}

OfuLearner::OfuLearner(TopologyPtr topology, FeatureMaps maps, LinkFunction link,
                       LearnerConfig config)
    : topology_(std::move(topology)),
      link_(link),
      config_(config),
      stats_(topology_, std::move(maps), config.design_refresh_period),
      estimates_(ParameterTables::zeros(*topology_, stats_.feature_maps().transition.output_dim(),
                                        stats_.feature_maps().reward.output_dim(),
                                        config.norm_bound)),
      raw_(estimates_),
      solved_visits_(topology_->num_pairs(), 0) {
  if (!(config_.confidence.delta > 0.0 && config_.confidence.delta < 1.0)) {
    throw std::invalid_argument("confidence parameter must lie in (0,1)");
  }
}

OfuLearner::OfuLearner(LinkFunction link, LearnerConfig config, SufficientStats stats,
                       ParameterTables estimates, ParameterTables raw,
                       std::vector<int> solved_visits)
    : topology_(stats.topology_ptr()),
      link_(link),
      config_(config),
      stats_(std::move(stats)),
      estimates_(std::move(estimates)),
      raw_(std::move(raw)),
      solved_visits_(std::move(solved_visits)) {
  estimates_.validate(*topology_);
  if (static_cast<int>(solved_visits_.size()) != topology_->num_pairs()) {
    throw std::invalid_argument("learner checkpoint does not match the topology");
  }
}

OfuLearner::EpisodePlan OfuLearner::plan_episode(const Eigen::VectorXd& side_info) const {
  ConfidenceBands bands =
      build_bands(side_info, estimates_, stats_, link_, config_.confidence, episode());
  OptimisticPlan plan = optimistic_plan(topology_, bands);
  Policy policy = plan.policy;
  return {std::move(policy), std::move(plan), std::move(bands)};
}

EpisodeDecision OfuLearner::decide(const Eigen::VectorXd& side_info) {
  EpisodePlan ep = plan_episode(side_info);
  return {std::move(ep.policy), ep.plan.root_value(), ep.plan.diagnostics.infeasible_rows,
          ep.plan.diagnostics.max_row_sum_error};
}

RefreshReport OfuLearner::observe(const Trajectory& trajectory) {
  stats_.record_episode(trajectory);
  return refresh_estimates();
}

bool OfuLearner::stale(int pair) const {
  const int visits = stats_.visits(pair);
  if (visits == solved_visits_[pair]) return false;
  if (config_.refresh == RefreshSchedule::doubling) {
    return solved_visits_[pair] == 0 || visits >= 2 * solved_visits_[pair];
  }
  return true;
}

RefreshReport OfuLearner::refresh_estimates() {
  RefreshReport report;
  for (int p = 0; p < topology_->num_pairs(); ++p) {
    if (stale(p)) solve_pair(p, report);
  }
  return report;
}

void OfuLearner::solve_pair(int pair, RefreshReport& report) {
  const PairLog& log = stats_.log(pair);
  const auto& maps = stats_.feature_maps();

  auto solve = [&](const auto& design, const Eigen::VectorXd& y, auto raw_col, auto est_col) {
    MqleResult r = solve_mqle(design, y, link_, config_.norm_bound, config_.solver,
                              Eigen::VectorXd(raw_col));
    if (!r.converged) {
      report.iterations += r.iterations;
      r = solve_mqle(design, y, link_, config_.norm_bound, config_.solver);
    }
    ++report.solves;
    report.iterations += r.iterations;
    if (!r.converged) {
      // Keep the previous estimate.
      ++report.failures;
      return;
    }
    raw_col = r.unprojected;
    est_col = r.params;
  };

  const auto reward_design = log.reward_design(maps.reward.output_dim());
  solve(reward_design, Eigen::VectorXd(log.reward_responses()), raw_.lambda.col(pair),
        estimates_.lambda.col(pair));

  const int begin = topology_->triple_begin(pair);
  const int end = topology_->triple_end(pair);
  if (end - begin > 1) {
    const auto transition_design = log.transition_design(maps.transition.output_dim());
    auto succ = topology_->successors(pair);
    for (int k = begin; k < end; ++k) {
      solve(transition_design, log.transition_responses(succ[k - begin]), raw_.theta.col(k),
            estimates_.theta.col(k));
    }
  }
  solved_visits_[pair] = log.visits();
}

std::unique_ptr<OfuLearner> make_context_blind_learner(TopologyPtr topology, int side_info_dim,
                                                        double x_max, LinkFunction link,
                                                        LearnerConfig config) {
  FeatureMaps maps{FeatureMap::constant(side_info_dim), FeatureMap::constant(side_info_dim),
                   x_max};
  return std::make_unique<OfuLearner>(std::move(topology), maps, link, config);
}

RandomLearner::RandomLearner(TopologyPtr topology, std::uint64_t seed)
    : topology_(std::move(topology)), rng_(seed) {}

EpisodeDecision RandomLearner::decide(const Eigen::VectorXd&) {
  const int nonterminal = topology_->state_id(topology_->horizon(), 0);
  std::uniform_int_distribution<int> pick(0, topology_->num_actions() - 1);
  std::vector<int> actions(nonterminal);
  for (int& a : actions) a = pick(rng_);
  return {Policy(topology_, std::move(actions))};
}

}  // namespace ctxmdp
