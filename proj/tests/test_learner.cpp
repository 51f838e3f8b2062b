#include <doctest.h>

#include <cmath>

#include "ctxmdp/environment.hpp"
#include "ctxmdp/experiment.hpp"
#include "ctxmdp/learner.hpp"
#include "helpers.hpp"

using namespace ctxmdp;

namespace {

LearnerConfig config_for(const EnvironmentSpec& spec, double rho_scale = 1.0) {
  LearnerConfig c;
  c.norm_bound = spec.norm_bound;
  c.confidence.rho_scale = rho_scale;
  return c;
}

}  // namespace

TEST_CASE("first plan is optimistic under ignorance") {
  Rng rng(1);
  const EnvironmentSpec spec = default_fixture_spec();
  const GroundTruth truth = generate_environment(spec, rng);
  OfuLearner learner(truth.topology(), truth.feature_maps(), truth.link(), config_for(spec));
  CHECK(learner.episode() == 1);
  const auto ep = learner.plan_episode(truth.sample_side_info(rng));
  CHECK(ep.bands.reward_center.isConstant(0.5));
  CHECK(ep.plan.root_value() == doctest::Approx(4.0));
}

TEST_CASE("zero-width bands at the truth give the true optimal policy") {
  Rng rng(2);
  const GroundTruth truth = generate_environment(default_fixture_spec(), rng);
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd x = truth.sample_side_info(rng);
    const TrueModels m = truth.true_models(x);
    const OptimisticPlan plan = optimistic_plan(truth.topology(), test::exact_bands(m.kernel, m.reward));
    CHECK(plan.policy == best_policy(m.kernel, m.reward).policy);
  }
}

TEST_CASE("observing an episode records it and refreshes estimates") {
  Rng rng(3);
  const EnvironmentSpec spec = default_fixture_spec();
  const GroundTruth truth = generate_environment(spec, rng);
  OfuLearner learner(truth.topology(), truth.feature_maps(), truth.link(), config_for(spec));
  const Eigen::VectorXd x = truth.sample_side_info(rng);
  const EpisodeOutcome out = learner.learn_episode(x, truth, 1, rng);
  CHECK(learner.episode() == 2);
  CHECK(learner.stats().episodes_recorded() == 1);
  CHECK(out.refresh.solves >= 4);
  CHECK(out.refresh.failures == 0);
  CHECK(out.decision.row_sum_error <= 1e-12);
  CHECK(std::isfinite(out.decision.optimistic_value));

  const ParameterTables before = learner.estimates();
  const RefreshReport again = learner.refresh_estimates();
  CHECK(again.solves == 0);
  CHECK(learner.estimates().theta == before.theta);
  CHECK(learner.estimates().lambda == before.lambda);
}

TEST_CASE("estimates solve the score equations after a run") {
  Rng rng(4);
  const EnvironmentSpec spec = default_fixture_spec();
  const GroundTruth truth = generate_environment(spec, rng);
  OfuLearner learner(truth.topology(), truth.feature_maps(), truth.link(), config_for(spec, 0.1));
  int failures = 0;
  for (int t = 1; t <= 300; ++t) {
    failures += learner.learn_episode(truth.sample_side_info(rng), truth, t, rng).refresh.failures;
  }
  const auto& topo = *truth.topology();
  const auto& stats = learner.stats();
  for (int p = 0; p < topo.num_pairs(); ++p) {
    const PairLog& log = stats.log(p);
    if (log.visits() == 0) {
      CHECK(learner.estimates().lambda.col(p).isZero());
      continue;
    }
    if (failures == 0) {
      CHECK(mqle_score_residual(log.reward_design(spec.reward_dim), log.reward_responses(), truth.link(),
                                learner.raw_estimates().lambda.col(p)) <= 1e-8);
    }
    CHECK(learner.estimates().lambda.col(p).norm() <= spec.norm_bound + 1e-12);
  }
}

TEST_CASE("doubling refresh re-solves less often") {
  Rng rng_a(5), rng_b(5);
  const EnvironmentSpec spec = default_fixture_spec();
  Rng env(6);
  const GroundTruth truth = generate_environment(spec, env);
  LearnerConfig every = config_for(spec, 0.1);
  LearnerConfig doubling = every;
  doubling.refresh = RefreshSchedule::doubling;
  OfuLearner a(truth.topology(), truth.feature_maps(), truth.link(), every);
  OfuLearner b(truth.topology(), truth.feature_maps(), truth.link(), doubling);
  int solves_a = 0, solves_b = 0;
  for (int t = 1; t <= 200; ++t) {
    const Eigen::VectorXd x = truth.sample_side_info(rng_a);
    rng_b = rng_a;
    solves_a += a.learn_episode(x, truth, t, rng_a).refresh.solves;
    solves_b += b.learn_episode(x, truth, t, rng_b).refresh.solves;
  }
  CHECK(solves_b < solves_a / 4);
}

TEST_CASE("learners are deterministic for a fixed seed") {
  const EnvironmentSpec spec = default_fixture_spec();
  Rng env(7);
  const GroundTruth truth = generate_environment(spec, env);
  auto run = [&] {
    Rng rng(8);
    OfuLearner learner(truth.topology(), truth.feature_maps(), truth.link(), config_for(spec, 0.1));
    std::vector<int> states;
    for (int t = 1; t <= 100; ++t) {
      const Trajectory tr = learner.learn_episode(truth.sample_side_info(rng), truth, t, rng).trajectory;
      states.insert(states.end(), tr.states.begin(), tr.states.end());
    }
    return states;
  };
  CHECK(run() == run());
}

TEST_CASE("single-action environments give zero regret for every learner") {
  ExperimentConfig config;
  config.environment.num_actions = 1;
  config.episodes = 30;
  for (auto kind : {LearnerKind::ofu, LearnerKind::context_blind, LearnerKind::random,
                    LearnerKind::oracle}) {
    config.learner = kind;
    const GroundTruth truth = replication_environment(config, 1);
    const RegretTrace trace = run_replication(config, truth, 1);
    CHECK(trace.final_regret() == 0.0);
  }
}

TEST_CASE("context-blind learner uses constant features") {
  Rng rng(9);
  const EnvironmentSpec spec = default_fixture_spec();
  const GroundTruth truth = generate_environment(spec, rng);
  auto blind = make_context_blind_learner(truth.topology(), 1, 1.0, truth.link(), config_for(spec));
  CHECK(blind->stats().feature_maps().reward.kind() == FeatureKind::constant);
  CHECK(blind->estimates().lambda.rows() == 1);
  const auto a = blind->plan_episode(Eigen::VectorXd::Constant(1, 0.5));
  const auto b = blind->plan_episode(Eigen::VectorXd::Constant(1, -0.5));
  CHECK(a.policy == b.policy);
  blind->learn_episode(truth.sample_side_info(rng), truth, 1, rng);
  CHECK(blind->stats().episodes_recorded() == 1);
}

TEST_CASE("random learner draws valid policies") {
  auto topo = test::make_topology({1, 2, 3, 2, 1}, 2);
  RandomLearner learner(topo, 3);
  bool varied = false;
  const Policy first = learner.decide(Eigen::Vector2d::Zero()).policy;
  for (int i = 0; i < 20; ++i) {
    const EpisodeDecision d = learner.decide(Eigen::Vector2d::Zero());
    CHECK(std::isnan(d.optimistic_value));
    varied = varied || !(d.policy == first);
  }
  CHECK(varied);
}

TEST_CASE("invalid confidence parameter is rejected") {
  auto topo = test::make_topology({1, 2}, 1);
  LearnerConfig c;
  c.confidence.delta = 1.0;
  CHECK_THROWS_AS(OfuLearner(topo, {FeatureMap::constant(1), FeatureMap::constant(1), 1.0},
                             LinkFunction{}, c),
                  std::invalid_argument);
}
