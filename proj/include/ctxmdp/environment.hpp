#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ctxmdp/episode_source.hpp"
#include "ctxmdp/glm.hpp"
#include "ctxmdp/mdp.hpp"

namespace ctxmdp {

enum class RewardNoise { bernoulli, uniform };

/// Generation parameters of a ground-truth instance.
struct EnvironmentSpec {
  std::vector<int> layer_sizes{1, 2, 3, 2, 1};
  int num_actions = 2;
  int side_info_dim = 2;   // d
  int transition_dim = 3;  // n
  int reward_dim = 3;      // m
  bool feature_bias = true;
  double x_max = 1.0;
  double norm_bound = 10.0;  // B, for theta_* and lambda_*
  LinkKind link = LinkKind::logistic;
  RewardNoise reward_noise = RewardNoise::bernoulli;
  /// Half-width of the uniform reward noise.
  double noise_width = 0.25;
  /// Successors per (s,a). The exact GLM mode supports at most 2; more
  /// requires `misspecified`.
  int successors = 2;
  /// k > 2 successors renormalized at sampling time. The per-triple GLM is
  /// then misspecified, so coverage guarantees do not apply.
  bool misspecified = false;
  /// Rewards depend on the sign of x_1 with an action-dependent sign, so the
  /// optimal action flips with the side information.
  bool context_dependent = false;

  void validate() const;
  FeatureMaps feature_maps() const;
};

/// Small test fixture: layers 1-2-3-2-1, two actions, binary branching,
/// scalar side information and B = 1.
EnvironmentSpec default_fixture_spec();

/// Default fixture with the context-dependent reward layout.
EnvironmentSpec context_dependent_fixture_spec();

struct TrueModels {
  TransitionKernel kernel;
  RewardFunction reward;
};

/// Ground-truth simulator. The harness may read the true models; learners
/// see it only through EpisodeSource::rollout.
class GroundTruth : public EpisodeSource {
 public:
  GroundTruth(EnvironmentSpec spec, TopologyPtr topology, ParameterTables params);

  const TopologyPtr& topology() const override { return topology_; }
  const EnvironmentSpec& spec() const { return spec_; }
  const ParameterTables& parameters() const { return params_; }
  const FeatureMaps& feature_maps() const { return maps_; }
  const LinkFunction& link() const { return link_; }

  /// x uniform on the ball of radius x_max.
  Eigen::VectorXd sample_side_info(Rng& rng) const;

  /// P_x and r_x. Throws std::domain_error when ||x|| > x_max.
  TrueModels true_models(const Eigen::VectorXd& x) const;

  /// One realized reward with the given mean.
  double sample_step_reward(double mean, Rng& rng) const;

  Trajectory rollout(const Eigen::VectorXd& side_info, const Policy& policy, int episode,
                     Rng& rng) const override;

 private:
  EnvironmentSpec spec_;
  TopologyPtr topology_;
  ParameterTables params_;
  FeatureMaps maps_;
  LinkFunction link_;
};

GroundTruth generate_environment(const EnvironmentSpec& spec, Rng& rng);

/// Free-function form of the simulator operations.
Eigen::VectorXd sample_side_info(const GroundTruth& truth, Rng& rng);
TrueModels true_models(const GroundTruth& truth, const Eigen::VectorXd& x);
double sample_step_reward(double mean, RewardNoise noise, double noise_width, Rng& rng);

/// Uniform draw from the Euclidean ball of the given radius.
Eigen::VectorXd sample_ball(int dim, double radius, Rng& rng);

}  // namespace ctxmdp
