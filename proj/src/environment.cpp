#include "ctxmdp/environment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ctxmdp {

void EnvironmentSpec::validate() const {
  if (layer_sizes.size() < 2 || layer_sizes.front() != 1) {
    throw std::invalid_argument("environment needs layers >= 1 and a single start state");
  }
  for (int size : layer_sizes) {
    if (size < 1) throw std::invalid_argument("layer sizes must be positive");
  }
  if (num_actions < 1) throw std::invalid_argument("action count must be positive");
  if (side_info_dim < 1 || transition_dim < 1 || reward_dim < 1) {
    throw std::invalid_argument("feature dimensions must be positive");
  }
  if (x_max < 0.0 || norm_bound < 0.0) throw std::invalid_argument("bounds must be non-negative");
  if (successors < 1) throw std::invalid_argument("successor count must be positive");
  if (successors > 2 && !misspecified) {
    throw std::invalid_argument(
        "more than two successors per pair needs the misspecified mode; exact GLM "
        "normalization only holds for binary branching");
  }
  if (noise_width < 0.0) throw std::invalid_argument("noise width must be non-negative");
  if (context_dependent && (reward_dim - (feature_bias ? 1 : 0)) < 1) {
    throw std::invalid_argument("context-dependent rewards need x_1 among the reward features");
  }
}

FeatureMaps EnvironmentSpec::feature_maps() const {
  return {FeatureMap::identity(side_info_dim, transition_dim, feature_bias),
          FeatureMap::identity(side_info_dim, reward_dim, feature_bias), x_max};
}

EnvironmentSpec default_fixture_spec() {
  EnvironmentSpec spec;
  spec.layer_sizes = {1, 2, 3, 2, 1};
  spec.num_actions = 2;
  spec.side_info_dim = 1;
  spec.transition_dim = 2;
  spec.reward_dim = 2;
  spec.feature_bias = true;
  spec.x_max = 1.0;
  spec.norm_bound = 1.0;
  return spec;
}

EnvironmentSpec context_dependent_fixture_spec() {
  EnvironmentSpec spec = default_fixture_spec();
  spec.context_dependent = true;
  return spec;
}

Eigen::VectorXd sample_ball(int dim, double radius, Rng& rng) {
  if (radius <= 0.0) return Eigen::VectorXd::Zero(dim);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd v(dim);
  double norm = 0.0;
  do {
    for (int i = 0; i < dim; ++i) v[i] = gauss(rng);
    norm = v.norm();
  } while (norm == 0.0);
  const double r = radius * std::pow(unit(rng), 1.0 / dim);
  return v * (r / norm);
}

GroundTruth::GroundTruth(EnvironmentSpec spec, TopologyPtr topology, ParameterTables params)
    : spec_(std::move(spec)),
      topology_(std::move(topology)),
      params_(std::move(params)),
      maps_(spec_.feature_maps()),
      link_(spec_.link) {
  spec_.validate();
  if (topology_->layer_sizes() != spec_.layer_sizes ||
      topology_->num_actions() != spec_.num_actions) {
    throw std::invalid_argument("ground-truth topology does not match its spec");
  }
  if (params_.theta.rows() != spec_.transition_dim || params_.lambda.rows() != spec_.reward_dim) {
    throw std::invalid_argument("ground-truth parameters do not match the feature dimensions");
  }
  params_.validate(*topology_);
  for (int p = 0; p < topology_->num_pairs(); ++p) {
    const int size = topology_->triple_end(p) - topology_->triple_begin(p);
    if (size > 2 && !spec_.misspecified) {
      throw std::invalid_argument("exact GLM mode allows at most two successors per pair");
    }
  }
}

Eigen::VectorXd GroundTruth::sample_side_info(Rng& rng) const {
  return sample_ball(spec_.side_info_dim, spec_.x_max, rng);
}

TrueModels GroundTruth::true_models(const Eigen::VectorXd& x) const {
  if (x.size() != spec_.side_info_dim) throw std::invalid_argument("side information dimension");
  if (x.norm() > spec_.x_max * (1.0 + 1e-12)) {
    throw std::domain_error("side information outside the ball of radius x_max");
  }
  const auto& topo = *topology_;
  const Eigen::VectorXd phi = maps_.transition(x);
  const Eigen::VectorXd psi = maps_.reward(x);

  Eigen::VectorXd probs = predict_all(params_.theta, phi, link_);
  for (int p = 0; p < topo.num_pairs(); ++p) {
    const int begin = topo.triple_begin(p);
    const int size = topo.triple_end(p) - begin;
    if (size == 1) {
      probs[begin] = 1.0;
    } else if (spec_.misspecified) {
      auto row = probs.segment(begin, size);
      row /= row.sum();
    }
  }
  return {TransitionKernel(topology_, std::move(probs)),
          RewardFunction(topology_, predict_all(params_.lambda, psi, link_))};
}

double GroundTruth::sample_step_reward(double mean, Rng& rng) const {
  return ctxmdp::sample_step_reward(mean, spec_.reward_noise, spec_.noise_width, rng);
}

Trajectory GroundTruth::rollout(const Eigen::VectorXd& side_info, const Policy& policy,
                                int episode, Rng& rng) const {
  const TrueModels models = true_models(side_info);
  Trajectory traj = sample_trajectory(models.kernel, policy, rng);
  traj.episode = episode;
  traj.side_info = side_info;
  traj.rewards.reserve(traj.actions.size());
  for (std::size_t l = 0; l < traj.actions.size(); ++l) {
    const int pair =
        topology_->pair_index(static_cast<int>(l), traj.states[l], traj.actions[l]);
    traj.rewards.push_back(sample_step_reward(models.reward.mean(pair), rng));
  }
  return traj;
}

GroundTruth generate_environment(const EnvironmentSpec& spec, Rng& rng) {
  spec.validate();
  const int L = static_cast<int>(spec.layer_sizes.size()) - 1;

  std::vector<EdgeSpec> edges;
  for (int l = 0; l < L; ++l) {
    const int next_size = spec.layer_sizes[l + 1];
    const int k = std::min(spec.successors, next_size);
    for (int s = 0; s < spec.layer_sizes[l]; ++s) {
      for (int a = 0; a < spec.num_actions; ++a) {
        std::vector<int> pool(next_size);
        for (int i = 0; i < next_size; ++i) pool[i] = i;
        // k distinct successors by partial Fisher-Yates.
        for (int i = 0; i < k; ++i) {
          std::uniform_int_distribution<int> pick(i, next_size - 1);
          std::swap(pool[i], pool[pick(rng)]);
        }
        pool.resize(k);
        edges.push_back({l, s, a, std::move(pool)});
      }
    }
  }
  auto topology = std::make_shared<const LayeredTopology>(spec.layer_sizes, spec.num_actions, edges);

  ParameterTables params =
      ParameterTables::zeros(*topology, spec.transition_dim, spec.reward_dim, spec.norm_bound);
  for (int p = 0; p < topology->num_pairs(); ++p) {
    const int begin = topology->triple_begin(p);
    const int size = topology->triple_end(p) - begin;
    if (size == 2 && !spec.misspecified) {
      params.theta.col(begin) = sample_ball(spec.transition_dim, spec.norm_bound, rng);
      params.theta.col(begin + 1) = -params.theta.col(begin);
    } else if (size > 1) {
      for (int k = 0; k < size; ++k) {
        params.theta.col(begin + k) = sample_ball(spec.transition_dim, spec.norm_bound, rng);
      }
    }
    if (spec.context_dependent) {
      const double sign = topology->pair(p).action % 2 == 0 ? 1.0 : -1.0;
      params.lambda.col(p).setZero();
      params.lambda(0, p) = sign * spec.norm_bound;
    } else {
      params.lambda.col(p) = sample_ball(spec.reward_dim, spec.norm_bound, rng);
    }
  }
  return GroundTruth(spec, std::move(topology), std::move(params));
}

Eigen::VectorXd sample_side_info(const GroundTruth& truth, Rng& rng) {
  return truth.sample_side_info(rng);
}

TrueModels true_models(const GroundTruth& truth, const Eigen::VectorXd& x) {
  return truth.true_models(x);
}

double sample_step_reward(double mean, RewardNoise noise, double noise_width, Rng& rng) {
  if (!(mean >= 0.0 && mean <= 1.0)) throw std::invalid_argument("reward mean outside [0,1]");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (noise == RewardNoise::bernoulli) return unit(rng) < mean ? 1.0 : 0.0;
  // Symmetric noise narrowed near the boundary keeps the mean exact.
  const double width = std::min({noise_width, mean, 1.0 - mean});
  return mean + width * (2.0 * unit(rng) - 1.0);
}

}  // namespace ctxmdp
