#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <random>
#include <vector>

#include "ctxmdp/topology.hpp"

namespace ctxmdp {

using Rng = std::mt19937_64;
using TopologyPtr = std::shared_ptr<const LayeredTopology>;

/// Row-sum tolerance for every transition kernel in the library.
inline constexpr double kRowSumTolerance = 1e-12;

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// P(s'|s,a) stored over the feasible (pair, successor) triples of a
/// topology. Rows are validated on construction.
class TransitionKernel {
 public:
  TransitionKernel(TopologyPtr topology, Eigen::VectorXd triple_probs);

  const LayeredTopology& topology() const { return *topology_; }
  const TopologyPtr& topology_ptr() const { return topology_; }

  /// Probabilities aligned with `topology().successors(pair)`.
  auto row(int pair) const {
    const int begin = topology_->triple_begin(pair);
    return probs_.segment(begin, topology_->triple_end(pair) - begin);
  }
  double probability(int layer, int state, int action, int next_state) const;
  const Eigen::VectorXd& triple_probs() const { return probs_; }

  /// max over rows of |sum - 1|.
  double max_row_sum_error() const;

  /// Dense |S_l| x |S_{l+1}| matrix for one action.
  Eigen::MatrixXd layer_matrix(int layer, int action) const;

 private:
  TopologyPtr topology_;
  Eigen::VectorXd probs_;
};

/// Mean reward r(s,a) in [0,1] per state-action pair.
class RewardFunction {
 public:
  RewardFunction(TopologyPtr topology, Eigen::VectorXd pair_means);

  const LayeredTopology& topology() const { return *topology_; }
  double mean(int pair) const { return means_[pair]; }
  double mean(int layer, int state, int action) const {
    return means_[topology_->pair_index(layer, state, action)];
  }
  const Eigen::VectorXd& means() const { return means_; }

 private:
  TopologyPtr topology_;
  Eigen::VectorXd means_;
};

/// Deterministic policy: one action per non-terminal state.
class Policy {
 public:
  Policy(TopologyPtr topology, std::vector<int> actions);
  /// Constant policy.
  static Policy uniform_action(TopologyPtr topology, int action);

  const LayeredTopology& topology() const { return *topology_; }
  int action(int layer, int state) const { return actions_[topology_->state_id(layer, state)]; }
  const std::vector<int>& actions() const { return actions_; }

  bool operator==(const Policy& other) const { return actions_ == other.actions_; }

 private:
  TopologyPtr topology_;
  std::vector<int> actions_;
};

/// One episode: s_0, a_0, ..., s_{L-1}, a_{L-1}, s_L with per-step rewards.
struct Trajectory {
  int episode = 0;
  Eigen::VectorXd side_info;
  std::vector<int> states;   // local index in layer l, size L + 1
  std::vector<int> actions;  // size L
  std::vector<double> rewards;

  double total_reward() const;
};

struct PolicyValue {
  Policy policy;
  double value = 0.0;
};

/// W(r, pi, P) by backward induction.
double evaluate_policy(const TransitionKernel& kernel, const RewardFunction& reward,
                       const Policy& policy);

/// Per-state values of a fixed policy, indexed by layer then local state.
std::vector<Eigen::VectorXd> policy_state_values(const TransitionKernel& kernel,
                                                 const RewardFunction& reward,
                                                 const Policy& policy);

/// Visit probability mu(s) per layer; each layer's vector sums to 1.
std::vector<Eigen::VectorXd> occupancy(const TransitionKernel& kernel, const Policy& policy);

/// argmax_pi W(r, pi, P); ties go to the lowest action index.
PolicyValue best_policy(const TransitionKernel& kernel, const RewardFunction& reward);

/// Draws s_{l+1} ~ P(.|s_l, pi(s_l)). Rewards are left empty; the
/// environment fills them in.
Trajectory sample_trajectory(const TransitionKernel& kernel, const Policy& policy, Rng& rng);

/// Calls `visit` for every deterministic policy in lexicographic order.
/// Throws when the count exceeds `cap`.
void for_each_policy(const TopologyPtr& topology, long long cap,
                     const std::function<void(const Policy&)>& visit);

}  // namespace ctxmdp
