#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <random>
#include <vector>

#include "ctxmdp/confidence.hpp"
#include "ctxmdp/mdp.hpp"

namespace test {

using namespace ctxmdp;

inline TopologyPtr make_topology(std::vector<int> sizes, int actions,
                                 std::vector<EdgeSpec> edges = {}) {
  return std::make_shared<const LayeredTopology>(std::move(sizes), actions, edges);
}

inline Eigen::VectorXd random_row(int size, Rng& rng) {
  std::exponential_distribution<double> expo(1.0);
  Eigen::VectorXd row(size);
  for (int k = 0; k < size; ++k) row[k] = expo(rng);
  return row / row.sum();
}

inline TransitionKernel random_kernel(const TopologyPtr& topo, Rng& rng) {
  Eigen::VectorXd probs(topo->num_triples());
  for (int p = 0; p < topo->num_pairs(); ++p) {
    const int begin = topo->triple_begin(p);
    probs.segment(begin, topo->triple_end(p) - begin) =
        random_row(topo->triple_end(p) - begin, rng);
  }
  return TransitionKernel(topo, probs);
}

inline RewardFunction random_reward(const TopologyPtr& topo, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd means(topo->num_pairs());
  for (int p = 0; p < topo->num_pairs(); ++p) means[p] = unit(rng);
  return RewardFunction(topo, means);
}

inline Policy random_policy(const TopologyPtr& topo, Rng& rng) {
  std::uniform_int_distribution<int> pick(0, topo->num_actions() - 1);
  std::vector<int> actions(topo->state_id(topo->horizon(), 0));
  for (int& a : actions) a = pick(rng);
  return Policy(topo, actions);
}

/// Expected return by enumerating every path of the policy.
inline double path_enumeration_value(const TransitionKernel& kernel, const RewardFunction& reward,
                                     const Policy& policy) {
  const auto& topo = kernel.topology();
  std::function<double(int, int, double)> walk = [&](int l, int s, double prob) -> double {
    if (l == topo.horizon()) return 0.0;
    const int a = policy.action(l, s);
    const int pair = topo.pair_index(l, s, a);
    double total = prob * reward.mean(pair);
    auto succ = topo.successors(pair);
    for (std::size_t k = 0; k < succ.size(); ++k) {
      const double p = kernel.row(pair)[static_cast<Eigen::Index>(k)];
      if (p > 0.0) total += walk(l + 1, succ[k], prob * p);
    }
    return total;
  };
  return walk(0, 0, 1.0);
}

/// Bands of width zero at the given models.
inline ConfidenceBands exact_bands(const TransitionKernel& kernel, const RewardFunction& reward) {
  ConfidenceBands b;
  b.reward_center = b.reward_lo = b.reward_hi = reward.means();
  b.transition_center = b.transition_lo = b.transition_hi = kernel.triple_probs();
  return b;
}

/// Bands around the given models with random half-widths up to `width`,
/// clipped to [0,1].
inline ConfidenceBands random_bands_around(const TransitionKernel& kernel,
                                           const RewardFunction& reward, double width, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ConfidenceBands b = exact_bands(kernel, reward);
  for (Eigen::Index i = 0; i < b.reward_lo.size(); ++i) {
    b.reward_lo[i] = std::max(0.0, b.reward_lo[i] - width * unit(rng));
    b.reward_hi[i] = std::min(1.0, b.reward_hi[i] + width * unit(rng));
  }
  for (Eigen::Index i = 0; i < b.transition_lo.size(); ++i) {
    b.transition_lo[i] = std::max(0.0, b.transition_lo[i] - width * unit(rng));
    b.transition_hi[i] = std::min(1.0, b.transition_hi[i] + width * unit(rng));
  }
  return b;
}

}  // namespace test
