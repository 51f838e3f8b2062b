#include "ctxmdp/mdp.hpp"

#include <cmath>
#include <string>

namespace ctxmdp {

namespace {

void require_same_topology(const LayeredTopology& a, const LayeredTopology& b) {
  if (&a != &b && !(a == b)) throw TopologyError("inputs do not share one topology");
}

}  // namespace

TransitionKernel::TransitionKernel(TopologyPtr topology, Eigen::VectorXd triple_probs)
    : topology_(std::move(topology)), probs_(std::move(triple_probs)) {
  if (!topology_) throw ModelError("kernel needs a topology");
  if (probs_.size() != topology_->num_triples()) {
    throw ModelError("kernel size does not match the topology's triple count");
  }
  for (Eigen::Index i = 0; i < probs_.size(); ++i) {
    if (!(probs_[i] >= 0.0 && probs_[i] <= 1.0)) {
      throw ModelError("transition probability outside [0,1] at triple " + std::to_string(i));
    }
  }
  for (int p = 0; p < topology_->num_pairs(); ++p) {
    if (std::abs(row(p).sum() - 1.0) > kRowSumTolerance) {
      throw ModelError("transition row " + std::to_string(p) + " does not sum to 1");
    }
  }
}

double TransitionKernel::probability(int layer, int state, int action, int next_state) const {
  const int pair = topology_->pair_index(layer, state, action);
  auto triple = topology_->triple_index(pair, next_state);
  return triple ? probs_[*triple] : 0.0;
}

double TransitionKernel::max_row_sum_error() const {
  double worst = 0.0;
  for (int p = 0; p < topology_->num_pairs(); ++p) {
    worst = std::max(worst, std::abs(row(p).sum() - 1.0));
  }
  return worst;
}

Eigen::MatrixXd TransitionKernel::layer_matrix(int layer, int action) const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(topology_->layer_size(layer),
                                            topology_->layer_size(layer + 1));
  for (int s = 0; s < m.rows(); ++s) {
    const int pair = topology_->pair_index(layer, s, action);
    auto succ = topology_->successors(pair);
    for (std::size_t k = 0; k < succ.size(); ++k) {
      m(s, succ[k]) = probs_[topology_->triple_begin(pair) + static_cast<int>(k)];
    }
  }
  return m;
}

RewardFunction::RewardFunction(TopologyPtr topology, Eigen::VectorXd pair_means)
    : topology_(std::move(topology)), means_(std::move(pair_means)) {
  if (!topology_) throw ModelError("reward function needs a topology");
  if (means_.size() != topology_->num_pairs()) {
    throw ModelError("reward size does not match the topology's pair count");
  }
  for (Eigen::Index i = 0; i < means_.size(); ++i) {
    if (!(means_[i] >= 0.0 && means_[i] <= 1.0)) {
      throw ModelError("reward mean outside [0,1] at pair " + std::to_string(i));
    }
  }
}

Policy::Policy(TopologyPtr topology, std::vector<int> actions)
    : topology_(std::move(topology)), actions_(std::move(actions)) {
  if (!topology_) throw ModelError("policy needs a topology");
  const int nonterminal = topology_->state_id(topology_->horizon(), 0);
  if (static_cast<int>(actions_.size()) != nonterminal) {
    throw ModelError("policy must assign an action to every non-terminal state");
  }
  for (int a : actions_) {
    if (a < 0 || a >= topology_->num_actions()) throw ModelError("policy action out of range");
  }
}

Policy Policy::uniform_action(TopologyPtr topology, int action) {
  const int nonterminal = topology->state_id(topology->horizon(), 0);
  return Policy(std::move(topology), std::vector<int>(nonterminal, action));
}

double Trajectory::total_reward() const {
  double total = 0.0;
  for (double r : rewards) total += r;
  return total;
}

std::vector<Eigen::VectorXd> policy_state_values(const TransitionKernel& kernel,
                                                 const RewardFunction& reward,
                                                 const Policy& policy) {
  const auto& topo = kernel.topology();
  require_same_topology(topo, reward.topology());
  require_same_topology(topo, policy.topology());

  const int L = topo.horizon();
  std::vector<Eigen::VectorXd> values(L + 1);
  values[L] = Eigen::VectorXd::Zero(topo.layer_size(L));
  for (int l = L - 1; l >= 0; --l) {
    values[l].resize(topo.layer_size(l));
    for (int s = 0; s < topo.layer_size(l); ++s) {
      const int pair = topo.pair_index(l, s, policy.action(l, s));
      auto succ = topo.successors(pair);
      auto row = kernel.row(pair);
      double next = 0.0;
      for (std::size_t k = 0; k < succ.size(); ++k) next += row[k] * values[l + 1][succ[k]];
      values[l][s] = reward.mean(pair) + next;
    }
  }
  return values;
}

double evaluate_policy(const TransitionKernel& kernel, const RewardFunction& reward,
                       const Policy& policy) {
  return policy_state_values(kernel, reward, policy)[0][0];
}

std::vector<Eigen::VectorXd> occupancy(const TransitionKernel& kernel, const Policy& policy) {
  const auto& topo = kernel.topology();
  require_same_topology(topo, policy.topology());

  std::vector<Eigen::VectorXd> mu(topo.num_layers());
  mu[0] = Eigen::VectorXd::Ones(1);
  for (int l = 0; l < topo.horizon(); ++l) {
    mu[l + 1] = Eigen::VectorXd::Zero(topo.layer_size(l + 1));
    for (int s = 0; s < topo.layer_size(l); ++s) {
      const int pair = topo.pair_index(l, s, policy.action(l, s));
      auto succ = topo.successors(pair);
      auto row = kernel.row(pair);
      for (std::size_t k = 0; k < succ.size(); ++k) mu[l + 1][succ[k]] += mu[l][s] * row[k];
    }
  }
  return mu;
}

PolicyValue best_policy(const TransitionKernel& kernel, const RewardFunction& reward) {
  const auto& topo = kernel.topology();
  require_same_topology(topo, reward.topology());

  const int L = topo.horizon();
  std::vector<int> actions(topo.state_id(L, 0), 0);
  Eigen::VectorXd next = Eigen::VectorXd::Zero(topo.layer_size(L));
  for (int l = L - 1; l >= 0; --l) {
    Eigen::VectorXd current(topo.layer_size(l));
    for (int s = 0; s < topo.layer_size(l); ++s) {
      double best = -1.0;
      int best_action = 0;
      for (int a = 0; a < topo.num_actions(); ++a) {
        const int pair = topo.pair_index(l, s, a);
        auto succ = topo.successors(pair);
        auto row = kernel.row(pair);
        double q = reward.mean(pair);
        for (std::size_t k = 0; k < succ.size(); ++k) q += row[k] * next[succ[k]];
        if (q > best) {
          best = q;
          best_action = a;
        }
      }
      current[s] = best;
      actions[topo.state_id(l, s)] = best_action;
    }
    next = std::move(current);
  }
  return {Policy(kernel.topology_ptr(), std::move(actions)), next[0]};
}

Trajectory sample_trajectory(const TransitionKernel& kernel, const Policy& policy, Rng& rng) {
  const auto& topo = kernel.topology();
  require_same_topology(topo, policy.topology());

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Trajectory traj;
  traj.states.reserve(topo.num_layers());
  traj.actions.reserve(topo.horizon());
  int state = 0;
  traj.states.push_back(state);
  for (int l = 0; l < topo.horizon(); ++l) {
    const int action = policy.action(l, state);
    const int pair = topo.pair_index(l, state, action);
    auto succ = topo.successors(pair);
    auto row = kernel.row(pair);
    if (std::abs(row.sum() - 1.0) > kRowSumTolerance) {
      throw ModelError("cannot sample from a row that does not sum to 1");
    }
    const double u = unit(rng);
    double cumulative = 0.0;
    int next = -1;
    for (std::size_t k = 0; k < succ.size(); ++k) {
      if (row[k] <= 0.0) continue;
      cumulative += row[k];
      next = succ[k];
      if (u < cumulative) break;
    }
    traj.actions.push_back(action);
    traj.states.push_back(next);
    state = next;
  }
  return traj;
}

void for_each_policy(const TopologyPtr& topology, long long cap,
                     const std::function<void(const Policy&)>& visit) {
  if (topology->policy_count(cap) > cap) {
    throw TopologyError("policy enumeration exceeds the configured cap");
  }
  const int nonterminal = topology->state_id(topology->horizon(), 0);
  const int A = topology->num_actions();
  std::vector<int> actions(nonterminal, 0);
  while (true) {
    visit(Policy(topology, actions));
    int i = nonterminal - 1;
    while (i >= 0 && actions[i] == A - 1) actions[i--] = 0;
    if (i < 0) break;
    ++actions[i];
  }
}

}  // namespace ctxmdp
