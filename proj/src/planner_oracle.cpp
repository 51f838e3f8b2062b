#include <cmath>
#include <limits>

#include "ctxmdp/planner.hpp"

namespace ctxmdp {

namespace {

constexpr long long kMaxOraclePolicies = 256;
constexpr int kMaxOracleSuccessors = 6;

/// max_P sum_k P_k w_k over the vertices of {lo <= P <= hi, sum P = 1}.
/// A vertex has every coordinate but one at a bound; the free coordinate
/// absorbs the rest of the mass. Returns NaN when no vertex is feasible.
double best_vertex_value(const Eigen::Ref<const Eigen::VectorXd>& lo,
                         const Eigen::Ref<const Eigen::VectorXd>& hi,
                         const Eigen::Ref<const Eigen::VectorXd>& w) {
  constexpr double slack = 1e-12;
  const int k = static_cast<int>(lo.size());
  double best = std::numeric_limits<double>::quiet_NaN();
  for (int free = 0; free < k; ++free) {
    for (unsigned mask = 0; mask < (1u << (k - 1)); ++mask) {
      double mass = 0.0;
      double value = 0.0;
      int bit = 0;
      for (int i = 0; i < k; ++i) {
        if (i == free) continue;
        const double p = (mask >> bit++) & 1u ? hi[i] : lo[i];
        mass += p;
        value += p * w[i];
      }
      const double p_free = 1.0 - mass;
      if (p_free < lo[free] - slack || p_free > hi[free] + slack) continue;
      value += p_free * w[free];
      if (std::isnan(best) || value > best) best = value;
    }
  }
  return best;
}

}  // namespace

double brute_force_optimistic(const TopologyPtr& topology, const ConfidenceBands& bands) {
  const auto& topo = *topology;
  if (topo.policy_count(kMaxOraclePolicies) > kMaxOraclePolicies) {
    throw std::invalid_argument("instance has too many policies for brute force");
  }
  for (int p = 0; p < topo.num_pairs(); ++p) {
    if (topo.triple_end(p) - topo.triple_begin(p) > kMaxOracleSuccessors) {
      throw std::invalid_argument("instance has too many successors per row for brute force");
    }
  }

  const int L = topo.horizon();
  double best_root = -std::numeric_limits<double>::infinity();
  for_each_policy(topology, kMaxOraclePolicies, [&](const Policy& policy) {
    Eigen::VectorXd next = Eigen::VectorXd::Zero(topo.layer_size(L));
    for (int l = L - 1; l >= 0; --l) {
      Eigen::VectorXd current(topo.layer_size(l));
      for (int s = 0; s < topo.layer_size(l); ++s) {
        const int pair = topo.pair_index(l, s, policy.action(l, s));
        const int begin = topo.triple_begin(pair);
        const int size = topo.triple_end(pair) - begin;
        auto succ = topo.successors(pair);
        Eigen::VectorXd w(size);
        for (int k = 0; k < size; ++k) w[k] = next[succ[k]];
        double row_value = best_vertex_value(bands.transition_lo.segment(begin, size),
                                             bands.transition_hi.segment(begin, size), w);
        if (std::isnan(row_value)) {
          row_value = normalized_centers(bands.transition_center.segment(begin, size)).dot(w);
        }
        current[s] = bands.reward_hi[pair] + row_value;
      }
      next = std::move(current);
    }
    best_root = std::max(best_root, next[0]);
  });
  return best_root;
}

}  // namespace ctxmdp
