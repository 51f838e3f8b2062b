#include "ctxmdp/planner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ctxmdp {

namespace {

void check_feasible(double lo_sum, double hi_sum) {
  if (lo_sum > 1.0 + kBandFeasibilityTolerance || hi_sum < 1.0 - kBandFeasibilityTolerance) {
    throw InfeasibleBand("transition band admits no probability vector");
  }
}

/// Fills `out` (initialized to lo) in the visiting order given by `order`.
void pour(const Eigen::Ref<const Eigen::VectorXd>& hi, const std::vector<int>& order,
          double remaining, Eigen::Ref<Eigen::VectorXd> out) {
  for (int k : order) {
    if (remaining <= 0.0) break;
    const double add = std::min(hi[k] - out[k], remaining);
    if (add > 0.0) {
      out[k] += add;
      remaining -= add;
    }
  }
  // sum(hi) may fall short of 1 by rounding only; park the rest on the best.
  if (remaining > 0.0 && !order.empty()) out[order.front()] += remaining;
}

}  // namespace

Eigen::VectorXd optimistic_transition_row(const Eigen::Ref<const Eigen::VectorXd>& lo,
                                          const Eigen::Ref<const Eigen::VectorXd>& hi,
                                          const Eigen::Ref<const Eigen::VectorXd>& w) {
  if (lo.size() != hi.size() || lo.size() != w.size() || lo.size() == 0) {
    throw std::invalid_argument("row bounds and values must have one common, positive size");
  }
  if ((lo.array() > hi.array()).any()) throw InfeasibleBand("lower bound above upper bound");
  check_feasible(lo.sum(), hi.sum());

  std::vector<int> order(lo.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&w](int a, int b) { return w[a] > w[b]; });

  Eigen::VectorXd out = lo;
  pour(hi, order, 1.0 - lo.sum(), out);
  return out;
}

Eigen::VectorXd normalized_centers(const Eigen::Ref<const Eigen::VectorXd>& centers) {
  const double total = centers.sum();
  if (total > 0.0) return centers / total;
  return Eigen::VectorXd::Constant(centers.size(), 1.0 / static_cast<double>(centers.size()));
}

OptimisticPlan optimistic_plan(const TopologyPtr& topology, const ConfidenceBands& bands) {
  const auto& topo = *topology;
  if (bands.reward_hi.size() != topo.num_pairs() ||
      bands.transition_lo.size() != topo.num_triples()) {
    throw std::invalid_argument("bands do not cover the topology");
  }
  const int L = topo.horizon();
  PlanDiagnostics diag;

  Eigen::VectorXd kernel_probs(topo.num_triples());
  std::vector<int> actions(topo.state_id(L, 0), 0);
  std::vector<Eigen::VectorXd> values(L + 1);
  values[L] = Eigen::VectorXd::Zero(topo.layer_size(L));

  std::vector<int> position;  // next-layer state -> offset in the current row
  for (int l = L - 1; l >= 0; --l) {
    const Eigen::VectorXd& next = values[l + 1];
    const int width = topo.layer_size(l + 1);
    std::vector<int> order(width);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&next](int a, int b) { return next[a] > next[b]; });
    position.assign(width, -1);

    values[l].resize(topo.layer_size(l));
    for (int s = 0; s < topo.layer_size(l); ++s) {
      double best = -1.0;
      for (int a = 0; a < topo.num_actions(); ++a) {
        const int pair = topo.pair_index(l, s, a);
        const int begin = topo.triple_begin(pair);
        const int size = topo.triple_end(pair) - begin;
        auto succ = topo.successors(pair);
        auto lo = bands.transition_lo.segment(begin, size);
        auto hi = bands.transition_hi.segment(begin, size);
        auto row = kernel_probs.segment(begin, size);

        for (int k = 0; k < size; ++k) position[succ[k]] = k;
        std::vector<int> row_order;
        row_order.reserve(size);
        for (int state : order) {
          if (position[state] >= 0) row_order.push_back(position[state]);
        }
        diag.row_operations += width;
        for (int k = 0; k < size; ++k) position[succ[k]] = -1;

        const double lo_sum = lo.sum();
        const double hi_sum = hi.sum();
        if ((lo.array() > hi.array()).any() || lo_sum > 1.0 + kBandFeasibilityTolerance ||
            hi_sum < 1.0 - kBandFeasibilityTolerance) {
          row = normalized_centers(bands.transition_center.segment(begin, size));
          ++diag.infeasible_rows;
        } else {
          row = lo;
          pour(hi, row_order, 1.0 - lo_sum, row);
        }
        diag.max_row_sum_error = std::max(diag.max_row_sum_error, std::abs(row.sum() - 1.0));

        double q = bands.reward_hi[pair];
        for (int k = 0; k < size; ++k) q += row[k] * next[succ[k]];
        if (q > best) {
          best = q;
          actions[topo.state_id(l, s)] = a;
        }
      }
      values[l][s] = best;
    }
  }

  return {Policy(topology, std::move(actions)), TransitionKernel(topology, std::move(kernel_probs)),
          RewardFunction(topology, bands.reward_hi.cwiseMin(1.0).cwiseMax(0.0)), std::move(values),
          diag};
}

}  // namespace ctxmdp
