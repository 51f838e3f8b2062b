#include <doctest.h>

#include <cmath>

#include "ctxmdp/planner.hpp"
#include "helpers.hpp"

using namespace ctxmdp;

namespace {

// Best vertex value of {lo <= p <= hi, sum p = 1}: every vertex has at most
// one coordinate strictly between its bounds.
double vertex_oracle(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                     const Eigen::VectorXd& w) {
  const int n = static_cast<int>(lo.size());
  double best = -1e300;
  for (int free = 0; free < n; ++free) {
    for (int mask = 0; mask < (1 << n); ++mask) {
      if (mask & (1 << free)) continue;
      double sum = 0.0, value = 0.0;
      for (int k = 0; k < n; ++k) {
        if (k == free) continue;
        const double p = (mask & (1 << k)) ? hi[k] : lo[k];
        sum += p;
        value += p * w[k];
      }
      const double rest = 1.0 - sum;
      if (rest < lo[free] - 1e-12 || rest > hi[free] + 1e-12) continue;
      best = std::max(best, value + rest * w[free]);
    }
  }
  return best;
}

}  // namespace

TEST_CASE("degenerate bands return the row unchanged") {
  const Eigen::Vector3d row(0.2, 0.5, 0.3);
  const Eigen::VectorXd out = optimistic_transition_row(row, row, Eigen::Vector3d(3, 1, 2));
  CHECK((out - row).norm() <= 1e-15);
}

TEST_CASE("unconstrained bands put all mass on the best successor") {
  const Eigen::VectorXd out = optimistic_transition_row(
      Eigen::Vector3d::Zero(), Eigen::Vector3d::Ones(), Eigen::Vector3d(0.1, 0.9, 0.4));
  CHECK(out == Eigen::Vector3d(0, 1, 0));
}

TEST_CASE("ties keep index order") {
  const Eigen::VectorXd out = optimistic_transition_row(
      Eigen::Vector3d::Zero(), Eigen::Vector3d::Constant(0.6), Eigen::Vector3d(1, 1, 1));
  CHECK(out[0] == doctest::Approx(0.6));
  CHECK(out[1] == doctest::Approx(0.4));
  CHECK(out[2] == 0.0);
}

TEST_CASE("infeasible rows throw") {
  CHECK_THROWS_AS(optimistic_transition_row(Eigen::Vector2d(0.6, 0.6), Eigen::Vector2d::Ones(),
                                            Eigen::Vector2d::Zero()),
                  InfeasibleBand);
  CHECK_THROWS_AS(optimistic_transition_row(Eigen::Vector2d::Zero(), Eigen::Vector2d(0.3, 0.3),
                                            Eigen::Vector2d::Zero()),
                  InfeasibleBand);
  CHECK_THROWS_AS(optimistic_transition_row(Eigen::Vector2d(0.5, 0.0), Eigen::Vector2d(0.4, 1.0),
                                            Eigen::Vector2d::Zero()),
                  InfeasibleBand);
  CHECK_THROWS_AS(optimistic_transition_row(Eigen::Vector2d::Zero(), Eigen::Vector3d::Ones(),
                                            Eigen::Vector2d::Zero()),
                  std::invalid_argument);
}

TEST_CASE("water-filling matches the vertex oracle and is LP optimal") {
  Rng rng(99);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const int n = 4;
    const Eigen::VectorXd center = test::random_row(n, rng);
    Eigen::VectorXd lo(n), hi(n), w(n);
    for (int k = 0; k < n; ++k) {
      lo[k] = std::max(0.0, center[k] - 0.4 * unit(rng));
      hi[k] = std::min(1.0, center[k] + 0.4 * unit(rng));
      w[k] = unit(rng) < 0.2 ? 0.5 : unit(rng);
    }
    const Eigen::VectorXd p = optimistic_transition_row(lo, hi, w);
    CHECK(std::abs(p.sum() - 1.0) <= 1e-12);
    CHECK(((p - lo).array() >= -1e-15).all());
    CHECK(((hi - p).array() >= -1e-15).all());
    CHECK(std::abs(p.dot(w) - vertex_oracle(lo, hi, w)) <= 1e-9);
    // Reduced costs: no mass can move from a lower-value to a higher-value successor.
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        if (p[a] < hi[a] - 1e-12 && p[b] > lo[b] + 1e-12) CHECK(w[a] <= w[b] + 1e-12);
      }
    }
  }
}

TEST_CASE("normalized centers") {
  CHECK(normalized_centers(Eigen::Vector2d(0.2, 0.6)).isApprox(Eigen::Vector2d(0.25, 0.75)));
  CHECK(normalized_centers(Eigen::Vector2d::Zero()) == Eigen::Vector2d(0.5, 0.5));
}

TEST_CASE("zero-width bands reduce to dynamic programming") {
  Rng rng(1);
  for (int i = 0; i < 30; ++i) {
    auto topo = test::make_topology({1, 2, 3, 2, 1}, 2);
    const auto k = test::random_kernel(topo, rng);
    const auto r = test::random_reward(topo, rng);
    const ConfidenceBands b = test::exact_bands(k, r);
    const OptimisticPlan plan = optimistic_plan(topo, b);
    const PolicyValue best = best_policy(k, r);
    CHECK(plan.policy == best.policy);
    CHECK(std::abs(plan.root_value() - best.value) <= 1e-12);
    CHECK(std::abs(brute_force_optimistic(topo, b) - best.value) <= 1e-12);
    CHECK(plan.diagnostics.infeasible_rows == 0);
  }
}

TEST_CASE("saturated rewards give the horizon") {
  Rng rng(2);
  auto topo = test::make_topology({1, 2, 3, 2, 1}, 2);
  const auto k = test::random_kernel(topo, rng);
  ConfidenceBands b = test::random_bands_around(k, test::random_reward(topo, rng), 0.3, rng);
  b.reward_lo.setOnes();
  b.reward_hi.setOnes();
  CHECK(optimistic_plan(topo, b).root_value() == doctest::Approx(4.0));
}

TEST_CASE("optimistic plan agrees with brute force and bounds every policy") {
  Rng rng(3);
  std::uniform_int_distribution<int> size(1, 3);
  for (int i = 0; i < 100; ++i) {
    auto topo = test::make_topology({1, size(rng), size(rng)}, 2);
    const auto k = test::random_kernel(topo, rng);
    const auto r = test::random_reward(topo, rng);
    const ConfidenceBands b = test::random_bands_around(k, r, 0.3, rng);
    const OptimisticPlan plan = optimistic_plan(topo, b);
    CHECK(std::abs(plan.root_value() - brute_force_optimistic(topo, b)) <= 1e-9);
    // The truth lies inside the bands, so the plan is optimistic for every policy.
    for_each_policy(topo, 256, [&](const Policy& pi) {
      CHECK(plan.root_value() >= evaluate_policy(k, r, pi) - 1e-12);
    });
  }
}

TEST_CASE("plan invariants: rows in bands, values bounded, linear operation count") {
  Rng rng(4);
  auto topo = test::make_topology({1, 2, 3, 2, 1}, 3);
  const auto k = test::random_kernel(topo, rng);
  const auto r = test::random_reward(topo, rng);
  const ConfidenceBands b = test::random_bands_around(k, r, 0.5, rng);
  const OptimisticPlan plan = optimistic_plan(topo, b);
  CHECK(plan.diagnostics.max_row_sum_error <= 1e-12);
  CHECK(plan.kernel.max_row_sum_error() <= 1e-12);
  CHECK(plan.diagnostics.row_operations == topo->max_transitions() * topo->num_actions());
  for (int t = 0; t < topo->num_triples(); ++t) {
    CHECK(b.contains_transition(t, plan.kernel.triple_probs()[t], 1e-15));
  }
  CHECK(plan.reward.means() == b.reward_hi);
  for (int l = 0; l < topo->num_layers(); ++l) {
    CHECK(plan.values[l].minCoeff() >= 0.0);
    CHECK(plan.values[l].maxCoeff() <= topo->horizon() - l + 1e-12);
  }
  CHECK(plan.values.back().isZero());
  CHECK(std::abs(plan.root_value() - evaluate_policy(plan.kernel, plan.reward, plan.policy)) <= 1e-12);
}

TEST_CASE("brute force is monotone in band width") {
  Rng rng(5);
  for (int i = 0; i < 30; ++i) {
    auto topo = test::make_topology({1, 2, 2}, 2);
    const auto k = test::random_kernel(topo, rng);
    const auto r = test::random_reward(topo, rng);
    const ConfidenceBands narrow = test::random_bands_around(k, r, 0.1, rng);
    ConfidenceBands wide = narrow;
    wide.reward_hi = (wide.reward_hi.array() + 0.1).min(1.0);
    wide.transition_lo = (wide.transition_lo.array() - 0.1).max(0.0);
    wide.transition_hi = (wide.transition_hi.array() + 0.1).min(1.0);
    CHECK(brute_force_optimistic(topo, wide) >= brute_force_optimistic(topo, narrow) - 1e-12);
  }
}

TEST_CASE("infeasible bands fall back to normalized centers and are counted") {
  auto topo = test::make_topology({1, 2}, 1);
  ConfidenceBands b;
  b.reward_center = b.reward_lo = b.reward_hi = Eigen::VectorXd::Constant(1, 0.5);
  b.transition_center = Eigen::Vector2d(0.1, 0.3);
  b.transition_lo = Eigen::Vector2d(0.05, 0.25);
  b.transition_hi = Eigen::Vector2d(0.15, 0.35);
  const OptimisticPlan plan = optimistic_plan(topo, b);
  CHECK(plan.diagnostics.infeasible_rows == 1);
  CHECK(plan.kernel.row(0)[0] == doctest::Approx(0.25));
  CHECK(plan.kernel.max_row_sum_error() <= 1e-12);
}

TEST_CASE("brute force refuses large instances") {
  auto topo = test::make_topology({1, 2, 3, 2, 1}, 3);
  Rng rng(6);
  const auto k = test::random_kernel(topo, rng);
  CHECK_THROWS_AS(brute_force_optimistic(topo, test::exact_bands(k, test::random_reward(topo, rng))),
                  std::invalid_argument);
}
