#include "ctxmdp/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include "ctxmdp/confidence.hpp"
#include "ctxmdp/design_matrix.hpp"
#include "ctxmdp/environment.hpp"
#include "ctxmdp/estimation.hpp"
#include "ctxmdp/experiment.hpp"
#include "ctxmdp/learner.hpp"
#include "ctxmdp/planner.hpp"

namespace ctxmdp {

namespace {

// Largest kernel row-sum error seen by any check in this process.
double g_row_sum_error = 0.0;

void note_rows(double error) { g_row_sum_error = std::max(g_row_sum_error, error); }

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

Rng criterion_rng(const AcceptanceOptions& options, int id) {
  std::seed_seq seq{static_cast<std::uint32_t>(options.seed),
                    static_cast<std::uint32_t>(options.seed >> 32), 1000u + id};
  return Rng(seq);
}

// Random probability vector of the given size.
Eigen::VectorXd random_row(int size, Rng& rng) {
  std::exponential_distribution<double> expo(1.0);
  Eigen::VectorXd row(size);
  for (int k = 0; k < size; ++k) row[k] = expo(rng);
  return row / row.sum();
}

// Random successor subsets on a small layered topology.
TopologyPtr random_topology(const std::vector<int>& sizes, int actions, Rng& rng) {
  std::bernoulli_distribution keep(0.7);
  std::vector<EdgeSpec> edges;
  for (int l = 0; l + 1 < static_cast<int>(sizes.size()); ++l) {
    for (int s = 0; s < sizes[l]; ++s) {
      for (int a = 0; a < actions; ++a) {
        std::vector<int> succ;
        for (int k = 0; k < sizes[l + 1]; ++k) {
          if (keep(rng)) succ.push_back(k);
        }
        if (succ.empty()) {
          std::uniform_int_distribution<int> pick(0, sizes[l + 1] - 1);
          succ.push_back(pick(rng));
        }
        edges.push_back({l, s, a, std::move(succ)});
      }
    }
  }
  return std::make_shared<const LayeredTopology>(sizes, actions, edges);
}

TransitionKernel random_kernel(const TopologyPtr& topo, Rng& rng) {
  Eigen::VectorXd probs(topo->num_triples());
  for (int p = 0; p < topo->num_pairs(); ++p) {
    const int begin = topo->triple_begin(p);
    const int size = topo->triple_end(p) - begin;
    probs.segment(begin, size) = random_row(size, rng);
  }
  return TransitionKernel(topo, std::move(probs));
}

// Bands around random centers with random, possibly zero, widths.
ConfidenceBands random_bands(const TopologyPtr& topo, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ConfidenceBands b;
  const int pairs = topo->num_pairs();
  const int triples = topo->num_triples();
  b.reward_center.resize(pairs);
  b.reward_lo.resize(pairs);
  b.reward_hi.resize(pairs);
  for (int p = 0; p < pairs; ++p) {
    const double c = unit(rng);
    b.reward_center[p] = c;
    b.reward_lo[p] = std::max(0.0, c - 0.3 * unit(rng));
    b.reward_hi[p] = std::min(1.0, c + 0.3 * unit(rng));
  }
  b.transition_center.resize(triples);
  b.transition_lo.resize(triples);
  b.transition_hi.resize(triples);
  for (int p = 0; p < pairs; ++p) {
    const int begin = topo->triple_begin(p);
    const int size = topo->triple_end(p) - begin;
    const Eigen::VectorXd row = random_row(size, rng);
    const double scale = unit(rng) < 0.2 ? 0.0 : 0.5 * unit(rng);
    for (int k = 0; k < size; ++k) {
      b.transition_center[begin + k] = row[k];
      b.transition_lo[begin + k] =
          size == 1 ? 1.0 : std::max(0.0, row[k] - scale * unit(rng));
      b.transition_hi[begin + k] =
          size == 1 ? 1.0 : std::min(1.0, row[k] + scale * unit(rng));
    }
  }
  return b;
}

CriterionResult planner_oracle(const AcceptanceOptions& options) {
  Rng rng = criterion_rng(options, 1);
  std::uniform_int_distribution<int> size(1, 3);
  double worst = 0.0;
  int mismatches = 0;
  const int instances = 200;
  for (int i = 0; i < instances; ++i) {
    const TopologyPtr topo = random_topology({1, size(rng), size(rng)}, 2, rng);
    const ConfidenceBands bands = random_bands(topo, rng);
    const OptimisticPlan plan = optimistic_plan(topo, bands);
    note_rows(plan.diagnostics.max_row_sum_error);
    const double exact = brute_force_optimistic(topo, bands);
    const double gap = std::abs(plan.root_value() - exact);
    worst = std::max(worst, gap);
    if (gap > 1e-9) ++mismatches;
  }
  return {1, "planner-oracle equivalence", mismatches == 0,
          fmt("%d/%d instances within 1e-9, max gap %.3g", instances - mismatches, instances,
              worst),
          0.0, 10.0};
}

// Shared run of the optimistic learner with theoretical widths.
struct CoverageRun {
  int episodes = 0;
  int optimistic = 0;
  long transition_checks = 0, transition_escapes = 0;
  long reward_checks = 0, reward_escapes = 0;
  int episodes_with_escape = 0;
  double seconds = 0.0;
};

std::vector<bool> reachable_states(const LayeredTopology& topo) {
  std::vector<bool> reach(topo.num_states(), false);
  reach[0] = true;
  for (int l = 0; l < topo.horizon(); ++l) {
    for (int s = 0; s < topo.layer_size(l); ++s) {
      if (!reach[topo.state_id(l, s)]) continue;
      for (int a = 0; a < topo.num_actions(); ++a) {
        for (int next : topo.successors(l, s, a)) reach[topo.state_id(l + 1, next)] = true;
      }
    }
  }
  return reach;
}

const CoverageRun& coverage_run(const AcceptanceOptions& options) {
  static std::map<std::uint64_t, CoverageRun> cache;
  if (auto it = cache.find(options.seed); it != cache.end()) return it->second;

  const auto start = std::chrono::steady_clock::now();
  const EnvironmentSpec spec = default_fixture_spec();
  Rng env_rng = criterion_rng(options, 2);
  const GroundTruth truth = generate_environment(spec, env_rng);
  const auto& topo = *truth.topology();
  const std::vector<bool> reach = reachable_states(topo);

  LearnerConfig config;
  config.confidence.delta = 0.1;
  config.norm_bound = spec.norm_bound;
  OfuLearner learner(truth.topology(), truth.feature_maps(), truth.link(), config);
  Rng side_rng = criterion_rng(options, 20);
  Rng path_rng = criterion_rng(options, 21);

  CoverageRun run;
  run.episodes = 2000;
  for (int t = 1; t <= run.episodes; ++t) {
    const Eigen::VectorXd x = truth.sample_side_info(side_rng);
    const TrueModels models = truth.true_models(x);
    note_rows(models.kernel.max_row_sum_error());
    const double oracle = best_policy(models.kernel, models.reward).value;
    const OfuLearner::EpisodePlan ep = learner.plan_episode(x);
    note_rows(ep.plan.diagnostics.max_row_sum_error);
    if (ep.plan.root_value() >= oracle - 1e-12) ++run.optimistic;

    bool escaped = false;
    for (int p = 0; p < topo.num_pairs(); ++p) {
      const PairRef& ref = topo.pair(p);
      if (!reach[topo.state_id(ref.layer, ref.state)]) continue;
      ++run.reward_checks;
      if (!ep.bands.contains_reward(p, models.reward.mean(p))) {
        ++run.reward_escapes;
        escaped = true;
      }
      for (int k = topo.triple_begin(p); k < topo.triple_end(p); ++k) {
        ++run.transition_checks;
        if (!ep.bands.contains_transition(k, models.kernel.triple_probs()[k])) {
          ++run.transition_escapes;
          escaped = true;
        }
      }
    }
    if (escaped) ++run.episodes_with_escape;

    learner.observe(truth.rollout(x, ep.policy, t, path_rng));
  }
  run.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return cache.emplace(options.seed, run).first->second;
}

CriterionResult optimism_frequency(const AcceptanceOptions& options) {
  const CoverageRun& run = coverage_run(options);
  const double rate = static_cast<double>(run.optimistic) / run.episodes;
  return {2, "optimism frequency", rate >= 0.9,
          fmt("optimistic value >= oracle value in %d/%d episodes (%.4f, need >= 0.9)",
              run.optimistic, run.episodes, rate),
          0.0, 120.0};
}

CriterionResult confidence_coverage(const AcceptanceOptions& options) {
  const CoverageRun& run = coverage_run(options);
  const double tr = static_cast<double>(run.transition_escapes) / run.transition_checks;
  const double rw = static_cast<double>(run.reward_escapes) / run.reward_checks;
  return {3, "confidence coverage", tr <= 0.1 && rw <= 0.1,
          fmt("escape rate transitions %.4f (%ld/%ld), rewards %.4f (%ld/%ld), episodes with "
              "any escape %d/%d; need <= 0.1",
              tr, run.transition_escapes, run.transition_checks, rw, run.reward_escapes,
              run.reward_checks, run.episodes_with_escape, run.episodes),
          0.0, 120.0};
}

CriterionResult elliptical_potential(const AcceptanceOptions& options) {
  Rng rng = criterion_rng(options, 4);
  int violations = 0, cases = 0;
  double tightest = 0.0;
  for (int k : {1, 2, 5}) {
    for (int t : {10, 1000, 10000}) {
      const double bound = 2.0 * k * std::log(1.0 + static_cast<double>(t) / k);
      for (int rep = 0; rep < 50; ++rep) {
        DesignMatrix w(k);
        double potential = 0.0;
        for (int s = 0; s < t; ++s) {
          const Eigen::VectorXd v = sample_ball(k, 1.0, rng);
          potential += std::min(1.0, w.squared_norm(v));
          w.add(v);
        }
        ++cases;
        tightest = std::max(tightest, potential / bound);
        if (potential > bound) ++violations;
      }
    }
  }
  return {4, "elliptical potential", violations == 0,
          fmt("%d violations in %d sequences, max potential/bound %.4f", violations, cases,
              tightest),
          0.0, 30.0};
}

CriterionResult occupancy_perturbation(const AcceptanceOptions& options) {
  Rng rng = criterion_rng(options, 5);
  std::uniform_int_distribution<int> layers(2, 5), size(1, 4), actions(1, 3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int violations = 0;
  double worst_slack = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 100; ++i) {
    std::vector<int> sizes{1};
    const int n = layers(rng);
    for (int l = 1; l <= n; ++l) sizes.push_back(size(rng));
    const TopologyPtr topo = random_topology(sizes, actions(rng), rng);
    const TransitionKernel p = random_kernel(topo, rng);
    const TransitionKernel noise = random_kernel(topo, rng);
    const double mix = unit(rng);
    const TransitionKernel q(topo, (1.0 - mix) * p.triple_probs() + mix * noise.triple_probs());
    note_rows(p.max_row_sum_error());
    note_rows(q.max_row_sum_error());

    std::vector<int> acts(topo->state_id(topo->horizon(), 0));
    std::uniform_int_distribution<int> pick(0, topo->num_actions() - 1);
    for (int& a : acts) a = pick(rng);
    const Policy policy(topo, acts);

    const auto mu = occupancy(p, policy);
    const auto mu_hat = occupancy(q, policy);
    double bound = 0.0;
    for (int l = 0; l <= topo->horizon(); ++l) {
      const double diff = (mu_hat[l] - mu[l]).lpNorm<1>();
      worst_slack = std::min(worst_slack, bound - diff);
      if (diff > bound + 1e-10) ++violations;
      if (l == topo->horizon()) break;
      for (int s = 0; s < topo->layer_size(l); ++s) {
        const int pair = topo->pair_index(l, s, policy.action(l, s));
        bound += mu[l][s] * (q.row(pair) - p.row(pair)).lpNorm<1>();
      }
    }
  }
  return {5, "occupancy perturbation", violations == 0,
          fmt("%d violations in 100 kernel pairs, smallest slack %.3g", violations,
              worst_slack),
          0.0, 10.0};
}

ExperimentConfig regret_config(const EnvironmentSpec& spec, LearnerKind learner,
                               const AcceptanceOptions& options) {
  ExperimentConfig config;
  config.environment = spec;
  config.episodes = 8192;
  config.delta = 0.1;
  config.rho_scale = 0.1;
  config.learner = learner;
  config.seeds.clear();
  for (std::uint64_t s = 0; s < 8; ++s) config.seeds.push_back(options.seed + s);
  config.workers = options.workers;
  return config;
}

double mean_regret_at(const ExperimentResult& result, int episode) {
  double sum = 0.0;
  for (const auto& tr : result.traces) sum += tr.regret_at(episode);
  return sum / static_cast<double>(result.traces.size());
}

void note_traces(const ExperimentResult& result) {
  for (const auto& tr : result.traces) {
    note_rows(tr.environment_row_sum_error);
    note_rows(tr.planner_row_sum_error);
  }
}

CriterionResult regret_sublinearity(const AcceptanceOptions& options) {
  const ExperimentResult result =
      run_experiment(regret_config(default_fixture_spec(), LearnerKind::ofu, options));
  note_traces(result);
  bool ok = true;
  std::ostringstream detail;
  detail << "R(T) =";
  for (int t : {512, 1024, 2048, 4096, 8192}) {
    detail << fmt(" %d:%.2f", t, mean_regret_at(result, t));
  }
  detail << "; ratios";
  for (int t : {1024, 2048, 4096}) {
    const double ratio = mean_regret_at(result, 2 * t) / mean_regret_at(result, t);
    ok = ok && ratio <= 1.7;
    detail << fmt(" R(%d)/R(%d)=%.3f", 2 * t, t, ratio);
  }
  const double per_ep = (mean_regret_at(result, 8192) / 8192.0) /
                        (mean_regret_at(result, 512) / 512.0);
  ok = ok && per_ep < 0.5;
  detail << fmt("; (R(8192)/8192)/(R(512)/512)=%.3f", per_ep);
  return {6, "regret sublinearity", ok, detail.str(), 0.0, 600.0};
}

CriterionResult separation(const AcceptanceOptions& options) {
  const EnvironmentSpec spec = context_dependent_fixture_spec();
  const ExperimentResult ofu = run_experiment(regret_config(spec, LearnerKind::ofu, options));
  const ExperimentResult blind =
      run_experiment(regret_config(spec, LearnerKind::context_blind, options));
  note_traces(ofu);
  note_traces(blind);
  const double r_ofu = ofu.summary.at("final_regret_mean").get<double>();
  const double r_blind = blind.summary.at("final_regret_mean").get<double>();
  return {7, "separation", r_ofu < 0.5 * r_blind,
          fmt("final regret ofu %.2f, context_blind %.2f, ratio %.3f (need < 0.5)", r_ofu,
              r_blind, r_ofu / r_blind),
          0.0, 900.0};
}

CriterionResult estimator_consistency(const AcceptanceOptions& options) {
  Rng rng = criterion_rng(options, 8);
  const EnvironmentSpec spec = default_fixture_spec();
  const FeatureMaps maps = spec.feature_maps();
  const LinkFunction link(spec.link);
  const int m = maps.reward.output_dim();
  const int samples = 10000;
  int recovered = 0;
  double worst_error = 0.0, worst_residual = 0.0;
  bool all_converged = true;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd planted = sample_ball(m, spec.norm_bound, rng);
    Eigen::MatrixXd features(m, samples);
    Eigen::VectorXd y(samples);
    for (int u = 0; u < samples; ++u) {
      features.col(u) = maps.reward(sample_ball(spec.side_info_dim, spec.x_max, rng));
      y[u] = sample_step_reward(link(features.col(u).dot(planted)), RewardNoise::bernoulli, 0.0,
                                rng);
    }
    const MqleResult r = solve_mqle(features, y, link, spec.norm_bound);
    all_converged = all_converged && r.converged;
    const double residual = mqle_score_residual(features, y, link, r.unprojected);
    const double error = (r.params - planted).norm();
    worst_error = std::max(worst_error, error);
    worst_residual = std::max(worst_residual, residual);
    if (error <= 0.1) ++recovered;
  }
  return {8, "estimator consistency",
          recovered == 20 && worst_residual <= 1e-8 && all_converged,
          fmt("%d/20 trials within 0.1 (worst error %.4f), worst score residual %.3g", recovered,
              worst_error, worst_residual),
          0.0, 30.0};
}

CriterionResult numerical_hygiene(const AcceptanceOptions& options) {
  Rng rng = criterion_rng(options, 9);
  const int k = 5;
  const long updates = 100000;
  DesignMatrix acc(k);
  Eigen::MatrixXd direct = Eigen::MatrixXd::Identity(k, k);
  for (long i = 0; i < updates; ++i) {
    const Eigen::VectorXd w = sample_ball(k, 1.0, rng);
    acc.add(w);
    direct.noalias() += w * w.transpose();
  }
  const Eigen::MatrixXd inverse = direct.inverse();
  const double inv_err = (acc.inverse() - inverse).cwiseAbs().maxCoeff();
  const double inv_rel = inv_err / inverse.cwiseAbs().maxCoeff();

  // Kernel rows of generated environments and their optimistic plans.
  const GroundTruth truth = generate_environment(default_fixture_spec(), rng);
  OfuLearner learner(truth.topology(), truth.feature_maps(), truth.link(), LearnerConfig{});
  for (int i = 0; i < 1000; ++i) {
    const Eigen::VectorXd x = truth.sample_side_info(rng);
    note_rows(truth.true_models(x).kernel.max_row_sum_error());
    note_rows(learner.plan_episode(x).plan.diagnostics.max_row_sum_error);
  }
  return {9, "numerical hygiene", inv_err <= 1e-8 && g_row_sum_error <= 1e-12,
          fmt("inverse after %ld updates off by %.3g (relative %.3g); max kernel row-sum error "
              "%.3g",
              updates, inv_err, inv_rel, g_row_sum_error),
          0.0, 0.0};
}

}  // namespace

CriterionResult run_criterion(int id, const AcceptanceOptions& options) {
  static const std::function<CriterionResult(const AcceptanceOptions&)> checks[] = {
      planner_oracle,        optimism_frequency,  confidence_coverage,
      elliptical_potential,  occupancy_perturbation, regret_sublinearity,
      separation,            estimator_consistency,  numerical_hygiene};
  if (id < 1 || id > kCriterionCount) throw std::invalid_argument("criterion id must be 1..9");
  const auto start = std::chrono::steady_clock::now();
  CriterionResult result = checks[id - 1](options);
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  // Criteria 2 and 3 share one simulation; charge it to each.
  if (id == 2 || id == 3) result.seconds = std::max(result.seconds, coverage_run(options).seconds);
  if (result.time_limit > 0.0 && result.seconds > result.time_limit) {
    result.passed = false;
    result.detail += fmt("; exceeded %.0f s limit", result.time_limit);
  }
  return result;
}

std::string format_result(const CriterionResult& r) {
  return fmt("criterion %d [%s] %s: %s (%.2f s)", r.id, r.passed ? "PASS" : "FAIL",
             r.name.c_str(), r.detail.c_str(), r.seconds);
}

}  // namespace ctxmdp
