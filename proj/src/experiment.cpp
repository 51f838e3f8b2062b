#include "ctxmdp/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

namespace ctxmdp {

LearnerKind learner_kind_from_name(const std::string& name) {
  if (name == "ofu") return LearnerKind::ofu;
  if (name == "context_blind") return LearnerKind::context_blind;
  if (name == "random") return LearnerKind::random;
  if (name == "oracle") return LearnerKind::oracle;
  throw std::invalid_argument("unknown learner '" + name + "'");
}

std::string learner_kind_name(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::ofu: return "ofu";
    case LearnerKind::context_blind: return "context_blind";
    case LearnerKind::random: return "random";
    case LearnerKind::oracle: return "oracle";
  }
  return "ofu";
}

void ExperimentConfig::validate() const {
  environment.validate();
  if (episodes < 1) throw std::invalid_argument("episode count must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0,1)");
  if (!(rho_scale > 0.0)) throw std::invalid_argument("rho_scale must be positive");
  if (seeds.empty()) throw std::invalid_argument("at least one seed is required");
  if (workers < 1) throw std::invalid_argument("worker count must be positive");
}

LearnerConfig ExperimentConfig::learner_config() const {
  LearnerConfig c;
  c.confidence.delta = delta;
  c.confidence.rho_scale = rho_scale;
  c.norm_bound = environment.norm_bound;
  c.refresh = refresh;
  return c;
}

ExperimentConfig config_from_json(const Json& j) {
  require_known_keys(j,
                     {"layer_sizes", "num_actions", "side_info_dim", "transition_dim",
                      "reward_dim", "feature_bias", "x_max", "norm_bound", "link", "reward_noise",
                      "noise_width", "successors", "misspecified", "context_dependent",
                      "episodes", "delta", "rho_scale", "refresh", "seeds", "learner", "output",
                      "fixture", "workers"},
                     "config");
  ExperimentConfig c;
  // Environment keys default to the fixture and are overridden one by one.
  Json env = environment_spec_to_json(c.environment);
  for (auto it = env.begin(); it != env.end(); ++it) {
    if (j.contains(it.key())) *it = j.at(it.key());
  }
  c.environment = environment_spec_from_json(env);
  try {
    if (j.contains("episodes")) c.episodes = j.at("episodes").get<int>();
    if (j.contains("delta")) c.delta = j.at("delta").get<double>();
    if (j.contains("rho_scale")) c.rho_scale = j.at("rho_scale").get<double>();
    if (j.contains("refresh")) {
      const auto name = j.at("refresh").get<std::string>();
      if (name == "every_visit") {
        c.refresh = RefreshSchedule::every_visit;
      } else if (name == "doubling") {
        c.refresh = RefreshSchedule::doubling;
      } else {
        throw FormatError("config: unknown refresh schedule '" + name + "'");
      }
    }
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("learner")) c.learner = learner_kind_from_name(j.at("learner").get<std::string>());
    if (j.contains("output")) c.output = j.at("output").get<std::string>();
    if (j.contains("fixture") && !j.at("fixture").is_null()) {
      c.fixture = j.at("fixture").get<std::string>();
    }
    if (j.contains("workers")) c.workers = j.at("workers").get<int>();
  } catch (const Json::exception& e) {
    throw FormatError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  return c;
}

Json config_to_json(const ExperimentConfig& config) {
  Json j = environment_spec_to_json(config.environment);
  j["episodes"] = config.episodes;
  j["delta"] = config.delta;
  j["rho_scale"] = config.rho_scale;
  j["refresh"] = config.refresh == RefreshSchedule::doubling ? "doubling" : "every_visit";
  j["seeds"] = config.seeds;
  j["learner"] = learner_kind_name(config.learner);
  j["output"] = config.output.string();
  if (config.fixture) j["fixture"] = config.fixture->string();
  j["workers"] = config.workers;
  return j;
}

void apply_environment_overrides(ExperimentConfig& config) {
  if (const char* dir = std::getenv("CTXMDP_OUTPUT_DIR"); dir && *dir) config.output = dir;
  if (const char* workers = std::getenv("CTXMDP_WORKERS"); workers && *workers) {
    char* end = nullptr;
    const long n = std::strtol(workers, &end, 10);
    if (*end != '\0' || n < 1) throw FormatError("CTXMDP_WORKERS must be a positive integer");
    config.workers = static_cast<int>(n);
  }
}

double oracle_value(const GroundTruth& truth, const Eigen::VectorXd& x) {
  const TrueModels models = truth.true_models(x);
  return best_policy(models.kernel, models.reward).value;
}

Rng make_stream(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return Rng(seq);
}

GroundTruth replication_environment(const ExperimentConfig& config, std::uint64_t seed,
                                    const GroundTruth* fixture) {
  if (fixture) return *fixture;
  Rng rng = make_stream(seed, Stream::environment);
  return generate_environment(config.environment, rng);
}

namespace {

std::unique_ptr<Learner> make_learner(const ExperimentConfig& config, const GroundTruth& truth,
                                      std::uint64_t seed) {
  const LearnerConfig lc = config.learner_config();
  switch (config.learner) {
    case LearnerKind::ofu:
      return std::make_unique<OfuLearner>(truth.topology(), truth.feature_maps(), truth.link(), lc);
    case LearnerKind::context_blind:
      return make_context_blind_learner(truth.topology(), truth.spec().side_info_dim,
                                        truth.spec().x_max, truth.link(), lc);
    case LearnerKind::random: {
      Rng rng = make_stream(seed, Stream::learner);
      return std::make_unique<RandomLearner>(truth.topology(), rng());
    }
    case LearnerKind::oracle:
      return nullptr;
  }
  return nullptr;
}

}  // namespace

RegretTrace run_replication(const ExperimentConfig& config, const GroundTruth& truth,
                            std::uint64_t seed) {
  RegretTrace trace;
  trace.seed = seed;
  trace.learner = learner_kind_name(config.learner);
  trace.rows.reserve(config.episodes);

  Rng side_rng = make_stream(seed, Stream::side_info);
  Rng path_rng = make_stream(seed, Stream::paths);
  std::unique_ptr<Learner> learner = make_learner(config, truth, seed);

  double cumulative = 0.0;
  for (int t = 1; t <= config.episodes; ++t) {
    const Eigen::VectorXd x = truth.sample_side_info(side_rng);
    const TrueModels models = truth.true_models(x);
    trace.environment_row_sum_error =
        std::max(trace.environment_row_sum_error, models.kernel.max_row_sum_error());
    const PolicyValue best = best_policy(models.kernel, models.reward);

    TraceRow row;
    row.episode = t;
    row.oracle_value = best.value;
    Trajectory trajectory;
    if (learner) {
      EpisodeDecision decision = learner->decide(x);
      row.learner_value = evaluate_policy(models.kernel, models.reward, decision.policy);
      row.optimistic_value = decision.optimistic_value;
      row.band_infeasible_count = decision.infeasible_rows;
      trace.planner_row_sum_error = std::max(trace.planner_row_sum_error, decision.row_sum_error);
      trajectory = truth.rollout(x, decision.policy, t, path_rng);
      const RefreshReport report = learner->observe(trajectory);
      row.solver_iters = report.iterations;
      row.solver_failures = report.failures;
      if (report.failures > 0) {
        trace.solver_failures += report.failures;
        std::cerr << "seed " << seed << " episode " << t << ": " << report.failures
                  << " estimate(s) kept after solver non-convergence\n";
      }
    } else {
      row.learner_value = best.value;
      row.optimistic_value = best.value;
      trajectory = truth.rollout(x, best.policy, t, path_rng);
    }
    row.realized_return = trajectory.total_reward();
    cumulative += row.oracle_value - row.learner_value;
    row.cumulative_regret = cumulative;
    trace.rows.push_back(row);
  }
  return trace;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  std::optional<GroundTruth> fixture;
  if (config.fixture) fixture = ground_truth_from_json(read_json_file(*config.fixture));

  ExperimentResult result;
  result.traces.resize(config.seeds.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < config.seeds.size(); i = next++) {
      try {
        const GroundTruth truth =
            replication_environment(config, config.seeds[i], fixture ? &*fixture : nullptr);
        result.traces[i] = run_replication(config, truth, config.seeds[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int threads =
      std::min<int>(config.workers, static_cast<int>(config.seeds.size()));
  std::vector<std::thread> pool;
  for (int k = 1; k < threads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  result.summary = summarize(config, result.traces);
  return result;
}

namespace {

std::pair<double, double> mean_and_se(const std::vector<double>& values) {
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

}  // namespace

Json summarize(const ExperimentConfig& config, const std::vector<RegretTrace>& traces) {
  std::vector<double> finals;
  double env_err = 0.0, plan_err = 0.0;
  long failures = 0;
  long infeasible = 0;
  for (const auto& tr : traces) {
    finals.push_back(tr.final_regret());
    env_err = std::max(env_err, tr.environment_row_sum_error);
    plan_err = std::max(plan_err, tr.planner_row_sum_error);
    failures += tr.solver_failures;
    for (const auto& row : tr.rows) infeasible += row.band_infeasible_count;
  }
  const auto [mean, se] = mean_and_se(finals);

  Json checkpoints = Json::array();
  std::vector<int> marks;
  for (int t = 1; t <= config.episodes; t *= 2) marks.push_back(t);
  if (marks.back() != config.episodes) marks.push_back(config.episodes);
  for (int t : marks) {
    std::vector<double> at;
    for (const auto& tr : traces) at.push_back(tr.regret_at(t));
    const auto [m, s] = mean_and_se(at);
    checkpoints.push_back({{"episode", t}, {"regret_mean", m}, {"regret_se", s}});
  }

  return {{"learner", learner_kind_name(config.learner)},
          {"episodes", config.episodes},
          {"seeds", config.seeds},
          {"final_regret_mean", mean},
          {"final_regret_se", se},
          {"final_regret_per_seed", finals},
          {"checkpoints", std::move(checkpoints)},
          {"solver_failures", failures},
          {"band_infeasible_rows", infeasible},
          {"max_environment_row_sum_error", env_err},
          {"max_planner_row_sum_error", plan_err}};
}

std::string trace_csv(const RegretTrace& trace) {
  std::string out =
      "episode,oracle_value,learner_value,realized_return,cumulative_regret,"
      "band_infeasible_count,solver_iters\n";
  char buf[256];
  for (const auto& r : trace.rows) {
    std::snprintf(buf, sizeof buf, "%d,%.12g,%.12g,%.12g,%.12g,%d,%d\n", r.episode, r.oracle_value,
                  r.learner_value, r.realized_return, r.cumulative_regret,
                  r.band_infeasible_count, r.solver_iters);
    out += buf;
  }
  return out;
}

void emit_csv(const RegretTrace& trace, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << trace_csv(trace);
  if (!out) throw FormatError("failed writing " + path.string());
}

void write_results(const ExperimentConfig& config, const ExperimentResult& result) {
  std::filesystem::create_directories(config.output);
  for (const auto& tr : result.traces) {
    emit_csv(tr, config.output / ("trace_" + std::to_string(tr.seed) + ".csv"));
  }
  write_json_file(config.output / "summary.json", result.summary);
  write_json_file(config.output / "config.json", config_to_json(config));
}

}  // namespace ctxmdp
