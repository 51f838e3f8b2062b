#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ctxmdp/environment.hpp"
#include "ctxmdp/learner.hpp"
#include "ctxmdp/serialization.hpp"

namespace ctxmdp {

enum class LearnerKind { ofu, context_blind, random, oracle };

LearnerKind learner_kind_from_name(const std::string& name);
std::string learner_kind_name(LearnerKind kind);

/// One experiment: environment generation parameters plus the learner and
/// run settings. Serialized as a flat JSON object; unknown keys are errors.
struct ExperimentConfig {
  EnvironmentSpec environment = default_fixture_spec();
  int episodes = 1000;
  double delta = 0.1;
  double rho_scale = 1.0;
  RefreshSchedule refresh = RefreshSchedule::every_visit;
  std::vector<std::uint64_t> seeds{1};
  LearnerKind learner = LearnerKind::ofu;
  std::filesystem::path output = "results";
  /// Ground-truth file shared by every seed. Without one, each seed
  /// generates its own environment.
  std::optional<std::filesystem::path> fixture;
  int workers = 1;

  void validate() const;
  LearnerConfig learner_config() const;
};

ExperimentConfig config_from_json(const Json& j);
Json config_to_json(const ExperimentConfig& config);

/// CTXMDP_OUTPUT_DIR replaces `output`, CTXMDP_WORKERS replaces `workers`.
void apply_environment_overrides(ExperimentConfig& config);

struct TraceRow {
  int episode = 0;
  double oracle_value = 0.0;
  double learner_value = 0.0;
  double realized_return = 0.0;
  double optimistic_value = 0.0;  // NaN without a model
  double cumulative_regret = 0.0;
  int band_infeasible_count = 0;
  int solver_iters = 0;
  int solver_failures = 0;
};

/// Per-episode record of one seeded replication.
struct RegretTrace {
  std::uint64_t seed = 0;
  std::string learner;
  std::vector<TraceRow> rows;
  /// Largest |row sum - 1| over every true and planned kernel of the run.
  double environment_row_sum_error = 0.0;
  double planner_row_sum_error = 0.0;
  long solver_failures = 0;

  double final_regret() const { return rows.empty() ? 0.0 : rows.back().cumulative_regret; }
  /// Cumulative regret after `episode` episodes (1-based).
  double regret_at(int episode) const { return rows.at(episode - 1).cumulative_regret; }
};

/// Per-episode term of the best dynamic policy's value: the optimal value
/// under the true models at x.
double oracle_value(const GroundTruth& truth, const Eigen::VectorXd& x);

/// Random streams of one replication, derived from the seed.
enum class Stream : std::uint64_t { environment = 0, side_info = 1, paths = 2, learner = 3 };
Rng make_stream(std::uint64_t seed, Stream stream);

/// Environment of a replication: the fixture when given, else generated
/// from the seed.
GroundTruth replication_environment(const ExperimentConfig& config, std::uint64_t seed,
                                    const GroundTruth* fixture = nullptr);

RegretTrace run_replication(const ExperimentConfig& config, const GroundTruth& truth,
                            std::uint64_t seed);

struct ExperimentResult {
  std::vector<RegretTrace> traces;  // in seed order
  Json summary;
};

/// Runs every seed on `config.workers` threads. The fixture file, when
/// configured, is loaded once and shared.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Final regret mean and standard error across seeds plus the mean regret
/// at power-of-two checkpoints.
Json summarize(const ExperimentConfig& config, const std::vector<RegretTrace>& traces);

/// CSV with columns episode, oracle_value, learner_value, realized_return,
/// cumulative_regret, band_infeasible_count, solver_iters.
std::string trace_csv(const RegretTrace& trace);
void emit_csv(const RegretTrace& trace, const std::filesystem::path& path);

/// trace_<seed>.csv per seed, summary.json and the resolved config.json.
void write_results(const ExperimentConfig& config, const ExperimentResult& result);

}  // namespace ctxmdp
