// Command-line front end: run, check, dump-fixture, replay.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "ctxmdp/acceptance.hpp"
#include "ctxmdp/experiment.hpp"

using namespace ctxmdp;

namespace {

// Optional flags mirroring the config keys; set values override the file.
struct Overrides {
  Json values = Json::object();
  std::vector<int> layer_sizes;
  int num_actions = 0, side_info_dim = 0, transition_dim = 0, reward_dim = 0, successors = 0;
  int episodes = 0, workers = 0;
  double x_max = 0, norm_bound = 0, noise_width = 0, delta = 0, rho_scale = 0;
  std::string link, reward_noise, refresh, learner, output, fixture;
  std::vector<std::uint64_t> seeds;
  bool feature_bias = false, misspecified = false, context_dependent = false;
  std::string config_path;

  void add_to(CLI::App* app) {
    app->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    bind(app, "--layer-sizes", "layer_sizes", layer_sizes);
    bind(app, "--num-actions", "num_actions", num_actions);
    bind(app, "--side-info-dim", "side_info_dim", side_info_dim);
    bind(app, "--transition-dim", "transition_dim", transition_dim);
    bind(app, "--reward-dim", "reward_dim", reward_dim);
    bind(app, "--feature-bias", "feature_bias", feature_bias);
    bind(app, "--x-max", "x_max", x_max);
    bind(app, "--norm-bound", "norm_bound", norm_bound);
    bind(app, "--link", "link", link);
    bind(app, "--reward-noise", "reward_noise", reward_noise);
    bind(app, "--noise-width", "noise_width", noise_width);
    bind(app, "--successors", "successors", successors);
    bind(app, "--misspecified", "misspecified", misspecified);
    bind(app, "--context-dependent", "context_dependent", context_dependent);
    bind(app, "--episodes", "episodes", episodes);
    bind(app, "--delta", "delta", delta);
    bind(app, "--rho-scale", "rho_scale", rho_scale);
    bind(app, "--refresh", "refresh", refresh);
    bind(app, "--seeds", "seeds", seeds);
    bind(app, "--learner", "learner", learner);
    bind(app, "--output", "output", output);
    bind(app, "--fixture", "fixture", fixture);
    bind(app, "--workers", "workers", workers);
  }

  template <typename T>
  void bind(CLI::App* app, const std::string& flag, const std::string& key, T& target) {
    app->add_option_function<T>(
        flag, [this, key, &target](const T& v) { target = v; values[key] = v; },
        "overrides config key " + key);
  }

  void bind(CLI::App* app, const std::string& flag, const std::string& key, bool& target) {
    app->add_option_function<bool>(
        flag, [this, key, &target](const bool& v) { target = v; values[key] = v; },
        "overrides config key " + key + " (true/false)");
  }

  ExperimentConfig resolve() const {
    Json merged = config_path.empty() ? Json::object() : read_json_file(config_path);
    for (auto it = values.begin(); it != values.end(); ++it) merged[it.key()] = it.value();
    ExperimentConfig config = config_from_json(merged);
    apply_environment_overrides(config);
    config.validate();
    return config;
  }
};

int cmd_run(const Overrides& o) {
  const ExperimentConfig config = o.resolve();
  const ExperimentResult result = run_experiment(config);
  write_results(config, result);
  const auto& s = result.summary;
  std::cout << "learner " << s.at("learner").get<std::string>() << ", "
            << config.seeds.size() << " seed(s), " << config.episodes
            << " episodes: final regret " << s.at("final_regret_mean").get<double>() << " +- "
            << s.at("final_regret_se").get<double>() << "\nresults in " << config.output.string()
            << "\n";
  return 0;
}

int cmd_check(const std::vector<int>& ids, const AcceptanceOptions& options) {
  std::vector<int> run = ids;
  if (run.empty()) {
    for (int i = 1; i <= kCriterionCount; ++i) run.push_back(i);
  }
  bool all = true;
  for (int id : run) {
    const CriterionResult r = run_criterion(id, options);
    std::cout << format_result(r) << std::endl;
    all = all && r.passed;
  }
  return all ? 0 : 1;
}

int cmd_dump_fixture(const Overrides& o, std::uint64_t seed, const std::string& out) {
  const ExperimentConfig config = o.resolve();
  const GroundTruth truth = replication_environment(config, seed);
  const Json j = ground_truth_to_json(truth, seed);
  if (out.empty() || out == "-") {
    std::cout << j.dump(2) << "\n";
  } else {
    write_json_file(out, j);
  }
  return 0;
}

// Re-runs one seed of a finished experiment and compares its trace bytes.
int cmd_replay(const std::string& dir, std::uint64_t seed) {
  const std::filesystem::path root(dir);
  ExperimentConfig config = config_from_json(read_json_file(root / "config.json"));
  std::optional<GroundTruth> fixture;
  if (config.fixture) fixture = ground_truth_from_json(read_json_file(*config.fixture));
  const GroundTruth truth =
      replication_environment(config, seed, fixture ? &*fixture : nullptr);
  const RegretTrace trace = run_replication(config, truth, seed);
  const std::string replayed = trace_csv(trace);

  const auto path = root / ("trace_" + std::to_string(seed) + ".csv");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::stringstream recorded;
  recorded << in.rdbuf();
  if (recorded.str() == replayed) {
    std::cout << "replay of seed " << seed << " matches " << path.string() << " ("
              << trace.rows.size() << " episodes, final regret " << trace.final_regret()
              << ")\n";
    return 0;
  }
  std::cout << "replay of seed " << seed << " differs from " << path.string() << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contextual loop-free MDP learning experiments"};
  app.require_subcommand(1);

  Overrides run_opts;
  auto* run = app.add_subcommand("run", "run a regret experiment");
  run_opts.add_to(run);

  std::vector<int> criteria;
  AcceptanceOptions acc;
  auto* check = app.add_subcommand("check", "run the acceptance checks");
  check->add_option("criteria", criteria, "criterion ids (default: all)")
      ->check(CLI::Range(1, kCriterionCount));
  check->add_option("--seed", acc.seed, "base seed");
  check->add_option("--workers", acc.workers, "threads for regret runs")
      ->check(CLI::PositiveNumber);

  Overrides dump_opts;
  std::uint64_t dump_seed = 1;
  std::string dump_out;
  auto* dump = app.add_subcommand("dump-fixture", "write a generated ground truth as JSON");
  dump_opts.add_to(dump);
  dump->add_option("--seed", dump_seed, "environment seed");
  dump->add_option("-o,--out", dump_out, "output file (default stdout)");

  std::string replay_dir;
  std::uint64_t replay_seed = 0;
  auto* replay = app.add_subcommand("replay", "re-run one seed and compare with its trace");
  replay->add_option("results", replay_dir, "results directory of a previous run")->required();
  replay->add_option("--seed", replay_seed, "seed to replay")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_opts);
    if (*check) return cmd_check(criteria, acc);
    if (*dump) return cmd_dump_fixture(dump_opts, dump_seed, dump_out);
    if (*replay) return cmd_replay(replay_dir, replay_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
