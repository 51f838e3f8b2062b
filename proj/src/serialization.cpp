#include "ctxmdp/serialization.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

namespace ctxmdp {

void require_known_keys(const Json& object, std::initializer_list<const char*> allowed,
                        const std::string& context) {
  if (!object.is_object()) throw FormatError(context + ": expected an object");
  for (const auto& item : object.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* key) { return item.key() == key; });
    if (!known) throw FormatError(context + ": unknown key '" + item.key() + "'");
  }
}

namespace {

template <typename T>
T required(const Json& j, const char* key, const std::string& context) {
  if (!j.contains(key)) throw FormatError(context + ": missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw FormatError(context + ": bad value for '" + key + "': " + e.what());
  }
}

Json vector_to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.begin(), v.end()); }

Eigen::VectorXd vector_from_json(const Json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

Json design_matrix_to_json(const DesignMatrix& acc) {
  return {{"matrix", matrix_to_json(acc.matrix())},
          {"inverse", matrix_to_json(acc.inverse())},
          {"count", acc.count()},
          {"refresh_period", acc.refresh_period()}};
}

DesignMatrix design_matrix_from_json(const Json& j) {
  require_known_keys(j, {"matrix", "inverse", "count", "refresh_period"}, "design matrix");
  return DesignMatrix::restore(matrix_from_json(j.at("matrix")), matrix_from_json(j.at("inverse")),
                               j.at("count").get<long>(), j.at("refresh_period").get<long>());
}

Json learner_config_to_json(const LearnerConfig& c) {
  return {{"delta", c.confidence.delta},
          {"rho_scale", c.confidence.rho_scale},
          {"max_iterations", c.solver.max_iterations},
          {"tolerance", c.solver.tolerance},
          {"norm_bound", c.norm_bound},
          {"refresh", c.refresh == RefreshSchedule::doubling ? "doubling" : "every_visit"},
          {"design_refresh_period", c.design_refresh_period}};
}

LearnerConfig learner_config_from_json(const Json& j) {
  require_known_keys(j,
                     {"delta", "rho_scale", "max_iterations", "tolerance", "norm_bound", "refresh",
                      "design_refresh_period"},
                     "learner config");
  LearnerConfig c;
  c.confidence.delta = required<double>(j, "delta", "learner config");
  c.confidence.rho_scale = required<double>(j, "rho_scale", "learner config");
  c.solver.max_iterations = required<int>(j, "max_iterations", "learner config");
  c.solver.tolerance = required<double>(j, "tolerance", "learner config");
  c.norm_bound = required<double>(j, "norm_bound", "learner config");
  const auto refresh = required<std::string>(j, "refresh", "learner config");
  if (refresh != "doubling" && refresh != "every_visit") {
    throw FormatError("learner config: unknown refresh schedule '" + refresh + "'");
  }
  c.refresh = refresh == "doubling" ? RefreshSchedule::doubling : RefreshSchedule::every_visit;
  c.design_refresh_period = required<long>(j, "design_refresh_period", "learner config");
  return c;
}

}  // namespace

Json matrix_to_json(const Eigen::MatrixXd& m) {
  return {{"rows", m.rows()},
          {"cols", m.cols()},
          {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  require_known_keys(j, {"rows", "cols", "data"}, "matrix");
  const auto rows = required<Eigen::Index>(j, "rows", "matrix");
  const auto cols = required<Eigen::Index>(j, "cols", "matrix");
  const auto data = required<std::vector<double>>(j, "data", "matrix");
  if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw FormatError("matrix: data size does not match its shape");
  }
  return Eigen::Map<const Eigen::MatrixXd>(data.data(), rows, cols);
}

Json topology_to_json(const LayeredTopology& topology) {
  Json j = {{"layer_sizes", topology.layer_sizes()}, {"num_actions", topology.num_actions()}};
  Json edges = Json::array();
  for (int p = 0; p < topology.num_pairs(); ++p) {
    const PairRef& ref = topology.pair(p);
    auto succ = topology.successors(p);
    const int next_size = topology.layer_size(ref.layer + 1);
    bool full = static_cast<int>(succ.size()) == next_size;
    for (int k = 0; full && k < next_size; ++k) full = succ[k] == k;
    if (full) continue;
    edges.push_back({{"layer", ref.layer},
                     {"state", ref.state},
                     {"action", ref.action},
                     {"successors", std::vector<int>(succ.begin(), succ.end())}});
  }
  if (!edges.empty()) j["edges"] = std::move(edges);
  return j;
}

TopologyPtr topology_from_json(const Json& j) {
  require_known_keys(j, {"layer_sizes", "num_actions", "edges"}, "topology");
  std::vector<EdgeSpec> edges;
  if (j.contains("edges")) {
    for (const auto& e : j.at("edges")) {
      require_known_keys(e, {"layer", "state", "action", "successors"}, "topology edge");
      edges.push_back({required<int>(e, "layer", "topology edge"),
                       required<int>(e, "state", "topology edge"),
                       required<int>(e, "action", "topology edge"),
                       required<std::vector<int>>(e, "successors", "topology edge")});
    }
  }
  return std::make_shared<const LayeredTopology>(
      required<std::vector<int>>(j, "layer_sizes", "topology"),
      required<int>(j, "num_actions", "topology"), edges);
}

namespace {

Json feature_map_to_json(const FeatureMap& map) {
  return {{"kind", map.kind() == FeatureKind::constant ? "constant" : "identity"},
          {"input_dim", map.input_dim()},
          {"output_dim", map.output_dim()},
          {"bias", map.has_bias()}};
}

FeatureMap feature_map_from_json(const Json& j) {
  require_known_keys(j, {"kind", "input_dim", "output_dim", "bias"}, "feature map");
  const auto kind = required<std::string>(j, "kind", "feature map");
  const int input_dim = required<int>(j, "input_dim", "feature map");
  if (kind == "constant") return FeatureMap::constant(input_dim);
  if (kind != "identity") throw FormatError("feature map: unknown kind '" + kind + "'");
  return FeatureMap::identity(input_dim, required<int>(j, "output_dim", "feature map"),
                              required<bool>(j, "bias", "feature map"));
}

}  // namespace

Json feature_maps_to_json(const FeatureMaps& maps) {
  return {{"transition", feature_map_to_json(maps.transition)},
          {"reward", feature_map_to_json(maps.reward)},
          {"x_max", maps.x_max}};
}

FeatureMaps feature_maps_from_json(const Json& j) {
  require_known_keys(j, {"transition", "reward", "x_max"}, "feature maps");
  return {feature_map_from_json(j.at("transition")), feature_map_from_json(j.at("reward")),
          required<double>(j, "x_max", "feature maps")};
}

Json parameters_to_json(const LayeredTopology& topology, const ParameterTables& params) {
  Json theta = Json::array();
  Json lambda = Json::array();
  for (int p = 0; p < topology.num_pairs(); ++p) {
    const PairRef& ref = topology.pair(p);
    auto succ = topology.successors(p);
    for (std::size_t k = 0; k < succ.size(); ++k) {
      theta.push_back({{"layer", ref.layer},
                       {"state", ref.state},
                       {"action", ref.action},
                       {"successor", succ[k]},
                       {"values", vector_to_json(params.theta.col(topology.triple_begin(p) +
                                                                  static_cast<int>(k)))}});
    }
    lambda.push_back({{"layer", ref.layer},
                      {"state", ref.state},
                      {"action", ref.action},
                      {"values", vector_to_json(params.lambda.col(p))}});
  }
  return {{"norm_bound", params.norm_bound},
          {"transition_dim", params.theta.rows()},
          {"reward_dim", params.lambda.rows()},
          {"theta", std::move(theta)},
          {"lambda", std::move(lambda)}};
}

ParameterTables parameters_from_json(const LayeredTopology& topology, const Json& j) {
  require_known_keys(j, {"norm_bound", "transition_dim", "reward_dim", "theta", "lambda"},
                     "parameters");
  ParameterTables params = ParameterTables::zeros(
      topology, required<int>(j, "transition_dim", "parameters"),
      required<int>(j, "reward_dim", "parameters"), required<double>(j, "norm_bound", "parameters"));
  std::vector<bool> seen_triple(topology.num_triples(), false);
  for (const auto& e : j.at("theta")) {
    require_known_keys(e, {"layer", "state", "action", "successor", "values"}, "theta entry");
    const int pair = topology.pair_index(required<int>(e, "layer", "theta entry"),
                                         required<int>(e, "state", "theta entry"),
                                         required<int>(e, "action", "theta entry"));
    auto triple = topology.triple_index(pair, required<int>(e, "successor", "theta entry"));
    if (!triple) throw FormatError("theta entry references a missing edge");
    const Eigen::VectorXd v = vector_from_json(e.at("values"));
    if (v.size() != params.theta.rows()) throw FormatError("theta entry has the wrong dimension");
    params.theta.col(*triple) = v;
    seen_triple[*triple] = true;
  }
  std::vector<bool> seen_pair(topology.num_pairs(), false);
  for (const auto& e : j.at("lambda")) {
    require_known_keys(e, {"layer", "state", "action", "values"}, "lambda entry");
    const int pair = topology.pair_index(required<int>(e, "layer", "lambda entry"),
                                         required<int>(e, "state", "lambda entry"),
                                         required<int>(e, "action", "lambda entry"));
    const Eigen::VectorXd v = vector_from_json(e.at("values"));
    if (v.size() != params.lambda.rows()) throw FormatError("lambda entry has the wrong dimension");
    params.lambda.col(pair) = v;
    seen_pair[pair] = true;
  }
  if (std::find(seen_triple.begin(), seen_triple.end(), false) != seen_triple.end() ||
      std::find(seen_pair.begin(), seen_pair.end(), false) != seen_pair.end()) {
    throw FormatError("parameters do not cover every pair and triple");
  }
  try {
    params.validate(topology);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("parameters: ") + e.what());
  }
  return params;
}

Json environment_spec_to_json(const EnvironmentSpec& spec) {
  return {{"layer_sizes", spec.layer_sizes},
          {"num_actions", spec.num_actions},
          {"side_info_dim", spec.side_info_dim},
          {"transition_dim", spec.transition_dim},
          {"reward_dim", spec.reward_dim},
          {"feature_bias", spec.feature_bias},
          {"x_max", spec.x_max},
          {"norm_bound", spec.norm_bound},
          {"link", std::string(LinkFunction(spec.link).name())},
          {"reward_noise", spec.reward_noise == RewardNoise::bernoulli ? "bernoulli" : "uniform"},
          {"noise_width", spec.noise_width},
          {"successors", spec.successors},
          {"misspecified", spec.misspecified},
          {"context_dependent", spec.context_dependent}};
}

EnvironmentSpec environment_spec_from_json(const Json& j) {
  require_known_keys(j,
                     {"layer_sizes", "num_actions", "side_info_dim", "transition_dim",
                      "reward_dim", "feature_bias", "x_max", "norm_bound", "link", "reward_noise",
                      "noise_width", "successors", "misspecified", "context_dependent"},
                     "environment");
  EnvironmentSpec spec;
  const std::string ctx = "environment";
  spec.layer_sizes = required<std::vector<int>>(j, "layer_sizes", ctx);
  spec.num_actions = required<int>(j, "num_actions", ctx);
  spec.side_info_dim = required<int>(j, "side_info_dim", ctx);
  spec.transition_dim = required<int>(j, "transition_dim", ctx);
  spec.reward_dim = required<int>(j, "reward_dim", ctx);
  spec.feature_bias = required<bool>(j, "feature_bias", ctx);
  spec.x_max = required<double>(j, "x_max", ctx);
  spec.norm_bound = required<double>(j, "norm_bound", ctx);
  try {
    spec.link = LinkFunction::from_name(required<std::string>(j, "link", ctx)).kind();
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  const auto noise = required<std::string>(j, "reward_noise", ctx);
  if (noise != "bernoulli" && noise != "uniform") {
    throw FormatError("environment: unknown reward noise '" + noise + "'");
  }
  spec.reward_noise = noise == "bernoulli" ? RewardNoise::bernoulli : RewardNoise::uniform;
  spec.noise_width = required<double>(j, "noise_width", ctx);
  spec.successors = required<int>(j, "successors", ctx);
  spec.misspecified = required<bool>(j, "misspecified", ctx);
  spec.context_dependent = required<bool>(j, "context_dependent", ctx);
  return spec;
}

Json ground_truth_to_json(const GroundTruth& truth, std::optional<std::uint64_t> seed) {
  Json j = {{"spec", environment_spec_to_json(truth.spec())},
            {"topology", topology_to_json(*truth.topology())},
            {"feature_maps", feature_maps_to_json(truth.feature_maps())},
            {"parameters", parameters_to_json(*truth.topology(), truth.parameters())}};
  if (seed) j["seed"] = *seed;
  return j;
}

GroundTruth ground_truth_from_json(const Json& j) {
  require_known_keys(j, {"spec", "topology", "feature_maps", "parameters", "seed"},
                     "ground truth");
  EnvironmentSpec spec = environment_spec_from_json(j.at("spec"));
  TopologyPtr topology = topology_from_json(j.at("topology"));
  ParameterTables params = parameters_from_json(*topology, j.at("parameters"));
  if (j.contains("feature_maps") &&
      !(feature_maps_from_json(j.at("feature_maps")).transition == spec.feature_maps().transition &&
        feature_maps_from_json(j.at("feature_maps")).reward == spec.feature_maps().reward)) {
    throw FormatError("ground truth: feature maps disagree with the spec");
  }
  try {
    return GroundTruth(std::move(spec), std::move(topology), std::move(params));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("ground truth: ") + e.what());
  }
}

Json stats_to_json(const SufficientStats& stats) {
  Json logs = Json::array();
  for (const PairLog& log : stats.logs()) {
    logs.push_back({{"episodes", log.episodes},
                    {"side_info", log.side_info},
                    {"reward_features", log.reward_features},
                    {"transition_features", log.transition_features},
                    {"rewards", log.rewards},
                    {"next_states", log.next_states}});
  }
  Json reward = Json::array();
  for (const auto& acc : stats.reward_matrices()) reward.push_back(design_matrix_to_json(acc));
  Json transition = Json::array();
  for (const auto& acc : stats.transition_matrices()) {
    transition.push_back(design_matrix_to_json(acc));
  }
  return {{"topology", topology_to_json(stats.topology())},
          {"feature_maps", feature_maps_to_json(stats.feature_maps())},
          {"episodes_recorded", stats.episodes_recorded()},
          {"logs", std::move(logs)},
          {"reward_matrices", std::move(reward)},
          {"transition_matrices", std::move(transition)}};
}

SufficientStats stats_from_json(const Json& j) {
  require_known_keys(j,
                     {"topology", "feature_maps", "episodes_recorded", "logs", "reward_matrices",
                      "transition_matrices"},
                     "stats");
  TopologyPtr topology = topology_from_json(j.at("topology"));
  FeatureMaps maps = feature_maps_from_json(j.at("feature_maps"));
  std::vector<PairLog> logs;
  for (const auto& e : j.at("logs")) {
    require_known_keys(e,
                       {"episodes", "side_info", "reward_features", "transition_features",
                        "rewards", "next_states"},
                       "stats log");
    PairLog log;
    log.episodes = e.at("episodes").get<std::vector<int>>();
    log.side_info = e.at("side_info").get<std::vector<double>>();
    log.reward_features = e.at("reward_features").get<std::vector<double>>();
    log.transition_features = e.at("transition_features").get<std::vector<double>>();
    log.rewards = e.at("rewards").get<std::vector<double>>();
    log.next_states = e.at("next_states").get<std::vector<int>>();
    const std::size_t n = log.episodes.size();
    if (log.rewards.size() != n || log.next_states.size() != n ||
        log.reward_features.size() != n * maps.reward.output_dim() ||
        log.transition_features.size() != n * maps.transition.output_dim()) {
      throw FormatError("stats log: inconsistent lengths");
    }
    logs.push_back(std::move(log));
  }
  std::vector<DesignMatrix> reward;
  for (const auto& e : j.at("reward_matrices")) reward.push_back(design_matrix_from_json(e));
  std::vector<DesignMatrix> transition;
  for (const auto& e : j.at("transition_matrices")) {
    transition.push_back(design_matrix_from_json(e));
  }
  try {
    return SufficientStats(std::move(topology), std::move(maps), std::move(logs),
                           std::move(reward), std::move(transition),
                           j.at("episodes_recorded").get<int>());
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
}

Json learner_checkpoint(const OfuLearner& learner) {
  const auto& topo = *learner.topology();
  return {{"link", std::string(learner.link().name())},
          {"config", learner_config_to_json(learner.config())},
          {"stats", stats_to_json(learner.stats())},
          {"estimates", parameters_to_json(topo, learner.estimates())},
          {"raw_estimates",
           {{"theta", matrix_to_json(learner.raw_estimates().theta)},
            {"lambda", matrix_to_json(learner.raw_estimates().lambda)}}},
          {"solved_visits", learner.solved_visits()}};
}

OfuLearner learner_from_checkpoint(const Json& j) {
  require_known_keys(j, {"link", "config", "stats", "estimates", "raw_estimates", "solved_visits"},
                     "learner checkpoint");
  SufficientStats stats = stats_from_json(j.at("stats"));
  ParameterTables estimates = parameters_from_json(stats.topology(), j.at("estimates"));
  ParameterTables raw = estimates;
  raw.theta = matrix_from_json(j.at("raw_estimates").at("theta"));
  raw.lambda = matrix_from_json(j.at("raw_estimates").at("lambda"));
  return OfuLearner(LinkFunction::from_name(j.at("link").get<std::string>()),
                    learner_config_from_json(j.at("config")), std::move(stats),
                    std::move(estimates), std::move(raw),
                    j.at("solved_visits").get<std::vector<int>>());
}

Json bands_to_json(const LayeredTopology& topology, const ConfidenceBands& bands) {
  Json transitions = Json::array();
  Json rewards = Json::array();
  for (int p = 0; p < topology.num_pairs(); ++p) {
    const PairRef& ref = topology.pair(p);
    auto succ = topology.successors(p);
    for (std::size_t k = 0; k < succ.size(); ++k) {
      const int t = topology.triple_begin(p) + static_cast<int>(k);
      transitions.push_back({{"layer", ref.layer},
                             {"state", ref.state},
                             {"action", ref.action},
                             {"successor", succ[k]},
                             {"center", bands.transition_center[t]},
                             {"lo", bands.transition_lo[t]},
                             {"hi", bands.transition_hi[t]}});
    }
    rewards.push_back({{"layer", ref.layer},
                       {"state", ref.state},
                       {"action", ref.action},
                       {"center", bands.reward_center[p]},
                       {"lo", bands.reward_lo[p]},
                       {"hi", bands.reward_hi[p]}});
  }
  return {{"episode", bands.episode},
          {"delta", bands.delta},
          {"rho_reward", bands.radii.reward},
          {"rho_transition", bands.radii.transition},
          {"transitions", std::move(transitions)},
          {"rewards", std::move(rewards)}};
}

Json plan_to_json(const LayeredTopology& topology, const OptimisticPlan& plan) {
  Json states = Json::array();
  for (int l = 0; l < topology.num_layers(); ++l) {
    for (int s = 0; s < topology.layer_size(l); ++s) {
      Json entry = {{"layer", l}, {"state", s}, {"value", plan.values[l][s]}};
      if (l < topology.horizon()) {
        const int a = plan.policy.action(l, s);
        const int pair = topology.pair_index(l, s, a);
        auto succ = topology.successors(pair);
        entry["action"] = a;
        entry["successors"] = std::vector<int>(succ.begin(), succ.end());
        entry["probabilities"] = vector_to_json(plan.kernel.row(pair));
      }
      states.push_back(std::move(entry));
    }
  }
  return {{"root_value", plan.root_value()},
          {"infeasible_rows", plan.diagnostics.infeasible_rows},
          {"states", std::move(states)}};
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw FormatError("failed writing " + path.string());
}

}  // namespace ctxmdp
