#pragma once

#include <json.hpp>

#include <filesystem>
#include <initializer_list>
#include <string>

#include "ctxmdp/confidence.hpp"
#include "ctxmdp/environment.hpp"
#include "ctxmdp/estimation.hpp"
#include "ctxmdp/learner.hpp"
#include "ctxmdp/planner.hpp"

namespace ctxmdp {

using Json = nlohmann::json;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws FormatError if `object` has a key outside `allowed`.
void require_known_keys(const Json& object, std::initializer_list<const char*> allowed,
                        const std::string& context);

// Matrices are {"rows", "cols", "data"} with column-major data.
Json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j);

/// {"layer_sizes", "num_actions", "edges"?}. Only rows that differ from the
/// full bipartite default are written as edges.
Json topology_to_json(const LayeredTopology& topology);
TopologyPtr topology_from_json(const Json& j);

Json feature_maps_to_json(const FeatureMaps& maps);
FeatureMaps feature_maps_from_json(const Json& j);

/// Flat records keyed by (layer, state, action[, successor]).
Json parameters_to_json(const LayeredTopology& topology, const ParameterTables& params);
ParameterTables parameters_from_json(const LayeredTopology& topology, const Json& j);

Json environment_spec_to_json(const EnvironmentSpec& spec);
EnvironmentSpec environment_spec_from_json(const Json& j);

/// Full ground-truth fixture: spec, topology, parameters and the seed that
/// generated it (when known).
Json ground_truth_to_json(const GroundTruth& truth, std::optional<std::uint64_t> seed = {});
GroundTruth ground_truth_from_json(const Json& j);

/// Matrices, inverses, logs and counters of the sufficient statistics.
Json stats_to_json(const SufficientStats& stats);
SufficientStats stats_from_json(const Json& j);

/// Everything an OfuLearner needs to resume.
Json learner_checkpoint(const OfuLearner& learner);
OfuLearner learner_from_checkpoint(const Json& j);

/// Per-triple (s, a, s', center, lo, hi) and per-pair reward intervals.
Json bands_to_json(const LayeredTopology& topology, const ConfidenceBands& bands);
/// Chosen action per state, w values and P* rows.
Json plan_to_json(const LayeredTopology& topology, const OptimisticPlan& plan);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

}  // namespace ctxmdp
