#include <doctest.h>

#include "ctxmdp/experiment.hpp"
#include "ctxmdp/serialization.hpp"
#include "helpers.hpp"

using namespace ctxmdp;

TEST_CASE("matrix round trip") {
  Eigen::MatrixXd m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  const Json j = matrix_to_json(m);
  CHECK(j.at("data") == Json{1, 4, 2, 5, 3, 6});
  CHECK(matrix_from_json(j) == m);
  CHECK_THROWS_AS(matrix_from_json(Json{{"rows", 2}, {"cols", 2}, {"data", {1}}}), FormatError);
  CHECK_THROWS_AS(matrix_from_json(Json{{"rows", 1}, {"cols", 1}, {"data", {1}}, {"x", 0}}),
                  FormatError);
}

TEST_CASE("topology round trip writes only restricted rows") {
  const LayeredTopology t({1, 3, 2}, 2, {{0, 0, 1, {0, 2}}, {1, 2, 0, {1}}});
  const Json j = topology_to_json(t);
  CHECK(j.at("edges").size() == 2);
  CHECK(*topology_from_json(j) == t);
  CHECK_FALSE(topology_to_json(LayeredTopology({1, 2}, 2)).contains("edges"));
  CHECK_THROWS_AS(topology_from_json(Json{{"layer_sizes", {1, 2}}, {"num_actions", 2}, {"extra", 1}}),
                  FormatError);
  CHECK_THROWS_AS(topology_from_json(Json{{"layer_sizes", {1, 2}}}), FormatError);
}

TEST_CASE("ground truth round trip reproduces the models") {
  Rng rng(1);
  const GroundTruth truth = generate_environment(default_fixture_spec(), rng);
  const Json j = ground_truth_to_json(truth, 77);
  CHECK(j.at("seed") == 77);
  const GroundTruth back = ground_truth_from_json(Json::parse(j.dump()));
  CHECK(*back.topology() == *truth.topology());
  CHECK(back.parameters().theta == truth.parameters().theta);
  CHECK(back.parameters().lambda == truth.parameters().lambda);
  const Eigen::VectorXd x = truth.sample_side_info(rng);
  CHECK(back.true_models(x).kernel.triple_probs() == truth.true_models(x).kernel.triple_probs());
}

TEST_CASE("ground truth parsing rejects broken files") {
  Rng rng(2);
  const GroundTruth truth = generate_environment(default_fixture_spec(), rng);
  Json j = ground_truth_to_json(truth);
  Json missing = j;
  missing["parameters"]["lambda"].erase(0);
  CHECK_THROWS_AS(ground_truth_from_json(missing), FormatError);
  Json too_big = j;
  too_big["parameters"]["lambda"][0]["values"] = {100.0, 0.0};
  CHECK_THROWS_AS(ground_truth_from_json(too_big), FormatError);
  Json typo = j;
  typo["spec"]["num_action"] = 2;
  CHECK_THROWS_AS(ground_truth_from_json(typo), FormatError);
}

TEST_CASE("environment spec round trip") {
  EnvironmentSpec spec = context_dependent_fixture_spec();
  spec.link = LinkKind::identity;
  spec.reward_noise = RewardNoise::uniform;
  const EnvironmentSpec back = environment_spec_from_json(environment_spec_to_json(spec));
  CHECK(environment_spec_to_json(back) == environment_spec_to_json(spec));
}

TEST_CASE("stats round trip keeps matrices and logs") {
  Rng rng(3);
  const GroundTruth truth = generate_environment(default_fixture_spec(), rng);
  SufficientStats stats(truth.topology(), truth.feature_maps());
  const Policy pi = Policy::uniform_action(truth.topology(), 1);
  for (int t = 1; t <= 20; ++t) stats.record_episode(truth.rollout(truth.sample_side_info(rng), pi, t, rng));
  const SufficientStats back = stats_from_json(Json::parse(stats_to_json(stats).dump()));
  CHECK(back.episodes_recorded() == 20);
  for (int p = 0; p < truth.topology()->num_pairs(); ++p) {
    CHECK(back.reward_matrix(p).inverse() == stats.reward_matrix(p).inverse());
    CHECK(back.log(p).rewards == stats.log(p).rewards);
  }
}

TEST_CASE("learner checkpoint resumes bit-exactly") {
  ExperimentConfig config;
  config.rho_scale = 0.1;
  const GroundTruth truth = replication_environment(config, 5);
  LearnerConfig lc = config.learner_config();

  Rng rng(4);
  OfuLearner straight(truth.topology(), truth.feature_maps(), truth.link(), lc);
  for (int t = 1; t <= 40; ++t) straight.learn_episode(truth.sample_side_info(rng), truth, t, rng);
  const std::string saved = learner_checkpoint(straight).dump();
  Rng rng_resume = rng;

  std::vector<double> a, b;
  for (int t = 41; t <= 80; ++t) {
    a.push_back(straight.learn_episode(truth.sample_side_info(rng), truth, t, rng).decision.optimistic_value);
  }
  OfuLearner resumed = learner_from_checkpoint(Json::parse(saved));
  CHECK(resumed.episode() == 41);
  for (int t = 41; t <= 80; ++t) {
    b.push_back(resumed.learn_episode(truth.sample_side_info(rng_resume), truth, t, rng_resume)
                    .decision.optimistic_value);
  }
  CHECK(a == b);
  CHECK(resumed.estimates().theta == straight.estimates().theta);
  CHECK(resumed.stats().reward_matrix(0).inverse() == straight.stats().reward_matrix(0).inverse());
}

TEST_CASE("band and plan dumps list every triple and state") {
  Rng rng(6);
  auto topo = test::make_topology({1, 2, 1}, 2);
  const auto k = test::random_kernel(topo, rng);
  const auto r = test::random_reward(topo, rng);
  const ConfidenceBands bands = test::random_bands_around(k, r, 0.2, rng);
  const Json jb = bands_to_json(*topo, bands);
  CHECK(jb.at("transitions").size() == static_cast<std::size_t>(topo->num_triples()));
  CHECK(jb.at("rewards").size() == static_cast<std::size_t>(topo->num_pairs()));
  const Json& first = jb.at("transitions")[0];
  for (const char* key : {"layer", "state", "action", "successor", "center", "lo", "hi"}) {
    CHECK(first.contains(key));
  }
  const Json jp = plan_to_json(*topo, optimistic_plan(topo, bands));
  CHECK(jp.at("states").size() == 4);
  CHECK(jp.at("states")[0].contains("probabilities"));
  CHECK_FALSE(jp.at("states")[3].contains("action"));
}

TEST_CASE("file helpers") {
  const auto path = std::filesystem::temp_directory_path() / "ctxmdp_json_test" / "x.json";
  write_json_file(path, Json{{"a", 1}});
  CHECK(read_json_file(path) == Json{{"a", 1}});
  std::filesystem::remove_all(path.parent_path());
  CHECK_THROWS_AS(read_json_file(path), FormatError);
}
