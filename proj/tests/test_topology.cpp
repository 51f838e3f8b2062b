#include <doctest.h>

#include "ctxmdp/topology.hpp"

using namespace ctxmdp;

TEST_CASE("full bipartite topology indexes pairs and triples") {
  LayeredTopology t({1, 2, 3, 2, 1}, 2);
  CHECK(t.horizon() == 4);
  CHECK(t.num_layers() == 5);
  CHECK(t.num_states() == 9);
  CHECK(t.num_pairs() == (1 + 2 + 3 + 2) * 2);
  CHECK(t.max_transitions() == 1 * 2 + 2 * 3 + 3 * 2 + 2 * 1);
  CHECK(t.num_triples() == t.max_transitions() * 2);
  CHECK(t.state_id(2, 1) == 4);
  CHECK(t.layer_of(4) == 2);
  CHECK(t.layer_of(0) == 0);
  CHECK(t.layer_of(8) == 4);

  for (int p = 0; p < t.num_pairs(); ++p) {
    const PairRef& ref = t.pair(p);
    CHECK(t.pair_index(ref.layer, ref.state, ref.action) == p);
    auto succ = t.successors(p);
    CHECK(static_cast<int>(succ.size()) == t.layer_size(ref.layer + 1));
    for (std::size_t k = 0; k < succ.size(); ++k) {
      CHECK(t.triple_index(p, succ[k]) == t.triple_begin(p) + static_cast<int>(k));
    }
  }
}

TEST_CASE("edge overrides restrict successors and are sorted") {
  LayeredTopology t({1, 3, 1}, 2, {{0, 0, 1, {2, 0}}});
  const int pair = t.pair_index(0, 0, 1);
  auto succ = t.successors(pair);
  REQUIRE(succ.size() == 2);
  CHECK(succ[0] == 0);
  CHECK(succ[1] == 2);
  CHECK_FALSE(t.triple_index(pair, 1).has_value());
  CHECK(t.successors(0, 0, 0).size() == 3);
}

TEST_CASE("policy count saturates at the cap") {
  LayeredTopology t({1, 2, 3, 2, 1}, 2);
  CHECK(t.policy_count(1 << 20) == 256);
  CHECK(t.policy_count(100) == 101);
  CHECK(LayeredTopology({1, 1}, 1).policy_count(10) == 1);
}

TEST_CASE("invalid topologies are rejected") {
  CHECK_THROWS_AS(LayeredTopology({1}, 2), TopologyError);
  CHECK_THROWS_AS(LayeredTopology({2, 1}, 2), TopologyError);
  CHECK_THROWS_AS(LayeredTopology({1, 0, 1}, 2), TopologyError);
  CHECK_THROWS_AS(LayeredTopology({1, 2}, 0), TopologyError);
  CHECK_THROWS_AS(LayeredTopology({1, 2}, 1, {{0, 0, 0, {}}}), TopologyError);
  CHECK_THROWS_AS(LayeredTopology({1, 2}, 1, {{0, 0, 0, {2}}}), TopologyError);
  CHECK_THROWS_AS(LayeredTopology({1, 2}, 1, {{0, 0, 0, {1, 1}}}), TopologyError);
  CHECK_THROWS_AS(LayeredTopology({1, 2}, 1, {{1, 0, 0, {0}}}), TopologyError);
  CHECK_THROWS_AS(LayeredTopology({1, 2}, 1, {{0, 0, 0, {0}}, {0, 0, 0, {1}}}), TopologyError);
}

TEST_CASE("equality compares structure") {
  CHECK(LayeredTopology({1, 2}, 2) == LayeredTopology({1, 2}, 2));
  CHECK_FALSE(LayeredTopology({1, 2}, 2) == LayeredTopology({1, 2}, 1));
  CHECK_FALSE(LayeredTopology({1, 2}, 1) == LayeredTopology({1, 2}, 1, {{0, 0, 0, {1}}}));
}
