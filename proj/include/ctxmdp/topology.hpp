#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctxmdp {

class TopologyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Explicit successor list for one (layer, state, action). Successor indices
/// are local to layer + 1.
struct EdgeSpec {
  int layer = 0;
  int state = 0;
  int action = 0;
  std::vector<int> successors;
};

/// (layer, local state, action) coordinates of a state-action pair.
struct PairRef {
  int layer = 0;
  int state = 0;
  int action = 0;
};

/// Layered state space S_0..S_L of a loop-free episodic MDP.
///
/// States are addressed by (layer, local index). Every state-action pair in
/// layers 0..L-1 owns a sorted successor list in the next layer; pairs and
/// (pair, successor) triples get dense indices so that per-pair and
/// per-triple quantities can live in flat Eigen vectors or matrix columns.
/// Triples of one pair are contiguous, ordered like the successor list.
///
/// The topology is validated once in the constructor and is immutable.
class LayeredTopology {
 public:
  /// Full bipartite connection between consecutive layers unless `edges`
  /// overrides individual (layer, state, action) entries.
  LayeredTopology(std::vector<int> layer_sizes, int num_actions,
                  const std::vector<EdgeSpec>& edges = {});

  /// Number of transitions per episode.
  int horizon() const { return static_cast<int>(layer_sizes_.size()) - 1; }
  int num_layers() const { return static_cast<int>(layer_sizes_.size()); }
  int layer_size(int layer) const { return layer_sizes_.at(layer); }
  const std::vector<int>& layer_sizes() const { return layer_sizes_; }
  int num_actions() const { return num_actions_; }
  int num_states() const { return state_offset_.back(); }

  /// Global state id, layer by layer starting with the start state at 0.
  int state_id(int layer, int state) const { return state_offset_[layer] + state; }
  int layer_of(int state_id) const;

  int num_pairs() const { return static_cast<int>(pairs_.size()); }
  int pair_index(int layer, int state, int action) const {
    return (state_offset_[layer] + state) * num_actions_ + action;
  }
  const PairRef& pair(int index) const { return pairs_[index]; }

  std::span<const int> successors(int layer, int state, int action) const {
    return successors(pair_index(layer, state, action));
  }
  std::span<const int> successors(int pair) const;

  int num_triples() const { return triple_offset_.back(); }
  int triple_begin(int pair) const { return triple_offset_[pair]; }
  int triple_end(int pair) const { return triple_offset_[pair + 1]; }

  /// Global triple index of (pair, next_state), or nullopt when the edge
  /// does not exist.
  std::optional<int> triple_index(int pair, int next_state) const;

  /// C = sum_l |S_l||S_{l+1}|, the largest possible number of transitions.
  long long max_transitions() const;

  /// Number of deterministic policies, saturating at `cap` + 1.
  long long policy_count(long long cap) const;

  bool operator==(const LayeredTopology& other) const;

 private:
  std::vector<int> layer_sizes_;
  int num_actions_ = 0;
  std::vector<int> state_offset_;
  std::vector<PairRef> pairs_;
  std::vector<int> successor_data_;
  // Triple offsets double as offsets into successor_data_.
  std::vector<int> triple_offset_;
};

}  // namespace ctxmdp
