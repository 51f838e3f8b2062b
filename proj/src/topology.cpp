#include "ctxmdp/topology.hpp"

#include <algorithm>
#include <map>
#include <tuple>

namespace ctxmdp {

LayeredTopology::LayeredTopology(std::vector<int> layer_sizes, int num_actions,
                                 const std::vector<EdgeSpec>& edges)
    : layer_sizes_(std::move(layer_sizes)), num_actions_(num_actions) {
  if (layer_sizes_.size() < 2) {
    throw TopologyError("topology needs at least two layers (horizon >= 1)");
  }
  if (layer_sizes_.front() != 1) {
    throw TopologyError("layer 0 must contain exactly the start state");
  }
  for (int size : layer_sizes_) {
    if (size < 1) throw TopologyError("every layer must be non-empty");
  }
  if (num_actions_ < 1) throw TopologyError("action count must be positive");

  state_offset_.assign(layer_sizes_.size() + 1, 0);
  for (std::size_t l = 0; l < layer_sizes_.size(); ++l) {
    state_offset_[l + 1] = state_offset_[l] + layer_sizes_[l];
  }

  std::map<std::tuple<int, int, int>, std::vector<int>> overrides;
  for (const auto& e : edges) {
    if (e.layer < 0 || e.layer >= horizon()) {
      throw TopologyError("edge list entry references a terminal or unknown layer");
    }
    if (e.state < 0 || e.state >= layer_sizes_[e.layer]) {
      throw TopologyError("edge list entry references an unknown state");
    }
    if (e.action < 0 || e.action >= num_actions_) {
      throw TopologyError("edge list entry references an unknown action");
    }
    std::vector<int> succ = e.successors;
    std::sort(succ.begin(), succ.end());
    if (succ.empty()) throw TopologyError("edge list entry has no successors");
    if (std::adjacent_find(succ.begin(), succ.end()) != succ.end()) {
      throw TopologyError("edge list entry repeats a successor");
    }
    if (succ.front() < 0 || succ.back() >= layer_sizes_[e.layer + 1]) {
      throw TopologyError("successor outside the next layer");
    }
    if (!overrides.emplace(std::make_tuple(e.layer, e.state, e.action), std::move(succ)).second) {
      throw TopologyError("duplicate edge list entry");
    }
  }

  triple_offset_.push_back(0);
  for (int l = 0; l < horizon(); ++l) {
    for (int s = 0; s < layer_sizes_[l]; ++s) {
      for (int a = 0; a < num_actions_; ++a) {
        pairs_.push_back({l, s, a});
        auto it = overrides.find({l, s, a});
        if (it != overrides.end()) {
          successor_data_.insert(successor_data_.end(), it->second.begin(), it->second.end());
        } else {
          for (int n = 0; n < layer_sizes_[l + 1]; ++n) successor_data_.push_back(n);
        }
        triple_offset_.push_back(static_cast<int>(successor_data_.size()));
      }
    }
  }
}

int LayeredTopology::layer_of(int state_id) const {
  auto it = std::upper_bound(state_offset_.begin(), state_offset_.end(), state_id);
  return static_cast<int>(it - state_offset_.begin()) - 1;
}

std::span<const int> LayeredTopology::successors(int pair) const {
  return std::span<const int>(successor_data_).subspan(
      triple_offset_[pair], triple_offset_[pair + 1] - triple_offset_[pair]);
}

std::optional<int> LayeredTopology::triple_index(int pair, int next_state) const {
  auto succ = successors(pair);
  auto it = std::lower_bound(succ.begin(), succ.end(), next_state);
  if (it == succ.end() || *it != next_state) return std::nullopt;
  return triple_offset_[pair] + static_cast<int>(it - succ.begin());
}

long long LayeredTopology::max_transitions() const {
  long long c = 0;
  for (int l = 0; l < horizon(); ++l) {
    c += static_cast<long long>(layer_sizes_[l]) * layer_sizes_[l + 1];
  }
  return c;
}

long long LayeredTopology::policy_count(long long cap) const {
  long long count = 1;
  for (int l = 0; l < horizon(); ++l) {
    for (int s = 0; s < layer_sizes_[l]; ++s) {
      count *= num_actions_;
      if (count > cap) return cap + 1;
    }
  }
  return count;
}

bool LayeredTopology::operator==(const LayeredTopology& other) const {
  return layer_sizes_ == other.layer_sizes_ && num_actions_ == other.num_actions_ &&
         successor_data_ == other.successor_data_ && triple_offset_ == other.triple_offset_;
}

}  // namespace ctxmdp
