#pragma once

#include <Eigen/Dense>

#include "ctxmdp/mdp.hpp"

namespace ctxmdp {

/// The only channel through which a learner touches the world: it hands
/// over a policy and gets back a sampled trajectory with realized rewards.
class EpisodeSource {
 public:
  virtual ~EpisodeSource() = default;

  virtual const TopologyPtr& topology() const = 0;
  virtual Trajectory rollout(const Eigen::VectorXd& side_info, const Policy& policy, int episode,
                             Rng& rng) const = 0;
};

}  // namespace ctxmdp
