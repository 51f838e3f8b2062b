#pragma once

#include <Eigen/Dense>

#include "ctxmdp/estimation.hpp"
#include "ctxmdp/glm.hpp"

namespace ctxmdp {

/// sqrt(3 + 2 log(1 + 2 X^2)) for a side-information norm bound X.
double kappa(double x_norm_bound);

/// Smallest episode index for which the width formula is valid:
/// 1 + max(feature dimensions..., 2).
double min_valid_episode(int feature_dim_a, int feature_dim_b = 1);

/// (2 k kappa / c) sqrt(2 d log(t) log(d / delta)).
///
/// Requires t >= 1 + max(d, 2) and 0 < delta < 1 with delta <= d / e;
/// throws std::invalid_argument otherwise. Callers clamp t upward first.
double beta_width(double t, double delta, int feature_dim, double lipschitz, double kappa_value,
                  double slope_floor);

struct ConfidenceConfig {
  double delta = 0.1;
  /// Multiplies both theoretical radii; 1 keeps the theoretical widths.
  double rho_scale = 1.0;
};

/// rho_t for the reward (psi, m) and transition (phi, n) families.
struct ConfidenceRadii {
  double reward = 0.0;
  double transition = 0.0;
};

/// Radii at episode t. t is clamped up to 1 + max(m, n, 2) and the slope
/// floor of each family comes from its own reachable score range.
ConfidenceRadii confidence_radii(int t, const ConfidenceConfig& config, const FeatureMaps& maps,
                                 const LinkFunction& link, double norm_bound);

/// Reward intervals per pair and transition intervals per triple for one
/// side-information vector. Bounds are clipped to [0,1]; centers are the
/// GLM predictions of the current estimates.
struct ConfidenceBands {
  int episode = 0;
  double delta = 0.0;
  ConfidenceRadii radii;
  Eigen::VectorXd reward_center, reward_lo, reward_hi;
  Eigen::VectorXd transition_center, transition_lo, transition_hi;

  bool contains_reward(int pair, double value, double slack = 0.0) const {
    return value >= reward_lo[pair] - slack && value <= reward_hi[pair] + slack;
  }
  bool contains_transition(int triple, double value, double slack = 0.0) const {
    return value >= transition_lo[triple] - slack && value <= transition_hi[triple] + slack;
  }
};

/// Centers sigma(feature^T estimate), half-widths rho * ||feature||_{W^-1}.
/// Rows with a single successor are deterministic and get the band [1,1].
ConfidenceBands build_bands(const Eigen::VectorXd& x, const ParameterTables& estimates,
                            const SufficientStats& stats, const LinkFunction& link,
                            const ConfidenceRadii& radii, int episode, double delta);

/// Same, with radii computed from `config` at episode t.
ConfidenceBands build_bands(const Eigen::VectorXd& x, const ParameterTables& estimates,
                            const SufficientStats& stats, const LinkFunction& link,
                            const ConfidenceConfig& config, int episode);

}  // namespace ctxmdp
