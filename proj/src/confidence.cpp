#include "ctxmdp/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ctxmdp {

double kappa(double x_norm_bound) {
  if (x_norm_bound < 0.0) throw std::invalid_argument("norm bound must be non-negative");
  return std::sqrt(3.0 + 2.0 * std::log(1.0 + 2.0 * x_norm_bound * x_norm_bound));
}

double min_valid_episode(int feature_dim_a, int feature_dim_b) {
  return 1.0 + std::max({feature_dim_a, feature_dim_b, 2});
}

double beta_width(double t, double delta, int feature_dim, double lipschitz, double kappa_value,
                  double slope_floor) {
  if (feature_dim < 1) throw std::invalid_argument("feature dimension must be positive");
  if (!(delta > 0.0 && delta < 1.0 && delta <= feature_dim / std::numbers::e)) {
    throw std::invalid_argument("confidence parameter outside (0, min(1, d/e)]");
  }
  if (t < min_valid_episode(feature_dim)) {
    throw std::invalid_argument("episode index below 1 + max(d, 2)");
  }
  if (!(slope_floor > 0.0)) throw std::invalid_argument("slope floor must be positive");
  const double d = feature_dim;
  return 2.0 * lipschitz * kappa_value / slope_floor *
         std::sqrt(2.0 * d * std::log(t) * std::log(d / delta));
}

ConfidenceRadii confidence_radii(int t, const ConfidenceConfig& config, const FeatureMaps& maps,
                                 const LinkFunction& link, double norm_bound) {
  const int n = maps.transition.output_dim();
  const int m = maps.reward.output_dim();
  const double episode = std::max<double>(t, min_valid_episode(m, n));
  const double k = kappa(maps.x_max);
  const SlopeConstants slopes = slope_constants(maps, link, norm_bound);
  return {config.rho_scale *
              beta_width(episode, config.delta, m, link.lipschitz(), k, slopes.reward),
          config.rho_scale *
              beta_width(episode, config.delta, n, link.lipschitz(), k, slopes.transition)};
}

ConfidenceBands build_bands(const Eigen::VectorXd& x, const ParameterTables& estimates,
                            const SufficientStats& stats, const LinkFunction& link,
                            const ConfidenceRadii& radii, int episode, double delta) {
  const auto& topo = stats.topology();
  const auto& maps = stats.feature_maps();
  const Eigen::VectorXd psi = maps.reward(x);
  const Eigen::VectorXd phi = maps.transition(x);
  if (estimates.lambda.rows() != psi.size() || estimates.theta.rows() != phi.size()) {
    throw std::invalid_argument("estimates do not match the feature dimensions");
  }

  ConfidenceBands bands;
  bands.episode = episode;
  bands.delta = delta;
  bands.radii = radii;

  bands.reward_center = predict_all(estimates.lambda, psi, link);
  Eigen::VectorXd reward_width(topo.num_pairs());
  for (int p = 0; p < topo.num_pairs(); ++p) {
    reward_width[p] = radii.reward * mahalanobis_norm(psi, stats.reward_matrix(p));
  }
  bands.reward_lo = (bands.reward_center - reward_width).cwiseMax(0.0);
  bands.reward_hi = (bands.reward_center + reward_width).cwiseMin(1.0);

  bands.transition_center = predict_all(estimates.theta, phi, link);
  Eigen::VectorXd transition_width(topo.num_triples());
  for (int k = 0; k < topo.num_triples(); ++k) {
    transition_width[k] = radii.transition * mahalanobis_norm(phi, stats.transition_matrix(k));
  }
  for (int p = 0; p < topo.num_pairs(); ++p) {
    if (topo.triple_end(p) - topo.triple_begin(p) == 1) {
      bands.transition_center[topo.triple_begin(p)] = 1.0;
      transition_width[topo.triple_begin(p)] = 0.0;
    }
  }
  bands.transition_lo = (bands.transition_center - transition_width).cwiseMax(0.0);
  bands.transition_hi = (bands.transition_center + transition_width).cwiseMin(1.0);
  return bands;
}

ConfidenceBands build_bands(const Eigen::VectorXd& x, const ParameterTables& estimates,
                            const SufficientStats& stats, const LinkFunction& link,
                            const ConfidenceConfig& config, int episode) {
  const ConfidenceRadii radii = confidence_radii(episode, config, stats.feature_maps(), link,
                                                 estimates.norm_bound);
  return build_bands(x, estimates, stats, link, radii, episode, config.delta);
}

}  // namespace ctxmdp
