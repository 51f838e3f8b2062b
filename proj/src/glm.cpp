#include "ctxmdp/glm.hpp"

#include <algorithm>
#include <stdexcept>

namespace ctxmdp {

LinkFunction LinkFunction::from_name(std::string_view name) {
  if (name == "logistic") return LinkFunction(LinkKind::logistic);
  if (name == "identity") return LinkFunction(LinkKind::identity);
  throw std::invalid_argument("unknown link function '" + std::string(name) + "'");
}

double LinkFunction::slope_floor(double score_bound) const {
  if (score_bound < 0.0) throw std::invalid_argument("score bound must be non-negative");
  // The logistic derivative is even and decreasing in |z|.
  if (kind_ == LinkKind::logistic) return logistic_derivative(score_bound);
  return 1.0;
}

FeatureMap FeatureMap::identity(int input_dim, int output_dim, bool append_bias) {
  if (input_dim < 0 || output_dim < 1 || (append_bias && output_dim < 1)) {
    throw std::invalid_argument("invalid feature map dimensions");
  }
  return FeatureMap(FeatureKind::identity, input_dim, output_dim, append_bias);
}

FeatureMap FeatureMap::constant(int input_dim) {
  if (input_dim < 0) throw std::invalid_argument("invalid feature map dimensions");
  return FeatureMap(FeatureKind::constant, input_dim, 1, true);
}

Eigen::VectorXd FeatureMap::operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != input_dim_) throw std::invalid_argument("side information dimension mismatch");
  if (kind_ == FeatureKind::constant) return Eigen::VectorXd::Ones(1);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(output_dim_);
  const int copied = std::min(input_dim_, output_dim_ - (bias_ ? 1 : 0));
  out.head(copied) = x.head(copied);
  if (bias_) out[output_dim_ - 1] = 1.0;
  return out;
}

double FeatureMap::norm_bound(double x_max) const {
  if (kind_ == FeatureKind::constant) return 1.0;
  const int copied = std::min(input_dim_, output_dim_ - (bias_ ? 1 : 0));
  const double head = copied > 0 ? x_max * x_max : 0.0;
  return std::sqrt(head + (bias_ ? 1.0 : 0.0));
}

ParameterTables ParameterTables::zeros(const LayeredTopology& topology, int n, int m,
                                       double norm_bound) {
  ParameterTables t;
  t.theta = Eigen::MatrixXd::Zero(n, topology.num_triples());
  t.lambda = Eigen::MatrixXd::Zero(m, topology.num_pairs());
  t.norm_bound = norm_bound;
  return t;
}

void ParameterTables::validate(const LayeredTopology& topology) const {
  if (theta.cols() != topology.num_triples() || lambda.cols() != topology.num_pairs()) {
    throw std::invalid_argument("parameter tables do not match the topology");
  }
  const double slack = 1e-12 * std::max(1.0, norm_bound);
  if (theta.cols() > 0 && theta.colwise().norm().maxCoeff() > norm_bound + slack) {
    throw std::invalid_argument("theta column exceeds the parameter norm bound");
  }
  if (lambda.cols() > 0 && lambda.colwise().norm().maxCoeff() > norm_bound + slack) {
    throw std::invalid_argument("lambda column exceeds the parameter norm bound");
  }
}

SlopeConstants slope_constants(const FeatureMaps& maps, const LinkFunction& link,
                               double norm_bound) {
  return {link.slope_floor(norm_bound * maps.transition.norm_bound(maps.x_max)),
          link.slope_floor(norm_bound * maps.reward.norm_bound(maps.x_max))};
}

}  // namespace ctxmdp
