#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <string_view>

#include "ctxmdp/topology.hpp"

namespace ctxmdp {

enum class LinkKind { logistic, identity };

/// Numerically stable logistic function.
template <typename Scalar>
Scalar logistic(Scalar z) {
  using std::exp;
  if (z >= Scalar(0)) return Scalar(1) / (Scalar(1) + exp(-z));
  const Scalar e = exp(z);
  return e / (Scalar(1) + e);
}

template <typename Scalar>
Scalar logistic_derivative(Scalar z) {
  const Scalar p = logistic(z);
  return p * (Scalar(1) - p);
}

/// Link sigma: R -> [0,1] with derivative and Lipschitz constant.
///
/// `operator()` is the prediction map. The identity link clamps to [0,1]
/// there, while `working_mean` leaves it unclamped so the quasi-likelihood
/// score equation stays linear (plain least squares).
class LinkFunction {
 public:
  explicit LinkFunction(LinkKind kind = LinkKind::logistic) : kind_(kind) {}
  static LinkFunction from_name(std::string_view name);

  LinkKind kind() const { return kind_; }
  std::string_view name() const { return kind_ == LinkKind::logistic ? "logistic" : "identity"; }

  template <typename Scalar>
  Scalar operator()(Scalar z) const {
    if (kind_ == LinkKind::logistic) return logistic(z);
    return z < Scalar(0) ? Scalar(0) : (z > Scalar(1) ? Scalar(1) : z);
  }

  template <typename Scalar>
  Scalar derivative(Scalar z) const {
    if (kind_ == LinkKind::logistic) return logistic_derivative(z);
    return (z >= Scalar(0) && z <= Scalar(1)) ? Scalar(1) : Scalar(0);
  }

  template <typename Scalar>
  Scalar working_mean(Scalar z) const {
    return kind_ == LinkKind::logistic ? logistic(z) : z;
  }

  template <typename Scalar>
  Scalar working_derivative(Scalar z) const {
    return kind_ == LinkKind::logistic ? logistic_derivative(z) : Scalar(1);
  }

  /// b(z) with b' = working_mean; the quasi-log-likelihood of a response y
  /// at score z is y*z - b(z).
  template <typename Scalar>
  Scalar cumulant(Scalar z) const {
    using std::exp;
    using std::log1p;
    if (kind_ == LinkKind::identity) return z * z / Scalar(2);
    return z > Scalar(0) ? z + log1p(exp(-z)) : log1p(exp(z));
  }

  /// k_sigma.
  double lipschitz() const { return kind_ == LinkKind::logistic ? 0.25 : 1.0; }

  /// inf of the derivative over scores in [-bound, bound].
  double slope_floor(double score_bound) const;

  bool operator==(const LinkFunction&) const = default;

 private:
  LinkKind kind_;
};

enum class FeatureKind { identity, constant };

/// phi: R^d -> R^n (or psi: R^d -> R^m).
///
/// `identity` copies the leading coordinates of x (zero padded or truncated)
/// and optionally appends a constant 1 as the last coordinate. `constant`
/// ignores x and returns the 1-vector (1).
class FeatureMap {
 public:
  static FeatureMap identity(int input_dim, int output_dim, bool append_bias);
  static FeatureMap constant(int input_dim);

  FeatureKind kind() const { return kind_; }
  int input_dim() const { return input_dim_; }
  int output_dim() const { return output_dim_; }
  bool has_bias() const { return bias_; }

  Eigen::VectorXd operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// sup of ||phi(x)|| over ||x|| <= x_max.
  double norm_bound(double x_max) const;

  bool operator==(const FeatureMap&) const = default;

 private:
  FeatureMap(FeatureKind kind, int input_dim, int output_dim, bool bias)
      : kind_(kind), input_dim_(input_dim), output_dim_(output_dim), bias_(bias) {}

  FeatureKind kind_;
  int input_dim_;
  int output_dim_;
  bool bias_;
};

struct FeatureMaps {
  FeatureMap transition;  // phi, dimension n
  FeatureMap reward;      // psi, dimension m
  double x_max = 1.0;     // ||x|| <= x_max on the side-information domain

  int side_info_dim() const { return transition.input_dim(); }
};

/// theta(s',s,a) as columns of an n x triples matrix and lambda(s,a) as
/// columns of an m x pairs matrix. Every column has norm <= norm_bound.
struct ParameterTables {
  Eigen::MatrixXd theta;
  Eigen::MatrixXd lambda;
  double norm_bound = 10.0;

  static ParameterTables zeros(const LayeredTopology& topology, int n, int m, double norm_bound);

  /// Throws std::invalid_argument on a norm or shape violation.
  void validate(const LayeredTopology& topology) const;
};

/// sigma(phi(x)^T theta).
template <typename DerivedX, typename DerivedT>
double predict_transition_score(const Eigen::MatrixBase<DerivedX>& x,
                                const Eigen::MatrixBase<DerivedT>& theta,
                                const FeatureMaps& maps, const LinkFunction& link) {
  const Eigen::VectorXd phi = maps.transition(x);
  if (phi.size() != theta.size()) throw std::invalid_argument("theta dimension mismatch");
  return link(phi.dot(theta));
}

/// sigma(psi(x)^T lambda).
template <typename DerivedX, typename DerivedL>
double predict_reward_mean(const Eigen::MatrixBase<DerivedX>& x,
                           const Eigen::MatrixBase<DerivedL>& lambda, const FeatureMaps& maps,
                           const LinkFunction& link) {
  const Eigen::VectorXd psi = maps.reward(x);
  if (psi.size() != lambda.size()) throw std::invalid_argument("lambda dimension mismatch");
  return link(psi.dot(lambda));
}

/// sigma applied to every column score: returns link(params^T features).
inline Eigen::VectorXd predict_all(const Eigen::MatrixXd& params, const Eigen::VectorXd& features,
                                   const LinkFunction& link) {
  Eigen::VectorXd scores = params.transpose() * features;
  return scores.unaryExpr([&link](double z) { return link(z); });
}

/// Slope constants of the two model families, computed from the largest
/// reachable score |feature^T param| <= norm_bound * sup ||feature||.
struct SlopeConstants {
  double transition = 1.0;
  double reward = 1.0;
};

SlopeConstants slope_constants(const FeatureMaps& maps, const LinkFunction& link,
                               double norm_bound);

}  // namespace ctxmdp
