#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace ctxmdp {

/// W = I + sum_u w_u w_u^T together with its inverse.
///
/// The inverse follows each rank-one update through the Sherman-Morrison
/// identity and is recomputed from W by a Cholesky solve every
/// `refresh_period` updates, which bounds the accumulated drift.
template <typename Scalar>
class DesignMatrixAccumulator {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  static constexpr long kDefaultRefreshPeriod = 512;

  explicit DesignMatrixAccumulator(int dim, long refresh_period = kDefaultRefreshPeriod)
      : matrix_(Matrix::Identity(dim, dim)),
        inverse_(Matrix::Identity(dim, dim)),
        refresh_period_(refresh_period) {
    if (dim < 1) throw std::invalid_argument("design matrix dimension must be positive");
    if (refresh_period < 1) throw std::invalid_argument("refresh period must be positive");
  }

  /// Rebuilds an accumulator from a checkpoint.
  static DesignMatrixAccumulator restore(Matrix matrix, Matrix inverse, long count,
                                         long refresh_period = kDefaultRefreshPeriod) {
    DesignMatrixAccumulator acc(static_cast<int>(matrix.rows()), refresh_period);
    if (matrix.rows() != matrix.cols() || inverse.rows() != matrix.rows() ||
        inverse.cols() != matrix.cols()) {
      throw std::invalid_argument("design matrix checkpoint has inconsistent shapes");
    }
    acc.matrix_ = std::move(matrix);
    acc.inverse_ = std::move(inverse);
    acc.count_ = count;
    return acc;
  }

  int dim() const { return static_cast<int>(matrix_.rows()); }
  long count() const { return count_; }
  long refresh_period() const { return refresh_period_; }
  const Matrix& matrix() const { return matrix_; }
  const Matrix& inverse() const { return inverse_; }

  template <typename Derived>
  void add(const Eigen::MatrixBase<Derived>& w) {
    if (w.size() != dim()) throw std::invalid_argument("design matrix update dimension mismatch");
    const Vector v = w.template cast<Scalar>();
    matrix_.noalias() += v * v.transpose();
    ++count_;
    if (count_ % refresh_period_ == 0) {
      refresh();
      return;
    }
    const Vector u = inverse_ * v;
    inverse_.noalias() -= (u * u.transpose()) / (Scalar(1) + v.dot(u));
  }

  /// Recomputes the inverse from the maintained matrix.
  void refresh() {
    inverse_ = matrix_.llt().solve(Matrix::Identity(dim(), dim()));
    inverse_ = (inverse_ + inverse_.transpose()) / Scalar(2);
  }

  /// v^T W^{-1} v.
  template <typename Derived>
  Scalar squared_norm(const Eigen::MatrixBase<Derived>& v) const {
    if (v.size() != dim()) throw std::invalid_argument("mahalanobis norm dimension mismatch");
    const Vector x = v.template cast<Scalar>();
    const Scalar q = x.dot(inverse_ * x);
    return q > Scalar(0) ? q : Scalar(0);
  }

 private:
  Matrix matrix_;
  Matrix inverse_;
  long count_ = 0;
  long refresh_period_;
};

using DesignMatrix = DesignMatrixAccumulator<double>;

/// ||v||_{W^{-1}} = sqrt(v^T W^{-1} v).
template <typename Derived, typename Scalar>
Scalar mahalanobis_norm(const Eigen::MatrixBase<Derived>& v,
                        const DesignMatrixAccumulator<Scalar>& acc) {
  using std::sqrt;
  return sqrt(acc.squared_norm(v));
}

}  // namespace ctxmdp
