// Copyright 2026 The em2g Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EM2G_CORE_GEOMETRY_HPP_
#define EM2G_CORE_GEOMETRY_HPP_

#include <Eigen/Dense>

namespace em2g
{

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Known covariance of the mixture components together with its whitening
/// factor W (W^T W = Sigma^-1).
///
/// The factor is W = L^-1 where Sigma = L L^T is the Cholesky factorization,
/// so whiten(x) = L^-1 x is a triangular solve and unwhiten(y) = L y.
/// Immutable after construction.
class CovarianceModel
{
public:
  /// Validates symmetry (1e-12 relative) and positive definiteness. Eigenvalues
  /// below `eigen_floor * largest_eigenvalue` are rejected.
  explicit CovarianceModel(const Matrix & sigma, double eigen_floor = 1e-12);

  static CovarianceModel identity(Eigen::Index d);
  static CovarianceModel diagonal(const Vector & variances);

  Eigen::Index dimension() const noexcept { return sigma_.rows(); }
  const Matrix & sigma() const noexcept { return sigma_; }
  const Matrix & precision() const noexcept { return precision_; }
  /// Lower Cholesky factor L with Sigma = L L^T.
  const Matrix & cholesky_factor() const noexcept { return chol_; }
  /// W = L^-1.
  const Matrix & whitening_factor() const noexcept { return whitening_; }

  Vector whiten(const Vector & x) const;
  Vector unwhiten(const Vector & y) const;
  /// Whitens every column.
  Matrix whiten_columns(const Matrix & x) const;

  double inner(const Vector & x, const Vector & y) const;
  double norm(const Vector & x) const;
  /// Sigma^-1 x, used to turn repeated inner products into plain dot products.
  Vector apply_precision(const Vector & x) const;

private:
  Matrix sigma_;
  Matrix chol_;
  Matrix whitening_;
  Matrix precision_;
};

double mahalanobis_inner(const Vector & x, const Vector & y, const CovarianceModel & cov);
double mahalanobis_norm(const Vector & x, const CovarianceModel & cov);
Vector whiten(const Vector & x, const CovarianceModel & cov);
Vector unwhiten(const Vector & y, const CovarianceModel & cov);

}  // namespace em2g

#endif  // EM2G_CORE_GEOMETRY_HPP_
