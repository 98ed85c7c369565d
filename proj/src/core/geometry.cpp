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

#include "core/geometry.hpp"

#include <cmath>
#include <string>

#include "core/error.hpp"

namespace em2g
{

CovarianceModel::CovarianceModel(const Matrix & sigma, double eigen_floor) : sigma_(sigma)
{
  if (sigma.rows() == 0 || sigma.rows() != sigma.cols()) {
    throw DimensionError("covariance must be a non-empty square matrix");
  }
  if (!sigma.allFinite()) {
    throw Error(ErrorCode::not_spd, "covariance has non-finite entries");
  }
  const double scale = sigma.cwiseAbs().maxCoeff();
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw Error(ErrorCode::not_spd, "covariance is not symmetric");
  }
  // Symmetrize exactly so the factorization sees a symmetric input.
  sigma_ = 0.5 * (sigma + sigma.transpose());

  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma_, Eigen::EigenvaluesOnly);
  const double largest = eig.eigenvalues().maxCoeff();
  const double smallest = eig.eigenvalues().minCoeff();
  if (!(largest > 0.0) || smallest <= eigen_floor * largest) {
    throw Error(
      ErrorCode::not_spd, "covariance is not positive definite (smallest eigenvalue " +
                            std::to_string(smallest) + ")");
  }

  Eigen::LLT<Matrix> llt(sigma_);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::not_spd, "cholesky factorization failed");
  }
  chol_ = llt.matrixL();
  const auto d = sigma_.rows();
  whitening_ = chol_.triangularView<Eigen::Lower>().solve(Matrix::Identity(d, d));
  precision_ = whitening_.transpose() * whitening_;
}

CovarianceModel CovarianceModel::identity(Eigen::Index d)
{
  if (d <= 0) {
    throw DimensionError("dimension must be positive");
  }
  return CovarianceModel(Matrix::Identity(d, d));
}

CovarianceModel CovarianceModel::diagonal(const Vector & variances)
{
  return CovarianceModel(Matrix(variances.asDiagonal()));
}

Vector CovarianceModel::whiten(const Vector & x) const
{
  require_dimension(dimension(), x.size(), "whiten");
  return chol_.triangularView<Eigen::Lower>().solve(x);
}

Vector CovarianceModel::unwhiten(const Vector & y) const
{
  require_dimension(dimension(), y.size(), "unwhiten");
  return chol_.triangularView<Eigen::Lower>() * y;
}

Matrix CovarianceModel::whiten_columns(const Matrix & x) const
{
  require_dimension(dimension(), x.rows(), "whiten_columns");
  return chol_.triangularView<Eigen::Lower>().solve(x);
}

double CovarianceModel::inner(const Vector & x, const Vector & y) const
{
  require_dimension(dimension(), x.size(), "mahalanobis_inner");
  require_dimension(dimension(), y.size(), "mahalanobis_inner");
  return whiten(x).dot(whiten(y));
}

double CovarianceModel::norm(const Vector & x) const
{
  require_dimension(dimension(), x.size(), "mahalanobis_norm");
  return whiten(x).norm();
}

Vector CovarianceModel::apply_precision(const Vector & x) const
{
  require_dimension(dimension(), x.size(), "apply_precision");
  return precision_ * x;
}

double mahalanobis_inner(const Vector & x, const Vector & y, const CovarianceModel & cov)
{
  return cov.inner(x, y);
}

double mahalanobis_norm(const Vector & x, const CovarianceModel & cov) { return cov.norm(x); }

Vector whiten(const Vector & x, const CovarianceModel & cov) { return cov.whiten(x); }

Vector unwhiten(const Vector & y, const CovarianceModel & cov) { return cov.unwhiten(y); }

}  // namespace em2g
