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

#ifndef EM2G_CORE_POPULATION_EM_HPP_
#define EM2G_CORE_POPULATION_EM_HPP_

#include <cstddef>
#include <optional>
#include <vector>

#include "core/geometry.hpp"
#include "core/quadrature.hpp"

namespace em2g
{

/// Symmetric two-component model 0.5 N(mu, Sigma) + 0.5 N(-mu, Sigma).
class MixtureSpec
{
public:
  MixtureSpec(Vector mu, CovarianceModel cov);

  const Vector & mu() const noexcept { return mu_; }
  const CovarianceModel & cov() const noexcept { return cov_; }
  /// ||mu||_Sigma.
  double snr() const noexcept { return snr_; }
  Eigen::Index dimension() const noexcept { return mu_.size(); }

private:
  Vector mu_;
  CovarianceModel cov_;
  double snr_;
};

/// Current EM estimate. An infinite iterate stands for the limit s * direction
/// with s -> +inf; `lambda` then holds the unit (in ||.||_Sigma) direction and
/// `lambda_norm` is +inf.
struct Iterate
{
  Vector lambda;
  std::size_t step = 0;
  bool infinite = false;
  double lambda_norm = 0.0;
  /// <lambda, mu>_Sigma when the ground truth is known. For infinite iterates
  /// this is the normalized <lambda_hat, mu>_Sigma.
  std::optional<double> alignment;

  static Iterate make(Vector lambda, const CovarianceModel & cov, std::size_t step = 0);
  static Iterate make(Vector lambda, const MixtureSpec & spec, std::size_t step = 0);
  static Iterate at_infinity(const Vector & direction, const MixtureSpec & spec);
};

enum class RateBranch
{
  norm,       ///< <lambda, lambda>_Sigma was the active minimum
  alignment,  ///< <mu, lambda>_Sigma was the active minimum
};

struct RateCertificate
{
  double kappa = 1.0;
  /// min(<lambda,lambda>_Sigma, <mu,lambda>_Sigma); +inf for an infinite iterate.
  double min_term = 0.0;
  RateBranch branch = RateBranch::norm;
};

enum class Termination
{
  converged,
  max_steps,
  fixed_at_zero,
};

const char * to_string(Termination t);

struct TrajectoryPoint
{
  Iterate iterate;
  /// ||lambda - target||_Sigma where target is sign * mu (or 0 on the
  /// equidistant branch).
  double error = 0.0;
  std::optional<RateCertificate> certificate;
};

struct Trajectory
{
  std::vector<TrajectoryPoint> points;
  Termination termination = Termination::max_steps;
  /// +1 or -1 for the targeted fixed point, 0 for the equidistant branch.
  int target_sign = 1;
};

struct RunOptions
{
  std::size_t max_steps = 10000;
  double tol = 1e-6;
  QuadratureConfig quad{};
};

/// Relative tolerance under which <lambda_hat, mu>_Sigma counts as zero.
inline constexpr double kEquidistantTolerance = 1e-12;

/// Sign of the alignment with the equidistant tolerance applied:
/// +1, -1 or 0. `alignment` and `scale` are in the same units.
int basin_sign(double alignment, double scale);

/// E_{x~N(mu, sigma^2)}[tanh(lambda x / sigma^2) x].
double update_1d(double lambda, double mu, double sigma, const QuadratureConfig & quad = {});

/// E_{X~N(alpha, sigma^2)}[tanh(beta X / sigma^2)].
double tanh_expectation(
  double alpha, double beta, double sigma, const QuadratureConfig & quad = {});

/// E_{X~N(alpha, sigma^2)}[tanh'(beta X / sigma^2) X], the quantity shown
/// nonnegative for alpha, beta > 0.
double tanh_derivative_moment(
  double alpha, double beta, double sigma, const QuadratureConfig & quad = {});

/// E|X| for X ~ N(mu, sigma^2).
double folded_normal_mean(double mu, double sigma);

/// Population update M(lambda, mu) = E_{x~N(mu,Sigma)}[tanh(<lambda,x>_Sigma) x]
/// through the plane reduction in whitened coordinates.
Vector population_update(
  const Vector & lambda, const Vector & mu, const CovarianceModel & cov,
  const QuadratureConfig & quad = {});

/// Limit of M(s * direction, mu) as s -> +inf.
Vector population_update_at_infinity(
  const Vector & direction, const Vector & mu, const CovarianceModel & cov);

/// Population update for the stabilized, incorrectly centered mixture with
/// component means mu + delta and -mu + delta:
///   0.5 M(lambda, mu + delta) + 0.5 M(lambda, mu - delta).
Vector shifted_population_update(
  const Vector & lambda, const Vector & mu, const Vector & delta, const CovarianceModel & cov,
  const QuadratureConfig & quad = {});

Iterate update(const Iterate & it, const MixtureSpec & spec, const QuadratureConfig & quad = {});

/// exp(-min(lambda, mu)^2 / (2 sigma^2)). Requires lambda, mu > 0.
RateCertificate rate_1d(double lambda, double mu, double sigma);

/// Multi-dimensional certificate. Requires <lambda, mu>_Sigma > 0.
RateCertificate rate(const Iterate & it, const MixtureSpec & spec);

/// Iterates until ||lambda - sign * mu||_Sigma <= tol or max_steps. The sign
/// is fixed by the initial alignment; zero alignment follows the equidistant
/// branch toward 0.
Trajectory run(const Iterate & start, const MixtureSpec & spec, const RunOptions & options = {});
Trajectory run(const Vector & lambda0, const MixtureSpec & spec, const RunOptions & options = {});

}  // namespace em2g

#endif  // EM2G_CORE_POPULATION_EM_HPP_
