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

#include "core/population_em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "core/error.hpp"

namespace em2g
{
namespace
{

void require_positive_sigma(double sigma)
{
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw InvalidArgument("sigma must be positive and finite, got " + std::to_string(sigma));
  }
}

// Underflow guard: the certificate is documented to lie in (0, 1].
double clamp_kappa(double kappa) { return std::max(kappa, std::numeric_limits<double>::min()); }

double tanh_times_identity_mean(double a, double b, const QuadratureConfig & quad)
{
  return expect_shifted_normal([a](double z) { return std::tanh(a * z) * z; }, b, a, quad);
}

double tanh_mean(double a, double b, const QuadratureConfig & quad)
{
  return expect_shifted_normal([a](double z) { return std::tanh(a * z); }, b, a, quad);
}

struct PlaneCoordinates
{
  Vector unit;  // whitened lambda_hat
  Vector perp;  // whitened mu minus its lambda_hat component (not normalized)
  double norm = 0.0;
  double along = 0.0;  // <lambda_hat, mu>
  int sign = 0;
};

PlaneCoordinates plane_coordinates(
  const Vector & lambda, const Vector & mu, const CovarianceModel & cov)
{
  PlaneCoordinates pc;
  const Vector w = cov.whiten(lambda);
  const Vector m = cov.whiten(mu);
  pc.norm = w.norm();
  pc.unit = w / pc.norm;
  pc.along = pc.unit.dot(m);
  pc.sign = basin_sign(pc.along, m.norm());
  if (pc.sign == 0) {
    pc.along = 0.0;
  }
  pc.perp = m - pc.along * pc.unit;
  return pc;
}

}  // namespace

MixtureSpec::MixtureSpec(Vector mu, CovarianceModel cov)
: mu_(std::move(mu)), cov_(std::move(cov)), snr_(0.0)
{
  require_dimension(cov_.dimension(), mu_.size(), "MixtureSpec");
  if (!mu_.allFinite()) {
    throw InvalidArgument("mu must be finite");
  }
  snr_ = cov_.norm(mu_);
}

Iterate Iterate::make(Vector lambda, const CovarianceModel & cov, std::size_t step)
{
  if (!lambda.allFinite()) {
    throw InvalidArgument("iterate must be finite");
  }
  Iterate it;
  it.lambda_norm = cov.norm(lambda);
  it.lambda = std::move(lambda);
  it.step = step;
  return it;
}

Iterate Iterate::make(Vector lambda, const MixtureSpec & spec, std::size_t step)
{
  Iterate it = make(std::move(lambda), spec.cov(), step);
  it.alignment = spec.cov().inner(it.lambda, spec.mu());
  return it;
}

Iterate Iterate::at_infinity(const Vector & direction, const MixtureSpec & spec)
{
  const double n = spec.cov().norm(direction);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw InvalidArgument("infinite start needs a nonzero finite direction");
  }
  Iterate it;
  it.lambda = direction / n;
  it.infinite = true;
  it.lambda_norm = std::numeric_limits<double>::infinity();
  it.alignment = spec.cov().inner(it.lambda, spec.mu());
  return it;
}

const char * to_string(Termination t)
{
  switch (t) {
    case Termination::converged:
      return "converged";
    case Termination::max_steps:
      return "max_steps";
    case Termination::fixed_at_zero:
      return "fixed_at_zero";
  }
  return "unknown";
}

int basin_sign(double alignment, double scale)
{
  if (std::abs(alignment) <= kEquidistantTolerance * scale) {
    return 0;
  }
  return alignment > 0.0 ? 1 : -1;
}

double update_1d(double lambda, double mu, double sigma, const QuadratureConfig & quad)
{
  require_positive_sigma(sigma);
  validate(quad);
  if (lambda == 0.0) {
    return 0.0;
  }
  return sigma * tanh_times_identity_mean(lambda / sigma, mu / sigma, quad);
}

double tanh_expectation(double alpha, double beta, double sigma, const QuadratureConfig & quad)
{
  require_positive_sigma(sigma);
  validate(quad);
  if (beta == 0.0) {
    return 0.0;
  }
  return tanh_mean(beta / sigma, alpha / sigma, quad);
}

double tanh_derivative_moment(
  double alpha, double beta, double sigma, const QuadratureConfig & quad)
{
  require_positive_sigma(sigma);
  validate(quad);
  const double a = beta / sigma;
  const auto integrand = [a](double z) {
    const double c = std::cosh(a * z);
    return z / (c * c);
  };
  return sigma * expect_shifted_normal(integrand, alpha / sigma, a, quad);
}

double folded_normal_mean(double mu, double sigma)
{
  require_positive_sigma(sigma);
  const double r = mu / sigma;
  const double sqrt_2_over_pi = std::numbers::sqrt2 * std::numbers::inv_sqrtpi;
  return mu * std::erf(r / std::numbers::sqrt2) + sigma * sqrt_2_over_pi * std::exp(-0.5 * r * r);
}

Vector population_update(
  const Vector & lambda, const Vector & mu, const CovarianceModel & cov,
  const QuadratureConfig & quad)
{
  validate(quad);
  require_dimension(cov.dimension(), lambda.size(), "update");
  require_dimension(cov.dimension(), mu.size(), "update");
  if (lambda.hasNaN()) {
    throw InvalidArgument("update: lambda is NaN");
  }
  if (lambda.isZero(0.0)) {
    return Vector::Zero(lambda.size());
  }
  const PlaneCoordinates pc = plane_coordinates(lambda, mu, cov);
  // lambda_hat axis: one-dimensional EM with sharpness ||lambda||.
  const double along = tanh_times_identity_mean(pc.norm, pc.along, quad);
  // lambda_hat-perp axis: <perp, mu> E[tanh(||lambda|| (y + <lambda_hat, mu>))].
  // On the equidistant hyperplane that expectation is exactly zero.
  const double across = pc.sign == 0 ? 0.0 : tanh_mean(pc.norm, pc.along, quad);
  const Vector out = along * pc.unit + across * pc.perp;
  return cov.unwhiten(out);
}

Vector population_update_at_infinity(
  const Vector & direction, const Vector & mu, const CovarianceModel & cov)
{
  require_dimension(cov.dimension(), direction.size(), "update");
  require_dimension(cov.dimension(), mu.size(), "update");
  if (direction.isZero(0.0) || !direction.allFinite()) {
    throw InvalidArgument("infinite iterate needs a nonzero finite direction");
  }
  const PlaneCoordinates pc = plane_coordinates(direction, mu, cov);
  // tanh saturates to sign: E|y + b| along lambda_hat, E[sign(y + b)] across.
  const double along = folded_normal_mean(pc.along, 1.0);
  const double across = pc.sign == 0 ? 0.0 : std::erf(pc.along / std::numbers::sqrt2);
  const Vector out = along * pc.unit + across * pc.perp;
  return cov.unwhiten(out);
}

Vector shifted_population_update(
  const Vector & lambda, const Vector & mu, const Vector & delta, const CovarianceModel & cov,
  const QuadratureConfig & quad)
{
  require_dimension(cov.dimension(), delta.size(), "shifted update");
  return 0.5 * (population_update(lambda, mu + delta, cov, quad) +
                population_update(lambda, mu - delta, cov, quad));
}

Iterate update(const Iterate & it, const MixtureSpec & spec, const QuadratureConfig & quad)
{
  require_dimension(spec.dimension(), it.lambda.size(), "update");
  Vector next = it.infinite ? population_update_at_infinity(it.lambda, spec.mu(), spec.cov())
                            : population_update(it.lambda, spec.mu(), spec.cov(), quad);
  return Iterate::make(std::move(next), spec, it.step + 1);
}

RateCertificate rate_1d(double lambda, double mu, double sigma)
{
  require_positive_sigma(sigma);
  if (!(lambda > 0.0) || !(mu > 0.0)) {
    throw Error(ErrorCode::basin, "rate_1d is defined for lambda > 0 and mu > 0");
  }
  const double s2 = sigma * sigma;
  const double norm_sq = lambda * lambda / s2;
  const double align = mu * lambda / s2;
  RateCertificate cert;
  cert.branch = norm_sq <= align ? RateBranch::norm : RateBranch::alignment;
  cert.min_term = std::min(norm_sq, align);
  const double m = std::min(lambda, mu);
  cert.kappa = clamp_kappa(std::exp(-m * m / (2.0 * s2)));
  return cert;
}

RateCertificate rate(const Iterate & it, const MixtureSpec & spec)
{
  require_dimension(spec.dimension(), it.lambda.size(), "rate");
  const double align = it.alignment ? *it.alignment : spec.cov().inner(it.lambda, spec.mu());
  if (!(align > 0.0)) {
    throw Error(
      ErrorCode::basin, "rate needs <lambda, mu>_Sigma > 0 (got " + std::to_string(align) + ")");
  }
  RateCertificate cert;
  if (it.infinite) {
    // min(s^2, s <lambda_hat, mu>)^2 / (2 s^2) -> <lambda_hat, mu>^2 / 2.
    cert.branch = RateBranch::alignment;
    cert.min_term = std::numeric_limits<double>::infinity();
    cert.kappa = clamp_kappa(std::exp(-0.5 * align * align));
    return cert;
  }
  const double norm_sq = it.lambda_norm * it.lambda_norm;
  cert.branch = norm_sq <= align ? RateBranch::norm : RateBranch::alignment;
  cert.min_term = std::min(norm_sq, align);
  cert.kappa = clamp_kappa(std::exp(-cert.min_term * cert.min_term / (2.0 * norm_sq)));
  return cert;
}

namespace
{

std::optional<RateCertificate> signed_certificate(
  const Iterate & it, const MixtureSpec & spec, int sign)
{
  if (sign == 0) {
    return std::nullopt;
  }
  Iterate reflected = it;
  reflected.lambda *= static_cast<double>(sign);
  if (reflected.alignment) {
    *reflected.alignment *= static_cast<double>(sign);
  }
  if (!reflected.alignment || !(*reflected.alignment > 0.0)) {
    // The iterate crossed the hyperplane; no certificate on this branch.
    return std::nullopt;
  }
  return rate(reflected, spec);
}

}  // namespace

Trajectory run(const Iterate & start, const MixtureSpec & spec, const RunOptions & options)
{
  require_dimension(spec.dimension(), start.lambda.size(), "run");
  validate(options.quad);
  if (!(options.tol >= 0.0)) {
    throw InvalidArgument("run: tol must be nonnegative");
  }

  Trajectory traj;
  const double align = start.alignment ? *start.alignment : spec.cov().inner(start.lambda, spec.mu());
  const double scale = start.infinite ? spec.snr() : start.lambda_norm * spec.snr();
  traj.target_sign = basin_sign(align, scale);
  const Vector target = static_cast<double>(traj.target_sign) * spec.mu();

  auto record = [&](const Iterate & it) {
    TrajectoryPoint p;
    p.iterate = it;
    p.error = it.infinite ? std::numeric_limits<double>::infinity()
                          : spec.cov().norm(it.lambda - target);
    p.certificate = signed_certificate(it, spec, traj.target_sign);
    traj.points.push_back(std::move(p));
  };

  Iterate current = start;
  if (!current.alignment) {
    current.alignment = align;
  }
  record(current);
  for (;;) {
    const auto & last = traj.points.back();
    if (!last.iterate.infinite && last.iterate.lambda_norm == 0.0) {
      traj.termination = Termination::fixed_at_zero;
      return traj;
    }
    if (last.error <= options.tol) {
      traj.termination =
        traj.target_sign == 0 ? Termination::fixed_at_zero : Termination::converged;
      return traj;
    }
    if (current.step >= options.max_steps) {
      traj.termination = Termination::max_steps;
      return traj;
    }
    current = update(current, spec, options.quad);
    record(current);
  }
}

Trajectory run(const Vector & lambda0, const MixtureSpec & spec, const RunOptions & options)
{
  return run(Iterate::make(lambda0, spec), spec, options);
}

}  // namespace em2g
