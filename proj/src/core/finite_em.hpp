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

#ifndef EM2G_CORE_FINITE_EM_HPP_
#define EM2G_CORE_FINITE_EM_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "core/geometry.hpp"
#include "core/sampling.hpp"

namespace em2g
{

enum class QuartileKind
{
  first,
  third,
};

/// Order statistic at rank ceil(n/4) or ceil(3n/4) (1-based), no interpolation.
double quartile(std::vector<double> values, QuartileKind which);

struct CenterEstimate
{
  Vector c;
  /// (first, third) quartile per whitened axis.
  std::vector<std::pair<double, double>> per_axis_quartiles;
  std::size_t n_used = 0;
};

/// Per-axis quartile midpoint in whitened coordinates, mapped back.
CenterEstimate estimate_center(const SampleBatch & batch, const CovarianceModel & cov);

/// Mean of tanh(<lambda, x>_Sigma) x over a stabilized batch. Exactly odd in
/// lambda.
Vector sample_update(
  const Vector & lambda, const SampleBatch & batch, const CovarianceModel & cov, int workers = 1);

/// (1/n) sum of x~ x~^T with x~ = W x (whitened coordinates).
Matrix empirical_covariance(const SampleBatch & batch, const CovarianceModel & cov, int workers = 1);

/// Spectral summary of the whitened empirical covariance.
struct SpectrumSummary
{
  double top = 0.0;
  double second = 0.0;
  /// top / second; top / 1 in one dimension, where the noise level is known.
  double gap_ratio = 0.0;
  /// max(top - 1, 0).
  double snr_squared = 0.0;
  Vector top_vector;
};

SpectrumSummary summarize_spectrum(const Matrix & whitened_cov);

/// Below this eigen-gap ratio the batch carries no usable signal.
inline constexpr double kNoSignalGap = 1.05;

/// Maximum angle between the last two bootstrap directions for the direction
/// to count as stabilized.
inline constexpr double kBootstrapAngleTolerance = 0.1;

struct BootstrapState
{
  /// Unit vector in ||.||_Sigma.
  Vector direction;
  /// sqrt(2/S) * eps.
  double magnitude = 0.0;
  /// Sum of ||x_i||_Sigma^3.
  double s = 0.0;
  std::size_t iterations_done = 0;
  std::size_t iteration_cap = 0;
  double last_angle_change = 0.0;
  SpectrumSummary spectrum;
};

/// ceil(8 log2 d / min(snr2, 1)), at least 1.
std::size_t default_bootstrap_cap(Eigen::Index d, double snr_squared);

/// Stream used for the random start direction of the bootstrap.
inline constexpr std::uint32_t kDirectionStream = 3;

/// EM at magnitude sqrt(2/S) eps, renormalized after every step; effectively
/// power iteration on the whitened empirical covariance. `cap` = 0 selects
/// the default cap. Throws StageError("initialization") when the batch has no
/// eigen-gap or the direction has not stabilized by the cap.
BootstrapState bootstrap_init(
  const SampleBatch & batch, const CovarianceModel & cov, double eps, std::size_t cap,
  std::uint64_t seed, int workers = 1);

struct PipelineConfig
{
  double eps = 0.2;
  double eta = 0.1;
  /// 0 selects default_stage_size().
  std::size_t n_center = 0;
  std::size_t n_init = 0;
  std::size_t n_step = 0;
  /// 0 selects default_bootstrap_cap().
  std::size_t bootstrap_cap = 0;
  /// 0 selects ceil(4 max(1, 1/snr2) ln(1/eps)) + 1.
  std::size_t main_steps = 0;
  /// 0 selects 4 x the largest ||x - c||_Sigma over a 64-point probe.
  double blowup = 0.0;
  /// Reuse one batch for every main-loop step instead of fresh draws.
  bool reuse = false;
  int workers = 1;
  std::uint64_t seed = 0;
};

void validate(const PipelineConfig & config);

/// ceil(64 d max(1, ln d) ln(3/eta) / eps^2).
std::size_t default_stage_size(Eigen::Index d, double eps, double eta);

inline constexpr std::uint32_t kCenterStream = 0;
inline constexpr std::uint32_t kInitStream = 1;
inline constexpr std::uint32_t kProbeStream = 2;
inline constexpr std::uint32_t kMainStreamBase = 100;
inline constexpr std::size_t kProbeSize = 64;

struct PipelineStepRecord
{
  std::size_t step = 0;
  /// Sign-resolved ||lambda_t -+ mu||_Sigma; synthetic mode only.
  std::optional<double> error;
  /// |<lambda_t / ||lambda_t||, u>_Sigma> with u the true direction in
  /// synthetic mode and the final estimate's direction otherwise.
  double alignment = 0.0;
  std::size_t batch_size = 0;
  std::uint32_t seed_stream = 0;
};

struct PipelineResult
{
  Vector lambda_star;
  CenterEstimate center;
  BootstrapState bootstrap;
  double blowup = 0.0;
  std::size_t main_steps = 0;
  std::size_t n_center = 0;
  std::size_t n_init = 0;
  std::size_t n_step = 0;
  double snr_hat = 0.0;
  /// Estimates of the two component means: c + lambda*, c - lambda*.
  Vector mean_plus;
  Vector mean_minus;
  bool synthetic = false;
  std::optional<double> error;
  std::optional<double> center_error;
  std::optional<double> init_alignment;
  std::vector<PipelineStepRecord> steps;
};

/// Synthetic mode: every stage draws from 0.5 N(mu1, Sigma) + 0.5 N(mu2, Sigma)
/// under config.seed with its own stream.
PipelineResult run_pipeline(
  const PipelineConfig & config, const Vector & mu1, const Vector & mu2,
  const CovarianceModel & cov);

/// Estimation mode: rows are consumed in order (center, init, then one block
/// per main step). The 64-point probe reuses the head of the centering block.
PipelineResult run_pipeline(
  const PipelineConfig & config, const SampleBatch & data, const CovarianceModel & cov);

/// min(||lambda - mu||_Sigma, ||lambda + mu||_Sigma).
double sign_resolved_error(const Vector & lambda, const Vector & mu, const CovarianceModel & cov);

}  // namespace em2g

#endif  // EM2G_CORE_FINITE_EM_HPP_
