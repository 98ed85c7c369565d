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

#ifndef EM2G_CORE_EXPERIMENTS_HPP_
#define EM2G_CORE_EXPERIMENTS_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/population_em.hpp"

namespace em2g
{

struct TenStepRow
{
  std::size_t t = 0;
  /// +inf at t = 0.
  double lambda = 0.0;
  /// |lambda - mu| / sigma.
  double relative_error = 0.0;
  double kappa = 1.0;
};

struct TenStepTable
{
  double snr = 1.0;
  double target = 0.01;
  std::vector<TenStepRow> rows;
  /// First t with relative_error <= target.
  std::optional<std::size_t> steps_needed;
};

/// One-dimensional run with sigma = 1, mu = snr, started at +infinity. Rows
/// cover t = 0 .. max(10, steps_needed).
TenStepTable ten_step_table(double snr, double target = 0.01, const QuadratureConfig & quad = {});

enum class Basin
{
  plus,
  minus,
  equidistant,
};

const char * to_string(Basin b);

struct FieldCell
{
  std::size_t i = 0;
  std::size_t j = 0;
  Vector lambda_in;
  Vector lambda_out;
  Basin basin = Basin::equidistant;
  /// ||lambda_out - mu*||_Sigma / ||lambda_in - mu*||_Sigma toward the basin's
  /// fixed point (0 on the equidistant branch); NaN at the fixed point itself.
  double decay = 0.0;
  /// Certificate for the reflected iterate; NaN on the equidistant branch.
  double kappa = 0.0;
};

struct FieldGrid
{
  double lo = -4.0;
  double hi = 4.0;
  std::size_t resolution = 81;
  Vector mu;
  Matrix sigma;
  /// Row-major in (i, j): lambda_in = (x_i, x_j), x_k = lo + (hi - lo) k / (res - 1).
  std::vector<FieldCell> cells;
};

FieldGrid field_grid(
  const MixtureSpec & spec, double lo = -4.0, double hi = 4.0, std::size_t resolution = 81,
  int workers = 1, const QuadratureConfig & quad = {});

struct ScalingConfig
{
  Eigen::Index d = 2;
  double snr = 2.0;
  double eps = 0.2;
  double eta = 0.1;
  std::vector<std::size_t> n_values{1000, 10000, 100000};
  std::size_t trials = 50;
  std::uint64_t seed = 0;
  int workers = 1;
};

void validate(const ScalingConfig & config);

struct ScalingTrial
{
  std::size_t n = 0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  bool failed = false;
  /// Sign-resolved Mahalanobis error of the pipeline estimate; NaN on failure.
  double error = 0.0;
  std::string failure;
};

struct ScalingPoint
{
  std::size_t n = 0;
  std::size_t successes = 0;
  std::size_t failures = 0;
  double median_error = 0.0;
  /// log(median) minus the fitted line at log(n).
  double residual = 0.0;
};

struct ScalingResult
{
  std::vector<ScalingPoint> points;
  std::vector<ScalingTrial> trials;
  double slope = 0.0;
  double intercept = 0.0;
};

struct LineFit
{
  double slope = 0.0;
  double intercept = 0.0;
};

/// Least squares y = intercept + slope x. Rejects a degenerate abscissa.
LineFit fit_line(const std::vector<double> & x, const std::vector<double> & y);

double median(std::vector<double> values);

/// Seed of trial `trial` at the `n_index`-th sample size.
std::uint64_t scaling_trial_seed(std::uint64_t master, std::size_t n_index, std::size_t trial);

/// Mixture with mu1 = snr e1 = -mu2 and Sigma = I; every stage gets n samples.
/// Failed trials are dropped when fewer than 10% at every n, otherwise the
/// study throws.
ScalingResult scaling_study(const ScalingConfig & config);

}  // namespace em2g

#endif  // EM2G_CORE_EXPERIMENTS_HPP_
