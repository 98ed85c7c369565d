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

#ifndef EM2G_CORE_SAMPLING_HPP_
#define EM2G_CORE_SAMPLING_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>

#include "core/geometry.hpp"
#include "core/random.hpp"

namespace em2g
{

/// Parameters of the raw mixture 0.5 N(mu1, Sigma) + 0.5 N(mu2, Sigma) that
/// generated a batch.
struct SampleOrigin
{
  Vector mu1;
  Vector mu2;
  Matrix sigma;
};

/// Points are stored column-wise (d x n). A stabilized batch holds each
/// translated point next to its negation: columns 2i and 2i+1.
struct SampleBatch
{
  Matrix points;
  std::optional<SampleOrigin> origin;
  std::uint64_t seed = 0;
  std::uint32_t stream = 0;
  bool stabilized = false;
  std::optional<Vector> centered_by;

  Eigen::Index dimension() const noexcept { return points.rows(); }
  Eigen::Index size() const noexcept { return points.cols(); }
};

/// One mixture draw from an addressed counter stream: a fair coin for the
/// component, then mean + L z with z standard normal.
Vector draw_point(
  CounterStream & rng, const Vector & mu1, const Vector & mu2, const Matrix & chol_factor);

/// n independent mixture draws. Point i uses CounterStream(seed, stream, i),
/// so the batch does not depend on `workers`.
SampleBatch draw(
  std::size_t n, const Vector & mu1, const Vector & mu2, const CovarianceModel & cov,
  std::uint64_t seed, std::uint32_t stream = 0, int workers = 1);

/// Replaces every x by the pair (x - c, -(x - c)).
SampleBatch stabilize(const SampleBatch & batch, const Vector & c);

struct MonteCarloEstimate
{
  Vector estimate;
  Vector standard_error;
  std::size_t n = 0;
};

/// Brute-force oracle for the population update: the empirical mean of
/// tanh(<lambda, x>_Sigma) x over n fresh draws, with per-coordinate standard
/// errors from the sample standard deviation.
MonteCarloEstimate mc_update(
  const Vector & lambda, const Vector & mu1, const Vector & mu2, const CovarianceModel & cov,
  std::size_t n, std::uint64_t seed, std::uint32_t stream = 0, int workers = 1);

}  // namespace em2g

#endif  // EM2G_CORE_SAMPLING_HPP_
