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

#include "core/sampling.hpp"

#include <cmath>
#include <string>

#include "core/error.hpp"
#include "core/parallel.hpp"

namespace em2g
{

namespace
{

void check_means(const Vector & mu1, const Vector & mu2, const CovarianceModel & cov)
{
  require_dimension(cov.dimension(), mu1.size(), "mu1");
  require_dimension(cov.dimension(), mu2.size(), "mu2");
  require(mu1.allFinite() && mu2.allFinite(), "component means must be finite");
}

// Running sums of f and f^2.
struct Moments
{
  Vector sum;
  Vector sum_sq;
  Moments & operator+=(const Moments & o)
  {
    sum += o.sum;
    sum_sq += o.sum_sq;
    return *this;
  }
};

}  // namespace

Vector draw_point(
  CounterStream & rng, const Vector & mu1, const Vector & mu2, const Matrix & chol_factor)
{
  const bool first = rng.uniform() < 0.5;
  Vector z(mu1.size());
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    z(k) = rng.normal();
  }
  Vector x = chol_factor.triangularView<Eigen::Lower>() * z;
  x += first ? mu1 : mu2;
  return x;
}

SampleBatch draw(
  std::size_t n, const Vector & mu1, const Vector & mu2, const CovarianceModel & cov,
  std::uint64_t seed, std::uint32_t stream, int workers)
{
  require(n > 0, "sample size must be positive");
  check_means(mu1, mu2, cov);
  SampleBatch batch;
  batch.points.resize(cov.dimension(), static_cast<Eigen::Index>(n));
  const Matrix & chol = cov.cholesky_factor();
  const std::size_t n_chunks = (n + kChunkRows - 1) / kChunkRows;
  parallel_for(n_chunks, workers, [&](std::size_t c) {
    const std::size_t end = std::min(n, (c + 1) * kChunkRows);
    for (std::size_t i = c * kChunkRows; i < end; ++i) {
      CounterStream rng(seed, stream, i);
      batch.points.col(static_cast<Eigen::Index>(i)) = draw_point(rng, mu1, mu2, chol);
    }
  });
  batch.origin = SampleOrigin{mu1, mu2, cov.sigma()};
  batch.seed = seed;
  batch.stream = stream;
  return batch;
}

SampleBatch stabilize(const SampleBatch & batch, const Vector & c)
{
  if (batch.stabilized) {
    throw Error(ErrorCode::precondition, "batch is already stabilized");
  }
  require_dimension(batch.dimension(), c.size(), "center");
  require(c.allFinite(), "center must be finite");
  SampleBatch out;
  out.points.resize(batch.dimension(), 2 * batch.size());
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    const Vector y = batch.points.col(i) - c;
    out.points.col(2 * i) = y;
    out.points.col(2 * i + 1) = -y;
  }
  out.origin = batch.origin;
  out.seed = batch.seed;
  out.stream = batch.stream;
  out.stabilized = true;
  out.centered_by = batch.centered_by ? Vector(*batch.centered_by + c) : c;
  return out;
}

MonteCarloEstimate mc_update(
  const Vector & lambda, const Vector & mu1, const Vector & mu2, const CovarianceModel & cov,
  std::size_t n, std::uint64_t seed, std::uint32_t stream, int workers)
{
  require(n >= 1000, "Monte Carlo oracle needs n >= 1000, got " + std::to_string(n));
  check_means(mu1, mu2, cov);
  require_dimension(cov.dimension(), lambda.size(), "lambda");
  const Eigen::Index d = cov.dimension();
  const Vector v = cov.apply_precision(lambda);
  const Matrix & chol = cov.cholesky_factor();

  const Moments zero{Vector::Zero(d), Vector::Zero(d)};
  const Moments m = chunked_sum(n, workers, zero, [&](std::size_t begin, std::size_t end) {
    Moments part = zero;
    for (std::size_t i = begin; i < end; ++i) {
      CounterStream rng(seed, stream, i);
      const Vector x = draw_point(rng, mu1, mu2, chol);
      const Vector f = std::tanh(v.dot(x)) * x;
      part.sum += f;
      part.sum_sq += f.cwiseProduct(f);
    }
    return part;
  });

  const double nn = static_cast<double>(n);
  MonteCarloEstimate out;
  out.n = n;
  out.estimate = m.sum / nn;
  out.standard_error.resize(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    const double var =
      std::max(0.0, (m.sum_sq(k) - nn * out.estimate(k) * out.estimate(k)) / (nn - 1.0));
    out.standard_error(k) = std::sqrt(var / nn);
  }
  return out;
}

}  // namespace em2g
