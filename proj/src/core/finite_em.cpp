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

#include "core/finite_em.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "core/error.hpp"
#include "core/parallel.hpp"
#include "core/random.hpp"

namespace em2g
{

namespace
{

// Mean over columns of tanh(v^T x) x, chunked for a fixed summation order.
Vector tanh_mean(const Matrix & x, const Vector & v, int workers)
{
  const auto n = static_cast<std::size_t>(x.cols());
  const Vector total =
    chunked_sum(n, workers, Vector(Vector::Zero(x.rows())), [&](std::size_t b, std::size_t e) {
      const auto block = x.middleCols(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(e - b));
      const Vector t = (block.transpose() * v).array().tanh().matrix();
      return Vector(block * t);
    });
  return total / static_cast<double>(n);
}

Matrix second_moment(const Matrix & x, int workers)
{
  const auto n = static_cast<std::size_t>(x.cols());
  const Matrix total = chunked_sum(
    n, workers, Matrix(Matrix::Zero(x.rows(), x.rows())), [&](std::size_t b, std::size_t e) {
      const auto block = x.middleCols(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(e - b));
      return Matrix(block * block.transpose());
    });
  Matrix m = total / static_cast<double>(n);
  return 0.5 * (m + m.transpose());
}

// Angle between unit vectors, accurate for tiny angles.
double angle_between(const Vector & a, const Vector & b)
{
  const double chord = std::min(2.0, (a - b).norm());
  return 2.0 * std::asin(0.5 * chord);
}

void require_stabilized(const SampleBatch & batch, const char * op)
{
  if (!batch.stabilized) {
    throw Error(ErrorCode::precondition, std::string(op) + " requires a stabilized batch");
  }
  require(batch.size() > 0, std::string(op) + ": empty batch");
}

BootstrapState bootstrap_whitened(
  const Matrix & xw, const SpectrumSummary & spectrum, const CovarianceModel & cov, double eps,
  std::size_t cap, std::uint64_t seed, int workers)
{
  const Eigen::Index d = xw.rows();
  BootstrapState state;
  state.spectrum = spectrum;
  if (spectrum.gap_ratio < kNoSignalGap) {
    throw StageError(
      "initialization", "no signal: eigen-gap ratio " + std::to_string(spectrum.gap_ratio) +
                          " is below " + std::to_string(kNoSignalGap));
  }
  state.s = xw.colwise().norm().array().cube().sum();
  require(state.s > 0.0, "bootstrap batch is identically zero");
  state.magnitude = std::sqrt(2.0 / state.s) * eps;
  state.iteration_cap = cap == 0 ? default_bootstrap_cap(d, spectrum.snr_squared) : cap;

  CounterStream rng(seed, kDirectionStream, 0);
  Vector dir(d);
  do {
    for (Eigen::Index k = 0; k < d; ++k) {
      dir(k) = rng.normal();
    }
  } while (dir.norm() == 0.0);
  dir.normalize();

  double angle = 0.0;
  for (std::size_t i = 0; i < state.iteration_cap; ++i) {
    const Vector next = tanh_mean(xw, state.magnitude * dir, workers);
    const double len = next.norm();
    if (!(len > 0.0) || !std::isfinite(len)) {
      throw StageError("initialization", "power iterate collapsed");
    }
    const Vector next_dir = next / len;
    angle = angle_between(dir, next_dir);
    dir = next_dir;
    state.iterations_done = i + 1;
    if (angle <= 1e-10) {
      break;
    }
  }
  state.last_angle_change = angle;
  if (angle > kBootstrapAngleTolerance) {
    throw StageError(
      "initialization", "direction did not stabilize within " +
                          std::to_string(state.iteration_cap) + " iterations (last angle change " +
                          std::to_string(angle) + ")");
  }
  state.direction = cov.unwhiten(dir);
  return state;
}

using BatchSource = std::function<SampleBatch(std::uint32_t stream, std::size_t n)>;

PipelineResult run_stages(
  const PipelineConfig & config, const CovarianceModel & cov, const BatchSource & source,
  const std::function<std::size_t(std::size_t main_steps)> & check_budget,
  const std::function<SampleBatch()> & probe_source, const std::optional<Vector> & mu,
  const std::optional<Vector> & true_center)
{
  const Eigen::Index d = cov.dimension();
  PipelineResult out;
  out.synthetic = mu.has_value();
  const std::size_t n_default = default_stage_size(d, config.eps, config.eta);
  out.n_center = config.n_center ? config.n_center : n_default;
  out.n_init = config.n_init ? config.n_init : n_default;
  out.n_step = config.n_step ? config.n_step : n_default;

  // Stage 1: centering.
  out.center = estimate_center(source(kCenterStream, out.n_center), cov);
  const Vector & c = out.center.c;
  if (true_center) {
    out.center_error = cov.norm(c - *true_center);
  }

  // Stage 2: bootstrap on the stabilized init batch.
  const SampleBatch init = stabilize(source(kInitStream, out.n_init), c);
  const Matrix xw = cov.whiten_columns(init.points);
  const SpectrumSummary spectrum = summarize_spectrum(second_moment(xw, config.workers));
  out.snr_hat = std::sqrt(spectrum.snr_squared);
  if (spectrum.gap_ratio >= kNoSignalGap && config.eps > out.snr_hat) {
    throw Error(
      ErrorCode::precondition, "precondition: eps = " + std::to_string(config.eps) +
                                 " exceeds the estimated SNR " + std::to_string(out.snr_hat));
  }
  out.bootstrap = bootstrap_whitened(
    xw, spectrum, cov, config.eps, config.bootstrap_cap, config.seed, config.workers);
  std::optional<Vector> mu_hat;
  if (mu && cov.norm(*mu) > 0.0) {
    mu_hat = *mu / cov.norm(*mu);
    out.init_alignment = std::abs(cov.inner(out.bootstrap.direction, *mu_hat));
  }

  // Stage 3: blow-up and the stabilized main loop.
  if (config.blowup > 0.0) {
    out.blowup = config.blowup;
  } else {
    const SampleBatch probe = probe_source();
    double largest = 0.0;
    for (Eigen::Index i = 0; i < probe.size(); ++i) {
      largest = std::max(largest, cov.norm(probe.points.col(i) - c));
    }
    out.blowup = 4.0 * largest;
  }
  if (config.main_steps > 0) {
    out.main_steps = config.main_steps;
  } else {
    const double inv_snr2 = spectrum.snr_squared > 0.0 ? 1.0 / spectrum.snr_squared : 1.0;
    const double log_term = std::max(0.0, std::log(1.0 / config.eps));
    out.main_steps =
      static_cast<std::size_t>(std::ceil(4.0 * std::max(1.0, inv_snr2) * log_term)) + 1;
  }
  check_budget(out.main_steps);

  auto record = [&](std::size_t step, const Vector & lambda, std::size_t n, std::uint32_t stream) {
    PipelineStepRecord r;
    r.step = step;
    r.batch_size = n;
    r.seed_stream = stream;
    if (mu) {
      r.error = sign_resolved_error(lambda, *mu, cov);
    }
    const double len = cov.norm(lambda);
    if (mu_hat && len > 0.0) {
      r.alignment = std::abs(cov.inner(lambda, *mu_hat)) / len;
    }
    out.steps.push_back(r);
  };

  Vector lambda = out.blowup * out.bootstrap.direction;
  std::vector<Vector> history{lambda};
  record(0, lambda, out.n_init, kInitStream);
  std::optional<SampleBatch> reused;
  for (std::size_t t = 1; t <= out.main_steps; ++t) {
    const auto stream = static_cast<std::uint32_t>(kMainStreamBase + (config.reuse ? 0 : t));
    if (!config.reuse || !reused) {
      reused = stabilize(source(stream, out.n_step), c);
    }
    lambda = sample_update(lambda, *reused, cov, config.workers);
    if (!lambda.allFinite()) {
      throw StageError("main", "non-finite iterate at step " + std::to_string(t));
    }
    history.push_back(lambda);
    record(t, lambda, out.n_step, stream);
  }

  out.lambda_star = lambda;
  out.mean_plus = c + lambda;
  out.mean_minus = c - lambda;
  if (mu) {
    out.error = sign_resolved_error(lambda, *mu, cov);
  } else {
    const double final_len = cov.norm(lambda);
    for (std::size_t i = 0; i < history.size(); ++i) {
      const double len = cov.norm(history[i]);
      out.steps[i].alignment = (len > 0.0 && final_len > 0.0)
                                 ? std::abs(cov.inner(history[i], lambda)) / (len * final_len)
                                 : 0.0;
    }
  }
  return out;
}

}  // namespace

double quartile(std::vector<double> values, QuartileKind which)
{
  const std::size_t n = values.size();
  require(n >= 4, "quartile needs at least 4 values, got " + std::to_string(n));
  const std::size_t rank = which == QuartileKind::first ? (n + 3) / 4 : (3 * n + 3) / 4;
  const auto it = values.begin() + static_cast<std::ptrdiff_t>(rank - 1);
  std::nth_element(values.begin(), it, values.end());
  return *it;
}

CenterEstimate estimate_center(const SampleBatch & batch, const CovarianceModel & cov)
{
  if (batch.stabilized || batch.centered_by) {
    throw Error(ErrorCode::precondition, "centering needs a raw, unstabilized batch");
  }
  require_dimension(cov.dimension(), batch.dimension(), "batch");
  require(batch.size() >= 8, "centering needs at least 8 samples, got " +
                               std::to_string(batch.size()));
  const Matrix xw = cov.whiten_columns(batch.points);
  CenterEstimate out;
  out.n_used = static_cast<std::size_t>(batch.size());
  Vector cw(xw.rows());
  std::vector<double> axis(static_cast<std::size_t>(xw.cols()));
  for (Eigen::Index k = 0; k < xw.rows(); ++k) {
    for (Eigen::Index i = 0; i < xw.cols(); ++i) {
      axis[static_cast<std::size_t>(i)] = xw(k, i);
    }
    const double q1 = quartile(axis, QuartileKind::first);
    const double q3 = quartile(axis, QuartileKind::third);
    out.per_axis_quartiles.emplace_back(q1, q3);
    cw(k) = 0.5 * (q1 + q3);
  }
  out.c = cov.unwhiten(cw);
  return out;
}

Vector sample_update(
  const Vector & lambda, const SampleBatch & batch, const CovarianceModel & cov, int workers)
{
  require_stabilized(batch, "sample_update");
  require_dimension(cov.dimension(), batch.dimension(), "batch");
  require_dimension(cov.dimension(), lambda.size(), "lambda");
  return tanh_mean(batch.points, cov.apply_precision(lambda), workers);
}

Matrix empirical_covariance(const SampleBatch & batch, const CovarianceModel & cov, int workers)
{
  require_stabilized(batch, "empirical_covariance");
  require_dimension(cov.dimension(), batch.dimension(), "batch");
  return second_moment(cov.whiten_columns(batch.points), workers);
}

SpectrumSummary summarize_spectrum(const Matrix & whitened_cov)
{
  require(whitened_cov.rows() == whitened_cov.cols() && whitened_cov.rows() > 0,
          "covariance must be square and non-empty");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(whitened_cov);
  const Vector & ev = eig.eigenvalues();  // ascending
  const Eigen::Index d = ev.size();
  SpectrumSummary s;
  s.top = ev(d - 1);
  s.second = d > 1 ? ev(d - 2) : 1.0;
  s.gap_ratio = s.second > 0.0 ? s.top / s.second : std::numeric_limits<double>::infinity();
  s.snr_squared = std::max(0.0, s.top - 1.0);
  s.top_vector = eig.eigenvectors().col(d - 1);
  return s;
}

std::size_t default_bootstrap_cap(Eigen::Index d, double snr_squared)
{
  const double denom = std::min(std::max(snr_squared, 1e-12), 1.0);
  const double cap = std::ceil(8.0 * std::log2(static_cast<double>(d)) / denom);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::min(cap, 1e9)));
}

BootstrapState bootstrap_init(
  const SampleBatch & batch, const CovarianceModel & cov, double eps, std::size_t cap,
  std::uint64_t seed, int workers)
{
  require_stabilized(batch, "bootstrap_init");
  require_dimension(cov.dimension(), batch.dimension(), "batch");
  require(eps > 0.0 && std::isfinite(eps), "eps must be positive");
  const Matrix xw = cov.whiten_columns(batch.points);
  return bootstrap_whitened(
    xw, summarize_spectrum(second_moment(xw, workers)), cov, eps, cap, seed, workers);
}

void validate(const PipelineConfig & config)
{
  require(config.eps > 0.0 && std::isfinite(config.eps), "eps must be positive");
  require(config.eta > 0.0 && config.eta < 1.0, "eta must lie in (0, 1)");
  require(config.blowup >= 0.0 && std::isfinite(config.blowup), "blowup must be positive");
  require(config.workers >= 1, "workers must be at least 1");
}

std::size_t default_stage_size(Eigen::Index d, double eps, double eta)
{
  const double dd = static_cast<double>(d);
  const double n = 64.0 * dd * std::max(1.0, std::log(dd)) * std::log(3.0 / eta) / (eps * eps);
  return static_cast<std::size_t>(std::ceil(n));
}

PipelineResult run_pipeline(
  const PipelineConfig & config, const Vector & mu1, const Vector & mu2,
  const CovarianceModel & cov)
{
  validate(config);
  require_dimension(cov.dimension(), mu1.size(), "mu1");
  require_dimension(cov.dimension(), mu2.size(), "mu2");
  const BatchSource source = [&](std::uint32_t stream, std::size_t n) {
    return draw(n, mu1, mu2, cov, config.seed, stream, config.workers);
  };
  const auto probe = [&]() {
    return draw(kProbeSize, mu1, mu2, cov, config.seed, kProbeStream, config.workers);
  };
  const Vector mu = 0.5 * (mu1 - mu2);
  const Vector center = 0.5 * (mu1 + mu2);
  return run_stages(
    config, cov, source, [](std::size_t) { return std::size_t{0}; }, probe, mu, center);
}

PipelineResult run_pipeline(
  const PipelineConfig & config, const SampleBatch & data, const CovarianceModel & cov)
{
  validate(config);
  require_dimension(cov.dimension(), data.dimension(), "data");
  if (data.stabilized || data.centered_by) {
    throw Error(ErrorCode::precondition, "pipeline input must be raw samples");
  }
  const auto rows = static_cast<std::size_t>(data.size());
  std::size_t n_center = 0;
  std::size_t n_init = 0;

  const auto slice = [&](std::size_t begin, std::size_t n) {
    if (begin + n > rows) {
      throw InvalidArgument(
        "data has " + std::to_string(rows) + " rows; pipeline needs at least " +
        std::to_string(begin + n));
    }
    SampleBatch b;
    b.points = data.points.middleCols(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(n));
    b.seed = data.seed;
    return b;
  };
  const BatchSource source = [&](std::uint32_t stream, std::size_t n) {
    if (stream == kCenterStream) {
      n_center = n;
      return slice(0, n);
    }
    if (stream == kInitStream) {
      n_init = n;
      return slice(n_center, n);
    }
    const std::size_t t = stream - kMainStreamBase;
    const std::size_t block = config.reuse ? 0 : t - 1;
    SampleBatch b = slice(n_center + n_init + block * n, n);
    b.stream = stream;
    return b;
  };
  const auto probe = [&]() { return slice(0, std::min(kProbeSize, n_center)); };
  std::size_t n_step = 0;
  const auto budget = [&](std::size_t main_steps) {
    n_step = config.n_step ? config.n_step
                           : default_stage_size(cov.dimension(), config.eps, config.eta);
    const std::size_t needed = n_center + n_init + (config.reuse ? 1 : main_steps) * n_step;
    if (needed > rows) {
      throw InvalidArgument(
        "data has " + std::to_string(rows) + " rows; pipeline needs " + std::to_string(needed) +
        " (set reuse to recycle one main-loop block)");
    }
    return needed;
  };
  return run_stages(config, cov, source, budget, probe, std::nullopt, std::nullopt);
}

double sign_resolved_error(const Vector & lambda, const Vector & mu, const CovarianceModel & cov)
{
  return std::min(cov.norm(lambda - mu), cov.norm(lambda + mu));
}

}  // namespace em2g
