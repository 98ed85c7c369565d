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

#include "core/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "core/error.hpp"
#include "core/finite_em.hpp"
#include "core/parallel.hpp"
#include "core/random.hpp"

namespace em2g
{

namespace
{

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kTenStepLimit = 100000;

}  // namespace

TenStepTable ten_step_table(double snr, double target, const QuadratureConfig & quad)
{
  require(snr > 0.0 && std::isfinite(snr), "snr must be positive");
  require(target > 0.0, "target must be positive");
  const MixtureSpec spec(Vector::Constant(1, snr), CovarianceModel::identity(1));
  TenStepTable table;
  table.snr = snr;
  table.target = target;

  Iterate it = Iterate::at_infinity(Vector::Ones(1), spec);
  for (std::size_t t = 0;; ++t) {
    TenStepRow row;
    row.t = t;
    row.lambda = it.infinite ? std::numeric_limits<double>::infinity() : it.lambda(0);
    row.relative_error =
      it.infinite ? std::numeric_limits<double>::infinity() : std::abs(it.lambda(0) - snr);
    row.kappa = rate(it, spec).kappa;
    table.rows.push_back(row);
    if (!table.steps_needed && row.relative_error <= target) {
      table.steps_needed = t;
    }
    if ((table.steps_needed && t >= std::max<std::size_t>(10, *table.steps_needed)) ||
        t >= kTenStepLimit) {
      break;
    }
    it = update(it, spec, quad);
  }
  return table;
}

const char * to_string(Basin b)
{
  switch (b) {
    case Basin::plus:
      return "plus";
    case Basin::minus:
      return "minus";
    case Basin::equidistant:
      return "equidistant";
  }
  return "unknown";
}

FieldGrid field_grid(
  const MixtureSpec & spec, double lo, double hi, std::size_t resolution, int workers,
  const QuadratureConfig & quad)
{
  require_dimension(2, spec.dimension(), "field grid mixture");
  require(resolution >= 2, "grid resolution must be at least 2");
  require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, "grid bounds must satisfy lo < hi");
  validate(quad);

  FieldGrid grid;
  grid.lo = lo;
  grid.hi = hi;
  grid.resolution = resolution;
  grid.mu = spec.mu();
  grid.sigma = spec.cov().sigma();
  grid.cells.resize(resolution * resolution);
  const double span = hi - lo;
  const auto denom = static_cast<double>(resolution - 1);
  const auto coord = [&](std::size_t k) { return lo + span * static_cast<double>(k) / denom; };

  parallel_for(resolution, workers, [&](std::size_t i) {
    for (std::size_t j = 0; j < resolution; ++j) {
      FieldCell & cell = grid.cells[i * resolution + j];
      cell.i = i;
      cell.j = j;
      cell.lambda_in = Vector(2);
      cell.lambda_in << coord(i), coord(j);
      cell.lambda_out = population_update(cell.lambda_in, spec.mu(), spec.cov(), quad);

      const double align = spec.cov().inner(cell.lambda_in, spec.mu());
      const int sign = basin_sign(align, spec.cov().norm(cell.lambda_in) * spec.snr());
      cell.basin = sign > 0 ? Basin::plus : (sign < 0 ? Basin::minus : Basin::equidistant);
      const Vector fixed = static_cast<double>(sign) * spec.mu();
      const double before = spec.cov().norm(cell.lambda_in - fixed);
      cell.decay = before > 0.0 ? spec.cov().norm(cell.lambda_out - fixed) / before : kNaN;
      if (sign == 0) {
        cell.kappa = kNaN;
      } else {
        const Iterate reflected =
          Iterate::make(static_cast<double>(sign) * cell.lambda_in, spec);
        cell.kappa = rate(reflected, spec).kappa;
      }
    }
  });
  return grid;
}

void validate(const ScalingConfig & config)
{
  require(config.d >= 1, "scaling: d must be at least 1");
  require(config.snr > 0.0 && std::isfinite(config.snr), "scaling: snr must be positive");
  require(config.eps > 0.0, "scaling: eps must be positive");
  require(config.eta > 0.0 && config.eta < 1.0, "scaling: eta must lie in (0, 1)");
  require(config.trials >= 20, "scaling: trials must be at least 20");
  require(config.n_values.size() >= 3, "scaling: need at least 3 sample sizes");
  for (const std::size_t n : config.n_values) {
    require(n >= 8, "scaling: every sample size must be at least 8");
  }
  const auto [lo, hi] = std::minmax_element(config.n_values.begin(), config.n_values.end());
  require(
    static_cast<double>(*hi) >= 10.0 * static_cast<double>(*lo),
    "scaling: sample sizes must span at least one decade");
  require(config.workers >= 1, "scaling: workers must be at least 1");
}

LineFit fit_line(const std::vector<double> & x, const std::vector<double> & y)
{
  require(x.size() == y.size() && x.size() >= 2, "fit needs at least two points");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 1e-12 * std::max(1.0, mx * mx))) {
    throw InvalidArgument("fit rejected: degenerate abscissa");
  }
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

double median(std::vector<double> values)
{
  require(!values.empty(), "median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

std::uint64_t scaling_trial_seed(std::uint64_t master, std::size_t n_index, std::size_t trial)
{
  return mix_seed(mix_seed(master, n_index), trial);
}

ScalingResult scaling_study(const ScalingConfig & config)
{
  validate(config);
  Vector mu1 = Vector::Zero(config.d);
  mu1(0) = config.snr;
  const Vector mu2 = -mu1;
  const CovarianceModel cov = CovarianceModel::identity(config.d);

  ScalingResult result;
  const std::size_t n_sizes = config.n_values.size();
  result.trials.resize(n_sizes * config.trials);
  parallel_for(result.trials.size(), config.workers, [&](std::size_t task) {
    const std::size_t k = task / config.trials;
    ScalingTrial & trial = result.trials[task];
    trial.n = config.n_values[k];
    trial.trial = task % config.trials;
    trial.seed = scaling_trial_seed(config.seed, k, trial.trial);
    PipelineConfig pc;
    pc.eps = config.eps;
    pc.eta = config.eta;
    pc.n_center = trial.n;
    pc.n_init = trial.n;
    pc.n_step = trial.n;
    pc.seed = trial.seed;
    try {
      trial.error = *run_pipeline(pc, mu1, mu2, cov).error;
    } catch (const StageError & e) {
      trial.failed = true;
      trial.error = kNaN;
      trial.failure = e.what();
    } catch (const Error & e) {
      if (e.code() != ErrorCode::precondition) {
        throw;
      }
      trial.failed = true;
      trial.error = kNaN;
      trial.failure = e.what();
    }
  });

  std::vector<double> log_n;
  std::vector<double> log_median;
  for (std::size_t k = 0; k < n_sizes; ++k) {
    ScalingPoint p;
    p.n = config.n_values[k];
    std::vector<double> errors;
    for (std::size_t t = 0; t < config.trials; ++t) {
      const ScalingTrial & trial = result.trials[k * config.trials + t];
      if (trial.failed) {
        ++p.failures;
      } else {
        errors.push_back(trial.error);
      }
    }
    p.successes = errors.size();
    if (10 * p.failures >= config.trials) {
      throw Error(
        ErrorCode::stage_failure, "scaling: " + std::to_string(p.failures) + " of " +
                                    std::to_string(config.trials) + " trials failed at n = " +
                                    std::to_string(p.n));
    }
    p.median_error = median(errors);
    log_n.push_back(std::log(static_cast<double>(p.n)));
    log_median.push_back(std::log(p.median_error));
    result.points.push_back(p);
  }
  const LineFit fit = fit_line(log_n, log_median);
  result.slope = fit.slope;
  result.intercept = fit.intercept;
  for (std::size_t k = 0; k < n_sizes; ++k) {
    result.points[k].residual = log_median[k] - (fit.intercept + fit.slope * log_n[k]);
  }
  return result;
}

}  // namespace em2g
