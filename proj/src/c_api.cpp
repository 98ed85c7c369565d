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

#include "em2g/em2g.h"

#include <cmath>
#include <cstring>
#include <limits>
#include <new>
#include <string>
#include <utility>

#include "core/csv_io.hpp"
#include "core/error.hpp"
#include "core/experiments.hpp"
#include "core/finite_em.hpp"
#include "core/geometry.hpp"
#include "core/population_em.hpp"
#include "core/sampling.hpp"

struct em2g_covariance
{
  em2g::CovarianceModel model;
};

struct em2g_trajectory
{
  em2g::Trajectory traj;
  std::size_t d;
};

struct em2g_batch
{
  em2g::SampleBatch batch;
};

struct em2g_pipeline_result
{
  em2g::PipelineResult result;
};

struct em2g_ten_step_table
{
  em2g::TenStepTable table;
};

struct em2g_field_grid
{
  em2g::FieldGrid grid;
};

struct em2g_scaling_result
{
  em2g::ScalingResult result;
};

namespace
{

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

thread_local std::string g_last_error;
thread_local std::string g_last_stage;

em2g_status to_status(em2g::ErrorCode code)
{
  switch (code) {
    case em2g::ErrorCode::invalid_argument:
      return EM2G_ERR_INVALID_ARGUMENT;
    case em2g::ErrorCode::dimension:
      return EM2G_ERR_DIMENSION;
    case em2g::ErrorCode::not_spd:
      return EM2G_ERR_NOT_SPD;
    case em2g::ErrorCode::basin:
      return EM2G_ERR_BASIN;
    case em2g::ErrorCode::not_converged:
      return EM2G_ERR_NOT_CONVERGED;
    case em2g::ErrorCode::stage_failure:
      return EM2G_ERR_STAGE_FAILURE;
    case em2g::ErrorCode::precondition:
      return EM2G_ERR_PRECONDITION;
    case em2g::ErrorCode::io:
      return EM2G_ERR_IO;
  }
  return EM2G_ERR_INTERNAL;
}

struct NullPointer
{
  const char * what;
};

template <class T>
const T & deref(const T * p, const char * what)
{
  if (!p) {
    throw NullPointer{what};
  }
  return *p;
}

template <class T>
void check_out(T * p, const char * what)
{
  if (!p) {
    throw NullPointer{what};
  }
}

// Handle outputs are cleared up front so a failed call never leaves a stale pointer.
template <class T>
void check_out(T ** p, const char * what)
{
  if (!p) {
    throw NullPointer{what};
  }
  *p = nullptr;
}

em2g_status fail(em2g_status status, std::string message, std::string stage = {})
{
  g_last_error = std::move(message);
  g_last_stage = std::move(stage);
  return status;
}

template <class F>
em2g_status guarded(F && body) noexcept
{
  try {
    body();
    g_last_error.clear();
    g_last_stage.clear();
    return EM2G_OK;
  } catch (const NullPointer & e) {
    return fail(EM2G_ERR_NULL_POINTER, std::string("null pointer: ") + e.what);
  } catch (const em2g::StageError & e) {
    return fail(EM2G_ERR_STAGE_FAILURE, e.what(), e.stage());
  } catch (const em2g::Error & e) {
    return fail(to_status(e.code()), e.what());
  } catch (const std::bad_alloc &) {
    return fail(EM2G_ERR_INTERNAL, "out of memory");
  } catch (const std::exception & e) {
    return fail(EM2G_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(EM2G_ERR_INTERNAL, "unknown error");
  }
}

em2g::Vector read_vec(const double * p, std::size_t d, const char * what)
{
  if (!p) {
    throw NullPointer{what};
  }
  return Eigen::Map<const em2g::Vector>(p, static_cast<Eigen::Index>(d));
}

void write_vec(const em2g::Vector & v, double * out, const char * what)
{
  check_out(out, what);
  Eigen::Map<em2g::Vector>(out, v.size()) = v;
}

void write_matrix_row_major(const em2g::Matrix & m, double * out, const char * what)
{
  check_out(out, what);
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<RowMajor>(out, m.rows(), m.cols()) = m;
}

std::size_t dim(const em2g_covariance * cov)
{
  return static_cast<std::size_t>(deref(cov, "cov").model.dimension());
}

const char * c_path(const char * path)
{
  if (!path) {
    throw NullPointer{"path"};
  }
  return path;
}

em2g::PipelineConfig to_core(const em2g_pipeline_config & c)
{
  em2g::PipelineConfig out;
  out.eps = c.eps;
  out.eta = c.eta;
  out.n_center = c.n_center;
  out.n_init = c.n_init;
  out.n_step = c.n_step;
  out.bootstrap_cap = c.bootstrap_cap;
  out.main_steps = c.main_steps;
  out.blowup = c.blowup;
  out.reuse = c.reuse != 0;
  out.workers = c.workers;
  out.seed = c.seed;
  return out;
}

}  // namespace

extern "C" {

const char * em2g_version(void) { return "0.1.0"; }

const char * em2g_status_string(em2g_status status)
{
  switch (status) {
    case EM2G_OK:
      return "ok";
    case EM2G_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case EM2G_ERR_DIMENSION:
      return "dimension mismatch";
    case EM2G_ERR_NOT_SPD:
      return "covariance not symmetric positive definite";
    case EM2G_ERR_BASIN:
      return "iterate outside the certified basin";
    case EM2G_ERR_NOT_CONVERGED:
      return "not converged";
    case EM2G_ERR_STAGE_FAILURE:
      return "pipeline stage failure";
    case EM2G_ERR_PRECONDITION:
      return "precondition violated";
    case EM2G_ERR_IO:
      return "i/o error";
    case EM2G_ERR_NULL_POINTER:
      return "null pointer";
    case EM2G_ERR_INTERNAL:
      return "internal error";
  }
  return "unknown status";
}

const char * em2g_last_error(void) { return g_last_error.c_str(); }

const char * em2g_last_error_stage(void) { return g_last_stage.c_str(); }

// Geometry

em2g_status em2g_covariance_create(const double * sigma, size_t d, em2g_covariance ** out)
{
  return guarded([&] {
    check_out(out, "out");
    check_out(sigma, "sigma");
    em2g::require(d > 0, "dimension must be positive");
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const em2g::Matrix m = Eigen::Map<const RowMajor>(
      sigma, static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    *out = new em2g_covariance{em2g::CovarianceModel(m)};
  });
}

em2g_status em2g_covariance_identity(size_t d, em2g_covariance ** out)
{
  return guarded([&] {
    check_out(out, "out");
    em2g::require(d > 0, "dimension must be positive");
    *out = new em2g_covariance{em2g::CovarianceModel::identity(static_cast<Eigen::Index>(d))};
  });
}

em2g_status em2g_covariance_diagonal(const double * variances, size_t d, em2g_covariance ** out)
{
  return guarded([&] {
    check_out(out, "out");
    em2g::require(d > 0, "dimension must be positive");
    *out = new em2g_covariance{
      em2g::CovarianceModel::diagonal(read_vec(variances, d, "variances"))};
  });
}

void em2g_covariance_destroy(em2g_covariance * cov) { delete cov; }

size_t em2g_covariance_dimension(const em2g_covariance * cov)
{
  return cov ? static_cast<size_t>(cov->model.dimension()) : 0;
}

em2g_status em2g_covariance_matrix(const em2g_covariance * cov, double * out)
{
  return guarded([&] { write_matrix_row_major(deref(cov, "cov").model.sigma(), out, "out"); });
}

em2g_status em2g_mahalanobis_inner(
  const em2g_covariance * cov, const double * x, const double * y, double * out)
{
  return guarded([&] {
    check_out(out, "out");
    const std::size_t d = dim(cov);
    *out = cov->model.inner(read_vec(x, d, "x"), read_vec(y, d, "y"));
  });
}

em2g_status em2g_mahalanobis_norm(const em2g_covariance * cov, const double * x, double * out)
{
  return guarded([&] {
    check_out(out, "out");
    const std::size_t d = dim(cov);
    *out = cov->model.norm(read_vec(x, d, "x"));
  });
}

em2g_status em2g_whiten(const em2g_covariance * cov, const double * x, double * out)
{
  return guarded([&] {
    const std::size_t d = dim(cov);
    write_vec(cov->model.whiten(read_vec(x, d, "x")), out, "out");
  });
}

em2g_status em2g_unwhiten(const em2g_covariance * cov, const double * y, double * out)
{
  return guarded([&] {
    const std::size_t d = dim(cov);
    write_vec(cov->model.unwhiten(read_vec(y, d, "y")), out, "out");
  });
}

// Population EM

em2g_status em2g_update_1d(double lambda, double mu, double sigma, double * out)
{
  return guarded([&] {
    check_out(out, "out");
    *out = em2g::update_1d(lambda, mu, sigma);
  });
}

em2g_status em2g_tanh_expectation(double alpha, double beta, double sigma, double * out)
{
  return guarded([&] {
    check_out(out, "out");
    *out = em2g::tanh_expectation(alpha, beta, sigma);
  });
}

em2g_status em2g_tanh_derivative_moment(double alpha, double beta, double sigma, double * out)
{
  return guarded([&] {
    check_out(out, "out");
    *out = em2g::tanh_derivative_moment(alpha, beta, sigma);
  });
}

em2g_status em2g_folded_normal_mean(double mu, double sigma, double * out)
{
  return guarded([&] {
    check_out(out, "out");
    *out = em2g::folded_normal_mean(mu, sigma);
  });
}

em2g_status em2g_rate_1d(double lambda, double mu, double sigma, double * kappa)
{
  return guarded([&] {
    check_out(kappa, "kappa");
    *kappa = em2g::rate_1d(lambda, mu, sigma).kappa;
  });
}

em2g_status em2g_population_update(
  const em2g_covariance * cov, const double * lambda, const double * mu, double * out)
{
  return guarded([&] {
    const std::size_t d = dim(cov);
    write_vec(
      em2g::population_update(read_vec(lambda, d, "lambda"), read_vec(mu, d, "mu"), cov->model),
      out, "out");
  });
}

em2g_status em2g_population_update_at_infinity(
  const em2g_covariance * cov, const double * direction, const double * mu, double * out)
{
  return guarded([&] {
    const std::size_t d = dim(cov);
    write_vec(
      em2g::population_update_at_infinity(
        read_vec(direction, d, "direction"), read_vec(mu, d, "mu"), cov->model),
      out, "out");
  });
}

em2g_status em2g_shifted_population_update(
  const em2g_covariance * cov, const double * lambda, const double * mu, const double * delta,
  double * out)
{
  return guarded([&] {
    const std::size_t d = dim(cov);
    write_vec(
      em2g::shifted_population_update(
        read_vec(lambda, d, "lambda"), read_vec(mu, d, "mu"), read_vec(delta, d, "delta"),
        cov->model),
      out, "out");
  });
}

em2g_status em2g_rate(
  const em2g_covariance * cov, const double * lambda, const double * mu, double * kappa)
{
  return guarded([&] {
    check_out(kappa, "kappa");
    const std::size_t d = dim(cov);
    const em2g::MixtureSpec spec(read_vec(mu, d, "mu"), cov->model);
    *kappa = em2g::rate(em2g::Iterate::make(read_vec(lambda, d, "lambda"), spec), spec).kappa;
  });
}

void em2g_run_options_default(em2g_run_options * options)
{
  if (!options) {
    return;
  }
  const em2g::RunOptions defaults;
  options->max_steps = defaults.max_steps;
  options->tol = defaults.tol;
  options->quadrature_order = defaults.quad.order;
}

em2g_status em2g_run(
  const em2g_covariance * cov, const double * mu, const double * lambda0, int infinite,
  const em2g_run_options * options, em2g_trajectory ** out)
{
  return guarded([&] {
    check_out(out, "out");
    const std::size_t d = dim(cov);
    em2g::RunOptions opts;
    if (options) {
      opts.max_steps = options->max_steps;
      opts.tol = options->tol;
      opts.quad.order = options->quadrature_order;
    }
    const em2g::MixtureSpec spec(read_vec(mu, d, "mu"), cov->model);
    const em2g::Vector start = read_vec(lambda0, d, "lambda0");
    const em2g::Iterate it =
      infinite ? em2g::Iterate::at_infinity(start, spec) : em2g::Iterate::make(start, spec);
    *out = new em2g_trajectory{em2g::run(it, spec, opts), d};
  });
}

void em2g_trajectory_destroy(em2g_trajectory * traj) { delete traj; }

size_t em2g_trajectory_length(const em2g_trajectory * traj)
{
  return traj ? traj->traj.points.size() : 0;
}

size_t em2g_trajectory_dimension(const em2g_trajectory * traj) { return traj ? traj->d : 0; }

em2g_termination em2g_trajectory_termination(const em2g_trajectory * traj)
{
  if (!traj) {
    return EM2G_MAX_STEPS;
  }
  switch (traj->traj.termination) {
    case em2g::Termination::converged:
      return EM2G_CONVERGED;
    case em2g::Termination::max_steps:
      return EM2G_MAX_STEPS;
    case em2g::Termination::fixed_at_zero:
      return EM2G_FIXED_AT_ZERO;
  }
  return EM2G_MAX_STEPS;
}

int em2g_trajectory_target_sign(const em2g_trajectory * traj)
{
  return traj ? traj->traj.target_sign : 0;
}

em2g_status em2g_trajectory_point(
  const em2g_trajectory * traj, size_t index, double * lambda, double * err, double * kappa,
  int * infinite)
{
  return guarded([&] {
    const auto & t = deref(traj, "traj").traj;
    em2g::require(index < t.points.size(), "trajectory index out of range");
    const auto & p = t.points[index];
    if (lambda) {
      write_vec(p.iterate.lambda, lambda, "lambda");
    }
    if (err) {
      *err = p.error;
    }
    if (kappa) {
      *kappa = p.certificate ? p.certificate->kappa : kNaN;
    }
    if (infinite) {
      *infinite = p.iterate.infinite ? 1 : 0;
    }
  });
}

em2g_status em2g_trajectory_write_csv(const em2g_trajectory * traj, const char * path)
{
  return guarded(
    [&] { em2g::write_trajectory_csv(c_path(path), deref(traj, "traj").traj); });
}

// Sampling

em2g_status em2g_batch_draw(
  const em2g_covariance * cov, const double * mu1, const double * mu2, size_t n, uint64_t seed,
  uint32_t stream, int workers, em2g_batch ** out)
{
  return guarded([&] {
    check_out(out, "out");
    const std::size_t d = dim(cov);
    *out = new em2g_batch{em2g::draw(
      n, read_vec(mu1, d, "mu1"), read_vec(mu2, d, "mu2"), cov->model, seed, stream, workers)};
  });
}

em2g_status em2g_batch_from_points(const double * points, size_t d, size_t n, em2g_batch ** out)
{
  return guarded([&] {
    check_out(out, "out");
    check_out(points, "points");
    em2g::require(d > 0 && n > 0, "batch needs d > 0 and n > 0");
    em2g::SampleBatch b;
    b.points = Eigen::Map<const em2g::Matrix>(
      points, static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n));
    *out = new em2g_batch{std::move(b)};
  });
}

em2g_status em2g_batch_read_csv(const char * path, em2g_batch ** out)
{
  return guarded([&] {
    check_out(out, "out");
    *out = new em2g_batch{em2g::read_batch_csv(c_path(path))};
  });
}

em2g_status em2g_batch_write_csv(const em2g_batch * batch, const char * path)
{
  return guarded([&] { em2g::write_batch_csv(c_path(path), deref(batch, "batch").batch); });
}

em2g_status em2g_batch_stabilize(const em2g_batch * batch, const double * c, em2g_batch ** out)
{
  return guarded([&] {
    check_out(out, "out");
    const auto & b = deref(batch, "batch").batch;
    *out = new em2g_batch{
      em2g::stabilize(b, read_vec(c, static_cast<std::size_t>(b.dimension()), "c"))};
  });
}

void em2g_batch_destroy(em2g_batch * batch) { delete batch; }

size_t em2g_batch_size(const em2g_batch * batch)
{
  return batch ? static_cast<size_t>(batch->batch.size()) : 0;
}

size_t em2g_batch_dimension(const em2g_batch * batch)
{
  return batch ? static_cast<size_t>(batch->batch.dimension()) : 0;
}

int em2g_batch_is_stabilized(const em2g_batch * batch)
{
  return batch && batch->batch.stabilized ? 1 : 0;
}

em2g_status em2g_batch_points(const em2g_batch * batch, double * out)
{
  return guarded([&] {
    const auto & p = deref(batch, "batch").batch.points;
    check_out(out, "out");
    Eigen::Map<em2g::Matrix>(out, p.rows(), p.cols()) = p;
  });
}

em2g_status em2g_mc_update(
  const em2g_covariance * cov, const double * lambda, const double * mu1, const double * mu2,
  size_t n, uint64_t seed, int workers, double * estimate, double * standard_error)
{
  return guarded([&] {
    check_out(estimate, "estimate");
    const std::size_t d = dim(cov);
    const auto r = em2g::mc_update(
      read_vec(lambda, d, "lambda"), read_vec(mu1, d, "mu1"), read_vec(mu2, d, "mu2"),
      cov->model, n, seed, 0, workers);
    write_vec(r.estimate, estimate, "estimate");
    if (standard_error) {
      write_vec(r.standard_error, standard_error, "standard_error");
    }
  });
}

// Finite-sample pipeline

em2g_status em2g_quartile(const double * values, size_t n, em2g_quartile_kind which, double * out)
{
  return guarded([&] {
    check_out(out, "out");
    check_out(values, "values");
    *out = em2g::quartile(
      std::vector<double>(values, values + n),
      which == EM2G_QUARTILE_FIRST ? em2g::QuartileKind::first : em2g::QuartileKind::third);
  });
}

em2g_status em2g_estimate_center(const em2g_covariance * cov, const em2g_batch * batch, double * c)
{
  return guarded([&] {
    write_vec(
      em2g::estimate_center(deref(batch, "batch").batch, deref(cov, "cov").model).c, c, "c");
  });
}

em2g_status em2g_sample_update(
  const em2g_covariance * cov, const em2g_batch * batch, const double * lambda, int workers,
  double * out)
{
  return guarded([&] {
    const std::size_t d = dim(cov);
    write_vec(
      em2g::sample_update(
        read_vec(lambda, d, "lambda"), deref(batch, "batch").batch, cov->model, workers),
      out, "out");
  });
}

em2g_status em2g_empirical_covariance(
  const em2g_covariance * cov, const em2g_batch * batch, int workers, double * out)
{
  return guarded([&] {
    write_matrix_row_major(
      em2g::empirical_covariance(deref(batch, "batch").batch, deref(cov, "cov").model, workers),
      out, "out");
  });
}

em2g_status em2g_bootstrap_init(
  const em2g_covariance * cov, const em2g_batch * batch, double eps, size_t cap, uint64_t seed,
  int workers, double * direction, double * magnitude, size_t * iterations)
{
  return guarded([&] {
    check_out(direction, "direction");
    const auto state = em2g::bootstrap_init(
      deref(batch, "batch").batch, deref(cov, "cov").model, eps, cap, seed, workers);
    write_vec(state.direction, direction, "direction");
    if (magnitude) {
      *magnitude = state.magnitude;
    }
    if (iterations) {
      *iterations = state.iterations_done;
    }
  });
}

void em2g_pipeline_config_default(em2g_pipeline_config * config)
{
  if (!config) {
    return;
  }
  const em2g::PipelineConfig d;
  config->eps = d.eps;
  config->eta = d.eta;
  config->n_center = d.n_center;
  config->n_init = d.n_init;
  config->n_step = d.n_step;
  config->bootstrap_cap = d.bootstrap_cap;
  config->main_steps = d.main_steps;
  config->blowup = d.blowup;
  config->reuse = d.reuse ? 1 : 0;
  config->workers = d.workers;
  config->seed = d.seed;
}

em2g_status em2g_pipeline_run_synthetic(
  const em2g_covariance * cov, const double * mu1, const double * mu2,
  const em2g_pipeline_config * config, em2g_pipeline_result ** out)
{
  return guarded([&] {
    check_out(out, "out");
    const std::size_t d = dim(cov);
    *out = new em2g_pipeline_result{em2g::run_pipeline(
      to_core(deref(config, "config")), read_vec(mu1, d, "mu1"), read_vec(mu2, d, "mu2"),
      cov->model)};
  });
}

em2g_status em2g_pipeline_run_batch(
  const em2g_covariance * cov, const em2g_batch * data, const em2g_pipeline_config * config,
  em2g_pipeline_result ** out)
{
  return guarded([&] {
    check_out(out, "out");
    *out = new em2g_pipeline_result{em2g::run_pipeline(
      to_core(deref(config, "config")), deref(data, "data").batch, deref(cov, "cov").model)};
  });
}

void em2g_pipeline_result_destroy(em2g_pipeline_result * result) { delete result; }

size_t em2g_pipeline_dimension(const em2g_pipeline_result * result)
{
  return result ? static_cast<size_t>(result->result.lambda_star.size()) : 0;
}

em2g_status em2g_pipeline_lambda(const em2g_pipeline_result * result, double * out)
{
  return guarded([&] { write_vec(deref(result, "result").result.lambda_star, out, "out"); });
}

em2g_status em2g_pipeline_center(const em2g_pipeline_result * result, double * out)
{
  return guarded([&] { write_vec(deref(result, "result").result.center.c, out, "out"); });
}

em2g_status em2g_pipeline_means(const em2g_pipeline_result * result, double * plus, double * minus)
{
  return guarded([&] {
    const auto & r = deref(result, "result").result;
    write_vec(r.mean_plus, plus, "plus");
    write_vec(r.mean_minus, minus, "minus");
  });
}

int em2g_pipeline_is_synthetic(const em2g_pipeline_result * result)
{
  return result && result->result.synthetic ? 1 : 0;
}

double em2g_pipeline_error(const em2g_pipeline_result * result)
{
  return result ? result->result.error.value_or(kNaN) : kNaN;
}

double em2g_pipeline_center_error(const em2g_pipeline_result * result)
{
  return result ? result->result.center_error.value_or(kNaN) : kNaN;
}

double em2g_pipeline_init_alignment(const em2g_pipeline_result * result)
{
  return result ? result->result.init_alignment.value_or(kNaN) : kNaN;
}

double em2g_pipeline_snr_hat(const em2g_pipeline_result * result)
{
  return result ? result->result.snr_hat : kNaN;
}

double em2g_pipeline_blowup(const em2g_pipeline_result * result)
{
  return result ? result->result.blowup : kNaN;
}

size_t em2g_pipeline_main_steps(const em2g_pipeline_result * result)
{
  return result ? result->result.main_steps : 0;
}

size_t em2g_pipeline_bootstrap_iterations(const em2g_pipeline_result * result)
{
  return result ? result->result.bootstrap.iterations_done : 0;
}

void em2g_pipeline_sizes(
  const em2g_pipeline_result * result, size_t * n_center, size_t * n_init, size_t * n_step)
{
  if (!result) {
    return;
  }
  if (n_center) {
    *n_center = result->result.n_center;
  }
  if (n_init) {
    *n_init = result->result.n_init;
  }
  if (n_step) {
    *n_step = result->result.n_step;
  }
}

em2g_status em2g_pipeline_write_csv(const em2g_pipeline_result * result, const char * path)
{
  return guarded(
    [&] { em2g::write_pipeline_csv(c_path(path), deref(result, "result").result); });
}

// Experiments

em2g_status em2g_ten_step_table_create(double snr, double target, em2g_ten_step_table ** out)
{
  return guarded([&] {
    check_out(out, "out");
    *out = new em2g_ten_step_table{em2g::ten_step_table(snr, target)};
  });
}

void em2g_ten_step_table_destroy(em2g_ten_step_table * table) { delete table; }

size_t em2g_ten_step_table_rows(const em2g_ten_step_table * table)
{
  return table ? table->table.rows.size() : 0;
}

long em2g_ten_step_table_steps_needed(const em2g_ten_step_table * table)
{
  if (!table || !table->table.steps_needed) {
    return -1;
  }
  return static_cast<long>(*table->table.steps_needed);
}

em2g_status em2g_ten_step_table_row(
  const em2g_ten_step_table * table, size_t index, double * lambda, double * relative_error,
  double * kappa)
{
  return guarded([&] {
    const auto & rows = deref(table, "table").table.rows;
    em2g::require(index < rows.size(), "row index out of range");
    if (lambda) {
      *lambda = rows[index].lambda;
    }
    if (relative_error) {
      *relative_error = rows[index].relative_error;
    }
    if (kappa) {
      *kappa = rows[index].kappa;
    }
  });
}

em2g_status em2g_ten_step_table_write_csv(const em2g_ten_step_table * table, const char * path)
{
  return guarded([&] { em2g::write_ten_step_csv(c_path(path), deref(table, "table").table); });
}

em2g_status em2g_field_grid_create(
  const em2g_covariance * cov, const double * mu, double lo, double hi, size_t resolution,
  int workers, em2g_field_grid ** out)
{
  return guarded([&] {
    check_out(out, "out");
    const std::size_t d = dim(cov);
    const em2g::MixtureSpec spec(read_vec(mu, d, "mu"), cov->model);
    *out = new em2g_field_grid{em2g::field_grid(spec, lo, hi, resolution, workers)};
  });
}

void em2g_field_grid_destroy(em2g_field_grid * grid) { delete grid; }

size_t em2g_field_grid_cells(const em2g_field_grid * grid)
{
  return grid ? grid->grid.cells.size() : 0;
}

em2g_status em2g_field_grid_cell(
  const em2g_field_grid * grid, size_t index, double * lambda_in, double * lambda_out,
  em2g_basin * basin, double * decay, double * kappa)
{
  return guarded([&] {
    const auto & cells = deref(grid, "grid").grid.cells;
    em2g::require(index < cells.size(), "cell index out of range");
    const auto & c = cells[index];
    if (lambda_in) {
      write_vec(c.lambda_in, lambda_in, "lambda_in");
    }
    if (lambda_out) {
      write_vec(c.lambda_out, lambda_out, "lambda_out");
    }
    if (basin) {
      *basin = c.basin == em2g::Basin::plus
                 ? EM2G_BASIN_PLUS
                 : (c.basin == em2g::Basin::minus ? EM2G_BASIN_MINUS : EM2G_BASIN_EQUIDISTANT);
    }
    if (decay) {
      *decay = c.decay;
    }
    if (kappa) {
      *kappa = c.kappa;
    }
  });
}

em2g_status em2g_field_grid_write_csv(const em2g_field_grid * grid, const char * path)
{
  return guarded([&] { em2g::write_field_csv(c_path(path), deref(grid, "grid").grid); });
}

void em2g_scaling_config_default(em2g_scaling_config * config)
{
  if (!config) {
    return;
  }
  const em2g::ScalingConfig d;
  config->d = static_cast<size_t>(d.d);
  config->snr = d.snr;
  config->eps = d.eps;
  config->eta = d.eta;
  config->trials = d.trials;
  config->seed = d.seed;
  config->workers = d.workers;
}

em2g_status em2g_scaling_study(
  const em2g_scaling_config * config, const size_t * n_values, size_t n_count,
  em2g_scaling_result ** out)
{
  return guarded([&] {
    check_out(out, "out");
    check_out(n_values, "n_values");
    const auto & c = deref(config, "config");
    em2g::ScalingConfig sc;
    sc.d = static_cast<Eigen::Index>(c.d);
    sc.snr = c.snr;
    sc.eps = c.eps;
    sc.eta = c.eta;
    sc.trials = c.trials;
    sc.seed = c.seed;
    sc.workers = c.workers;
    sc.n_values.assign(n_values, n_values + n_count);
    *out = new em2g_scaling_result{em2g::scaling_study(sc)};
  });
}

void em2g_scaling_result_destroy(em2g_scaling_result * result) { delete result; }

double em2g_scaling_slope(const em2g_scaling_result * result)
{
  return result ? result->result.slope : kNaN;
}

double em2g_scaling_intercept(const em2g_scaling_result * result)
{
  return result ? result->result.intercept : kNaN;
}

size_t em2g_scaling_points(const em2g_scaling_result * result)
{
  return result ? result->result.points.size() : 0;
}

em2g_status em2g_scaling_point(
  const em2g_scaling_result * result, size_t index, size_t * n, double * median_error,
  size_t * failures)
{
  return guarded([&] {
    const auto & pts = deref(result, "result").result.points;
    em2g::require(index < pts.size(), "point index out of range");
    if (n) {
      *n = pts[index].n;
    }
    if (median_error) {
      *median_error = pts[index].median_error;
    }
    if (failures) {
      *failures = pts[index].failures;
    }
  });
}

em2g_status em2g_scaling_write_csv(const em2g_scaling_result * result, const char * path)
{
  return guarded([&] { em2g::write_scaling_csv(c_path(path), deref(result, "result").result); });
}

// Output helpers

em2g_status em2g_write_manifest(
  const char * path, const char * const * keys, const char * const * values, size_t count)
{
  return guarded([&] {
    em2g::KeyValues entries;
    if (count > 0) {
      check_out(keys, "keys");
      check_out(values, "values");
    }
    for (size_t i = 0; i < count; ++i) {
      check_out(keys[i], "keys[i]");
      check_out(values[i], "values[i]");
      entries.emplace_back(keys[i], values[i]);
    }
    em2g::write_key_values(c_path(path), entries);
  });
}

em2g_status em2g_format_double(double x, char * buffer, size_t size)
{
  return guarded([&] {
    check_out(buffer, "buffer");
    const std::string s = em2g::format_double(x);
    em2g::require(size > s.size(), "buffer too small");
    std::memcpy(buffer, s.c_str(), s.size() + 1);
  });
}

}  // extern "C"
