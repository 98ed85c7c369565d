/*
 * Copyright 2026 The em2g Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * em2g: EM for the balanced two-component Gaussian mixture
 *   0.5 N(mu, Sigma) + 0.5 N(-mu, Sigma)   (known, shared Sigma)
 * and its finite-sample pipeline for 0.5 N(mu1, Sigma) + 0.5 N(mu2, Sigma).
 *
 * Conventions
 *   - Every function that can fail returns em2g_status. On failure the
 *     message is available from em2g_last_error() on the calling thread.
 *   - Vectors are plain double arrays whose length is the dimension of the
 *     covariance handle passed alongside. Matrices are row-major d x d.
 *   - Handles are opaque, owned by the caller and released with the matching
 *     *_destroy function (NULL is accepted). Handles are immutable after
 *     creation, so concurrent reads from several threads are safe.
 *   - A handle output (T **out) is set to NULL before any work, so it is
 *     NULL whenever the call fails.
 */

#ifndef EM2G_EM2G_H_
#define EM2G_EM2G_H_

#include <stddef.h>
#include <stdint.h>

#if defined(EM2G_BUILDING_LIBRARY)
#define EM2G_API __attribute__((visibility("default")))
#else
#define EM2G_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum em2g_status
{
  EM2G_OK = 0,
  EM2G_ERR_INVALID_ARGUMENT = 1,
  EM2G_ERR_DIMENSION = 2,
  EM2G_ERR_NOT_SPD = 3,
  EM2G_ERR_BASIN = 4,
  EM2G_ERR_NOT_CONVERGED = 5,
  EM2G_ERR_STAGE_FAILURE = 6,
  EM2G_ERR_PRECONDITION = 7,
  EM2G_ERR_IO = 8,
  EM2G_ERR_NULL_POINTER = 9,
  EM2G_ERR_INTERNAL = 10
} em2g_status;

EM2G_API const char * em2g_version(void);
EM2G_API const char * em2g_status_string(em2g_status status);
/* Message of the last failed call on this thread; "" after a success. */
EM2G_API const char * em2g_last_error(void);
/* Pipeline stage of the last EM2G_ERR_STAGE_FAILURE on this thread
 * ("centering", "initialization", "main"), or "". */
EM2G_API const char * em2g_last_error_stage(void);

/* ------------------------------------------------------------------ */
/* Geometry                                                            */
/* ------------------------------------------------------------------ */

typedef struct em2g_covariance em2g_covariance;

/* Validates symmetry and positive definiteness (EM2G_ERR_NOT_SPD). */
EM2G_API em2g_status em2g_covariance_create(
  const double * sigma, size_t d, em2g_covariance ** out);
EM2G_API em2g_status em2g_covariance_identity(size_t d, em2g_covariance ** out);
EM2G_API em2g_status em2g_covariance_diagonal(
  const double * variances, size_t d, em2g_covariance ** out);
EM2G_API void em2g_covariance_destroy(em2g_covariance * cov);
EM2G_API size_t em2g_covariance_dimension(const em2g_covariance * cov);
/* Copies Sigma (row-major) into out. */
EM2G_API em2g_status em2g_covariance_matrix(const em2g_covariance * cov, double * out);

EM2G_API em2g_status em2g_mahalanobis_inner(
  const em2g_covariance * cov, const double * x, const double * y, double * out);
EM2G_API em2g_status em2g_mahalanobis_norm(
  const em2g_covariance * cov, const double * x, double * out);
EM2G_API em2g_status em2g_whiten(const em2g_covariance * cov, const double * x, double * out);
EM2G_API em2g_status em2g_unwhiten(const em2g_covariance * cov, const double * y, double * out);

/* ------------------------------------------------------------------ */
/* Population EM                                                       */
/* ------------------------------------------------------------------ */

/* sigma * E_{z ~ N(mu/sigma, 1)}[tanh(lambda z / sigma) z]. */
EM2G_API em2g_status em2g_update_1d(double lambda, double mu, double sigma, double * out);
/* E_{z ~ N(alpha/sigma, 1)}[tanh(beta z / sigma)]. */
EM2G_API em2g_status em2g_tanh_expectation(double alpha, double beta, double sigma, double * out);
/* sigma * E_{z ~ N(alpha/sigma, 1)}[z / cosh^2(beta z / sigma)]. */
EM2G_API em2g_status em2g_tanh_derivative_moment(
  double alpha, double beta, double sigma, double * out);
EM2G_API em2g_status em2g_folded_normal_mean(double mu, double sigma, double * out);
/* kappa = exp(-min(lambda, mu)^2 / (2 sigma^2)); needs lambda, mu > 0. */
EM2G_API em2g_status em2g_rate_1d(double lambda, double mu, double sigma, double * kappa);

EM2G_API em2g_status em2g_population_update(
  const em2g_covariance * cov, const double * lambda, const double * mu, double * out);
/* Update from the point at infinity in direction `direction`. */
EM2G_API em2g_status em2g_population_update_at_infinity(
  const em2g_covariance * cov, const double * direction, const double * mu, double * out);
/* 0.5 (M under +mu+delta) + 0.5 (M under -mu+delta). */
EM2G_API em2g_status em2g_shifted_population_update(
  const em2g_covariance * cov, const double * lambda, const double * mu, const double * delta,
  double * out);
/* Certificate exp(-min(<l,l>, <mu,l>)^2 / (2 <l,l>)); needs <lambda, mu>_Sigma > 0. */
EM2G_API em2g_status em2g_rate(
  const em2g_covariance * cov, const double * lambda, const double * mu, double * kappa);

typedef struct em2g_run_options
{
  size_t max_steps;
  double tol;
  int quadrature_order;
} em2g_run_options;

EM2G_API void em2g_run_options_default(em2g_run_options * options);

typedef enum em2g_termination
{
  EM2G_CONVERGED = 0,
  EM2G_MAX_STEPS = 1,
  EM2G_FIXED_AT_ZERO = 2
} em2g_termination;

typedef struct em2g_trajectory em2g_trajectory;

/* Iterates lambda <- M(lambda) from lambda0. With `infinite` != 0, lambda0 is
 * a direction and the run starts at the point at infinity along it. */
EM2G_API em2g_status em2g_run(
  const em2g_covariance * cov, const double * mu, const double * lambda0, int infinite,
  const em2g_run_options * options, em2g_trajectory ** out);
EM2G_API void em2g_trajectory_destroy(em2g_trajectory * traj);
EM2G_API size_t em2g_trajectory_length(const em2g_trajectory * traj);
EM2G_API size_t em2g_trajectory_dimension(const em2g_trajectory * traj);
EM2G_API em2g_termination em2g_trajectory_termination(const em2g_trajectory * traj);
/* +1, -1, or 0 for the equidistant branch. */
EM2G_API int em2g_trajectory_target_sign(const em2g_trajectory * traj);
/* lambda may be NULL. kappa is NaN when no certificate applies. For an
 * infinite iterate lambda receives the unit direction and err is +inf. */
EM2G_API em2g_status em2g_trajectory_point(
  const em2g_trajectory * traj, size_t index, double * lambda, double * err, double * kappa,
  int * infinite);
EM2G_API em2g_status em2g_trajectory_write_csv(const em2g_trajectory * traj, const char * path);

/* ------------------------------------------------------------------ */
/* Sampling                                                            */
/* ------------------------------------------------------------------ */

typedef struct em2g_batch em2g_batch;

/* n draws from 0.5 N(mu1, Sigma) + 0.5 N(mu2, Sigma). Point i depends only on
 * (seed, stream, i). */
EM2G_API em2g_status em2g_batch_draw(
  const em2g_covariance * cov, const double * mu1, const double * mu2, size_t n, uint64_t seed,
  uint32_t stream, int workers, em2g_batch ** out);
/* Copies n column-major points of dimension d. */
EM2G_API em2g_status em2g_batch_from_points(
  const double * points, size_t d, size_t n, em2g_batch ** out);
EM2G_API em2g_status em2g_batch_read_csv(const char * path, em2g_batch ** out);
EM2G_API em2g_status em2g_batch_write_csv(const em2g_batch * batch, const char * path);
/* Pairs every x - c with -(x - c). */
EM2G_API em2g_status em2g_batch_stabilize(
  const em2g_batch * batch, const double * c, em2g_batch ** out);
EM2G_API void em2g_batch_destroy(em2g_batch * batch);
EM2G_API size_t em2g_batch_size(const em2g_batch * batch);
EM2G_API size_t em2g_batch_dimension(const em2g_batch * batch);
EM2G_API int em2g_batch_is_stabilized(const em2g_batch * batch);
/* Copies the points column-major (d x n) into out. */
EM2G_API em2g_status em2g_batch_points(const em2g_batch * batch, double * out);

/* Monte Carlo estimate of the update under the raw mixture, with
 * per-coordinate standard errors (standard_error may be NULL). n >= 1000. */
EM2G_API em2g_status em2g_mc_update(
  const em2g_covariance * cov, const double * lambda, const double * mu1, const double * mu2,
  size_t n, uint64_t seed, int workers, double * estimate, double * standard_error);

/* ------------------------------------------------------------------ */
/* Finite-sample pipeline                                              */
/* ------------------------------------------------------------------ */

typedef enum em2g_quartile_kind
{
  EM2G_QUARTILE_FIRST = 0,
  EM2G_QUARTILE_THIRD = 1
} em2g_quartile_kind;

EM2G_API em2g_status em2g_quartile(
  const double * values, size_t n, em2g_quartile_kind which, double * out);
EM2G_API em2g_status em2g_estimate_center(
  const em2g_covariance * cov, const em2g_batch * batch, double * c);
EM2G_API em2g_status em2g_sample_update(
  const em2g_covariance * cov, const em2g_batch * batch, const double * lambda, int workers,
  double * out);
/* Whitened second moment of a stabilized batch, row-major d x d. */
EM2G_API em2g_status em2g_empirical_covariance(
  const em2g_covariance * cov, const em2g_batch * batch, int workers, double * out);
/* cap = 0 selects the default cap. magnitude and iterations may be NULL. */
EM2G_API em2g_status em2g_bootstrap_init(
  const em2g_covariance * cov, const em2g_batch * batch, double eps, size_t cap, uint64_t seed,
  int workers, double * direction, double * magnitude, size_t * iterations);

typedef struct em2g_pipeline_config
{
  double eps;
  double eta;
  size_t n_center; /* 0 = default */
  size_t n_init;   /* 0 = default */
  size_t n_step;   /* 0 = default */
  size_t bootstrap_cap; /* 0 = default */
  size_t main_steps;    /* 0 = default */
  double blowup;        /* 0 = probe-based default */
  int reuse;
  int workers;
  uint64_t seed;
} em2g_pipeline_config;

EM2G_API void em2g_pipeline_config_default(em2g_pipeline_config * config);

typedef struct em2g_pipeline_result em2g_pipeline_result;

EM2G_API em2g_status em2g_pipeline_run_synthetic(
  const em2g_covariance * cov, const double * mu1, const double * mu2,
  const em2g_pipeline_config * config, em2g_pipeline_result ** out);
EM2G_API em2g_status em2g_pipeline_run_batch(
  const em2g_covariance * cov, const em2g_batch * data, const em2g_pipeline_config * config,
  em2g_pipeline_result ** out);
EM2G_API void em2g_pipeline_result_destroy(em2g_pipeline_result * result);
EM2G_API size_t em2g_pipeline_dimension(const em2g_pipeline_result * result);
EM2G_API em2g_status em2g_pipeline_lambda(const em2g_pipeline_result * result, double * out);
EM2G_API em2g_status em2g_pipeline_center(const em2g_pipeline_result * result, double * out);
/* c + lambda* and c - lambda*. */
EM2G_API em2g_status em2g_pipeline_means(
  const em2g_pipeline_result * result, double * plus, double * minus);
EM2G_API int em2g_pipeline_is_synthetic(const em2g_pipeline_result * result);
/* NaN outside synthetic mode. */
EM2G_API double em2g_pipeline_error(const em2g_pipeline_result * result);
EM2G_API double em2g_pipeline_center_error(const em2g_pipeline_result * result);
EM2G_API double em2g_pipeline_init_alignment(const em2g_pipeline_result * result);
EM2G_API double em2g_pipeline_snr_hat(const em2g_pipeline_result * result);
EM2G_API double em2g_pipeline_blowup(const em2g_pipeline_result * result);
EM2G_API size_t em2g_pipeline_main_steps(const em2g_pipeline_result * result);
EM2G_API size_t em2g_pipeline_bootstrap_iterations(const em2g_pipeline_result * result);
/* Resolved stage sizes (after defaults). Any pointer may be NULL. */
EM2G_API void em2g_pipeline_sizes(
  const em2g_pipeline_result * result, size_t * n_center, size_t * n_init, size_t * n_step);
EM2G_API em2g_status em2g_pipeline_write_csv(
  const em2g_pipeline_result * result, const char * path);

/* ------------------------------------------------------------------ */
/* Experiments                                                         */
/* ------------------------------------------------------------------ */

typedef struct em2g_ten_step_table em2g_ten_step_table;

EM2G_API em2g_status em2g_ten_step_table_create(
  double snr, double target, em2g_ten_step_table ** out);
EM2G_API void em2g_ten_step_table_destroy(em2g_ten_step_table * table);
EM2G_API size_t em2g_ten_step_table_rows(const em2g_ten_step_table * table);
/* -1 when the target was never reached. */
EM2G_API long em2g_ten_step_table_steps_needed(const em2g_ten_step_table * table);
EM2G_API em2g_status em2g_ten_step_table_row(
  const em2g_ten_step_table * table, size_t index, double * lambda, double * relative_error,
  double * kappa);
EM2G_API em2g_status em2g_ten_step_table_write_csv(
  const em2g_ten_step_table * table, const char * path);

typedef enum em2g_basin
{
  EM2G_BASIN_PLUS = 0,
  EM2G_BASIN_MINUS = 1,
  EM2G_BASIN_EQUIDISTANT = 2
} em2g_basin;

typedef struct em2g_field_grid em2g_field_grid;

/* Requires a two-dimensional model. */
EM2G_API em2g_status em2g_field_grid_create(
  const em2g_covariance * cov, const double * mu, double lo, double hi, size_t resolution,
  int workers, em2g_field_grid ** out);
EM2G_API void em2g_field_grid_destroy(em2g_field_grid * grid);
EM2G_API size_t em2g_field_grid_cells(const em2g_field_grid * grid);
/* Any output pointer may be NULL; lambda_in and lambda_out hold 2 values. */
EM2G_API em2g_status em2g_field_grid_cell(
  const em2g_field_grid * grid, size_t index, double * lambda_in, double * lambda_out,
  em2g_basin * basin, double * decay, double * kappa);
EM2G_API em2g_status em2g_field_grid_write_csv(const em2g_field_grid * grid, const char * path);

typedef struct em2g_scaling_config
{
  size_t d;
  double snr;
  double eps;
  double eta;
  size_t trials;
  uint64_t seed;
  int workers;
} em2g_scaling_config;

EM2G_API void em2g_scaling_config_default(em2g_scaling_config * config);

typedef struct em2g_scaling_result em2g_scaling_result;

EM2G_API em2g_status em2g_scaling_study(
  const em2g_scaling_config * config, const size_t * n_values, size_t n_count,
  em2g_scaling_result ** out);
EM2G_API void em2g_scaling_result_destroy(em2g_scaling_result * result);
EM2G_API double em2g_scaling_slope(const em2g_scaling_result * result);
EM2G_API double em2g_scaling_intercept(const em2g_scaling_result * result);
EM2G_API size_t em2g_scaling_points(const em2g_scaling_result * result);
EM2G_API em2g_status em2g_scaling_point(
  const em2g_scaling_result * result, size_t index, size_t * n, double * median_error,
  size_t * failures);
/* Summary at path, per-trial rows at <path>.trials.csv. */
EM2G_API em2g_status em2g_scaling_write_csv(
  const em2g_scaling_result * result, const char * path);

/* ------------------------------------------------------------------ */
/* Output helpers                                                      */
/* ------------------------------------------------------------------ */

/* Writes `key = value` lines. */
EM2G_API em2g_status em2g_write_manifest(
  const char * path, const char * const * keys, const char * const * values, size_t count);
/* 17 significant digits, "inf"/"-inf"/"nan" for non-finite values. Writes at
 * most `size` bytes including the terminator. */
EM2G_API em2g_status em2g_format_double(double x, char * buffer, size_t size);

#ifdef __cplusplus
}
#endif

#endif /* EM2G_EM2G_H_ */
