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

#ifndef EM2G_CORE_CSV_IO_HPP_
#define EM2G_CORE_CSV_IO_HPP_

#include <string>
#include <utility>
#include <vector>

#include "core/experiments.hpp"
#include "core/finite_em.hpp"
#include "core/population_em.hpp"
#include "core/sampling.hpp"

namespace em2g
{

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// 17 significant digits; "inf", "-inf" and "nan" for non-finite values.
std::string format_double(double x);
/// Accepts everything format_double emits. Throws InvalidArgument otherwise.
double parse_double(const std::string & text);

std::string format_vector(const Vector & v);
Vector parse_vector(const std::string & text);
/// Rows separated by ';', entries by ','.
std::string format_matrix(const Matrix & m);
Matrix parse_matrix(const std::string & text);

/// Header x1..xd, one point per row, plus a `<path>.meta` key-value sidecar.
void write_batch_csv(const std::string & path, const SampleBatch & batch);
/// Reads the sidecar when present.
SampleBatch read_batch_csv(const std::string & path);

/// step, lambda1..lambdad, err, kappa. Infinite iterates print the direction
/// scaled to inf.
void write_trajectory_csv(const std::string & path, const Trajectory & traj);

/// step, [err_mahalanobis,] alignment, batch_size, seed_stream.
void write_pipeline_csv(const std::string & path, const PipelineResult & result);

/// t, lambda, rel_err, kappa.
void write_ten_step_csv(const std::string & path, const TenStepTable & table);

/// i, j, lambda_in1, lambda_in2, lambda_out1, lambda_out2, basin, decay, kappa.
void write_field_csv(const std::string & path, const FieldGrid & grid);

/// Per-n summary at `path`, per-trial rows at `<path>.trials.csv`.
void write_scaling_csv(const std::string & path, const ScalingResult & result);

/// `key = value` lines.
void write_key_values(const std::string & path, const KeyValues & entries);
KeyValues read_key_values(const std::string & path);

}  // namespace em2g

#endif  // EM2G_CORE_CSV_IO_HPP_
