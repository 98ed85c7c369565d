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

#include "core/csv_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "core/error.hpp"

namespace em2g
{

namespace
{

std::string trim(const std::string & s)
{
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) {
    return "";
  }
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string & s, char sep)
{
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    out.push_back(trim(item));
  }
  if (!s.empty() && s.back() == sep) {
    out.emplace_back();
  }
  return out;
}

std::ofstream open_out(const std::string & path)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::io, "cannot open " + path + " for writing");
  }
  return out;
}

std::ifstream open_in(const std::string & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::io, "cannot open " + path);
  }
  return in;
}

void finish(std::ofstream & out, const std::string & path)
{
  out.flush();
  if (!out) {
    throw Error(ErrorCode::io, "write to " + path + " failed");
  }
}

const char * bool_text(bool b) { return b ? "true" : "false"; }

}  // namespace

std::string format_double(double x)
{
  if (std::isnan(x)) {
    return "nan";
  }
  if (std::isinf(x)) {
    return x > 0 ? "inf" : "-inf";
  }
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

double parse_double(const std::string & text)
{
  const std::string t = trim(text);
  if (t.empty()) {
    throw InvalidArgument("expected a number, got an empty field");
  }
  errno = 0;
  char * end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  // ERANGE on underflow still yields the correctly rounded subnormal.
  if (end != t.c_str() + t.size() || (errno == ERANGE && std::isinf(v))) {
    throw InvalidArgument("not a number: '" + t + "'");
  }
  return v;
}

std::string format_vector(const Vector & v)
{
  std::string out;
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (k) {
      out += ',';
    }
    out += format_double(v(k));
  }
  return out;
}

Vector parse_vector(const std::string & text)
{
  const auto parts = split(trim(text), ',');
  if (parts.empty()) {
    throw InvalidArgument("expected a comma-separated vector");
  }
  Vector v(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t k = 0; k < parts.size(); ++k) {
    v(static_cast<Eigen::Index>(k)) = parse_double(parts[k]);
  }
  return v;
}

std::string format_matrix(const Matrix & m)
{
  std::string out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (r) {
      out += ';';
    }
    out += format_vector(m.row(r).transpose());
  }
  return out;
}

Matrix parse_matrix(const std::string & text)
{
  const auto rows = split(trim(text), ';');
  if (rows.empty()) {
    throw InvalidArgument("expected a matrix with rows separated by ';'");
  }
  Matrix m;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Vector row = parse_vector(rows[r]);
    if (r == 0) {
      m.resize(static_cast<Eigen::Index>(rows.size()), row.size());
    } else if (row.size() != m.cols()) {
      throw InvalidArgument("matrix rows have unequal lengths");
    }
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

void write_key_values(const std::string & path, const KeyValues & entries)
{
  auto out = open_out(path);
  for (const auto & [k, v] : entries) {
    out << k << " = " << v << '\n';
  }
  finish(out, path);
}

KeyValues read_key_values(const std::string & path)
{
  auto in = open_in(path);
  KeyValues out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') {
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument(
        path + ":" + std::to_string(line_no) + ": expected 'key = value', got '" + t + "'");
    }
    out.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return out;
}

void write_batch_csv(const std::string & path, const SampleBatch & batch)
{
  auto out = open_out(path);
  for (Eigen::Index k = 0; k < batch.dimension(); ++k) {
    out << (k ? ",x" : "x") << (k + 1);
  }
  out << '\n';
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    out << format_vector(batch.points.col(i)) << '\n';
  }
  finish(out, path);

  KeyValues meta{
    {"d", std::to_string(batch.dimension())},
    {"n", std::to_string(batch.size())},
    {"seed", std::to_string(batch.seed)},
    {"stream", std::to_string(batch.stream)},
    {"stabilized", bool_text(batch.stabilized)},
  };
  if (batch.origin) {
    meta.emplace_back("mu1", format_vector(batch.origin->mu1));
    meta.emplace_back("mu2", format_vector(batch.origin->mu2));
    meta.emplace_back("sigma", format_matrix(batch.origin->sigma));
  }
  if (batch.centered_by) {
    meta.emplace_back("centered_by", format_vector(*batch.centered_by));
  }
  write_key_values(path + ".meta", meta);
}

SampleBatch read_batch_csv(const std::string & path)
{
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) {
    throw InvalidArgument(path + ": empty file");
  }
  const auto header = split(trim(line), ',');
  const auto d = static_cast<Eigen::Index>(header.size());
  if (d == 0 || header[0].empty()) {
    throw InvalidArgument(path + ": missing header");
  }
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      continue;
    }
    const auto parts = split(trim(line), ',');
    if (static_cast<Eigen::Index>(parts.size()) != d) {
      throw InvalidArgument(
        path + ":" + std::to_string(line_no) + ": expected " + std::to_string(d) + " fields");
    }
    for (const auto & p : parts) {
      values.push_back(parse_double(p));
    }
  }
  SampleBatch batch;
  const auto n = static_cast<Eigen::Index>(values.size()) / d;
  batch.points = Eigen::Map<const Matrix>(values.data(), d, n);

  std::ifstream probe(path + ".meta");
  if (probe) {
    probe.close();
    std::optional<Vector> mu1;
    std::optional<Vector> mu2;
    std::optional<Matrix> sigma;
    for (const auto & [k, v] : read_key_values(path + ".meta")) {
      if (k == "seed") {
        batch.seed = std::stoull(v);
      } else if (k == "stream") {
        batch.stream = static_cast<std::uint32_t>(std::stoul(v));
      } else if (k == "stabilized") {
        batch.stabilized = v == "true";
      } else if (k == "centered_by") {
        batch.centered_by = parse_vector(v);
      } else if (k == "mu1") {
        mu1 = parse_vector(v);
      } else if (k == "mu2") {
        mu2 = parse_vector(v);
      } else if (k == "sigma") {
        sigma = parse_matrix(v);
      }
    }
    if (mu1 && mu2 && sigma) {
      batch.origin = SampleOrigin{*mu1, *mu2, *sigma};
    }
  }
  return batch;
}

void write_trajectory_csv(const std::string & path, const Trajectory & traj)
{
  auto out = open_out(path);
  const Eigen::Index d = traj.points.empty() ? 0 : traj.points.front().iterate.lambda.size();
  out << "step";
  for (Eigen::Index k = 0; k < d; ++k) {
    out << ",lambda" << (k + 1);
  }
  out << ",err,kappa\n";
  constexpr double inf = std::numeric_limits<double>::infinity();
  for (const auto & p : traj.points) {
    out << p.iterate.step;
    for (Eigen::Index k = 0; k < d; ++k) {
      double v = p.iterate.lambda(k);
      if (p.iterate.infinite && v != 0.0) {
        v = std::copysign(inf, v);
      }
      out << ',' << format_double(v);
    }
    out << ',' << format_double(p.error) << ','
        << format_double(
             p.certificate ? p.certificate->kappa : std::numeric_limits<double>::quiet_NaN())
        << '\n';
  }
  finish(out, path);
}

void write_pipeline_csv(const std::string & path, const PipelineResult & result)
{
  auto out = open_out(path);
  out << (result.synthetic ? "step,err_mahalanobis,alignment,batch_size,seed_stream\n"
                           : "step,alignment,batch_size,seed_stream\n");
  for (const auto & s : result.steps) {
    out << s.step;
    if (result.synthetic) {
      out << ',' << format_double(s.error.value_or(std::numeric_limits<double>::quiet_NaN()));
    }
    out << ',' << format_double(s.alignment) << ',' << s.batch_size << ',' << s.seed_stream
        << '\n';
  }
  finish(out, path);
}

void write_ten_step_csv(const std::string & path, const TenStepTable & table)
{
  auto out = open_out(path);
  out << "t,lambda,rel_err,kappa\n";
  for (const auto & r : table.rows) {
    out << r.t << ',' << format_double(r.lambda) << ',' << format_double(r.relative_error) << ','
        << format_double(r.kappa) << '\n';
  }
  finish(out, path);
}

void write_field_csv(const std::string & path, const FieldGrid & grid)
{
  auto out = open_out(path);
  out << "i,j,lambda_in1,lambda_in2,lambda_out1,lambda_out2,basin,decay,kappa\n";
  for (const auto & c : grid.cells) {
    out << c.i << ',' << c.j << ',' << format_vector(c.lambda_in) << ','
        << format_vector(c.lambda_out) << ',' << to_string(c.basin) << ','
        << format_double(c.decay) << ',' << format_double(c.kappa) << '\n';
  }
  finish(out, path);
}

void write_scaling_csv(const std::string & path, const ScalingResult & result)
{
  {
    auto out = open_out(path);
    out << "n,successes,failures,median_error,residual,slope,intercept\n";
    for (const auto & p : result.points) {
      out << p.n << ',' << p.successes << ',' << p.failures << ','
          << format_double(p.median_error) << ',' << format_double(p.residual) << ','
          << format_double(result.slope) << ',' << format_double(result.intercept) << '\n';
    }
    finish(out, path);
  }
  const std::string trials_path = path + ".trials.csv";
  auto out = open_out(trials_path);
  out << "n,trial,seed,failed,error\n";
  for (const auto & t : result.trials) {
    out << t.n << ',' << t.trial << ',' << t.seed << ',' << (t.failed ? 1 : 0) << ','
        << format_double(t.error) << '\n';
  }
  finish(out, trials_path);
}

}  // namespace em2g
