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

// em2g command-line front end. Talks to the library only through the C API.

#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "em2g/em2g.h"
#include "run_config.hpp"

namespace
{

using em2g_cli::ConfigError;
using em2g_cli::format_list;
using em2g_cli::format_number;
using em2g_cli::RunConfig;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitAlgorithm = 2;

/// A failed C API call.
class ApiFailure : public std::runtime_error
{
public:
  ApiFailure(em2g_status status, const std::string & what)
  : std::runtime_error(what), status_(status)
  {
  }
  em2g_status status() const noexcept { return status_; }

private:
  em2g_status status_;
};

void check(em2g_status status)
{
  if (status != EM2G_OK) {
    std::string msg = em2g_last_error();
    if (msg.empty()) {
      msg = em2g_status_string(status);
    }
    throw ApiFailure(status, msg);
  }
}

int exit_code_for(em2g_status status)
{
  switch (status) {
    case EM2G_ERR_BASIN:
    case EM2G_ERR_NOT_CONVERGED:
    case EM2G_ERR_STAGE_FAILURE:
    case EM2G_ERR_PRECONDITION:
    case EM2G_ERR_INTERNAL:
      return kExitAlgorithm;
    default:
      return kExitConfig;
  }
}

template <class T, void (*Destroy)(T *)>
struct Deleter
{
  void operator()(T * p) const { Destroy(p); }
};

using CovPtr = std::unique_ptr<em2g_covariance, Deleter<em2g_covariance, em2g_covariance_destroy>>;
using TrajPtr = std::unique_ptr<em2g_trajectory, Deleter<em2g_trajectory, em2g_trajectory_destroy>>;
using BatchPtr = std::unique_ptr<em2g_batch, Deleter<em2g_batch, em2g_batch_destroy>>;
using PipePtr = std::unique_ptr<
  em2g_pipeline_result, Deleter<em2g_pipeline_result, em2g_pipeline_result_destroy>>;
using TablePtr =
  std::unique_ptr<em2g_ten_step_table, Deleter<em2g_ten_step_table, em2g_ten_step_table_destroy>>;
using GridPtr = std::unique_ptr<em2g_field_grid, Deleter<em2g_field_grid, em2g_field_grid_destroy>>;
using ScalingPtr =
  std::unique_ptr<em2g_scaling_result, Deleter<em2g_scaling_result, em2g_scaling_result_destroy>>;

const std::set<std::string> kKnownKeys{
  "command", "seed", "workers", "out",
  "model.mu", "model.mu1", "model.mu2", "model.sigma",
  "run.lambda0", "run.max_steps", "run.tol", "run.quadrature_order",
  "pipeline.eps", "pipeline.eta", "pipeline.n_center", "pipeline.n_init", "pipeline.n_step",
  "pipeline.bootstrap_cap", "pipeline.main_steps", "pipeline.blowup", "pipeline.reuse",
  "pipeline.data",
  "field.lo", "field.hi", "field.resolution",
  "tensteps.snr", "tensteps.target",
  "scaling.d", "scaling.snr", "scaling.eps", "scaling.eta", "scaling.n", "scaling.trials",
};

void reject_unknown_keys(const RunConfig & cfg)
{
  for (const auto & [key, value] : cfg.entries()) {
    if (key.rfind("result.", 0) == 0 || key == "version") {
      continue;  // manifest output fed back in as a config
    }
    if (!kKnownKeys.count(key)) {
      throw ConfigError(em2g_cli::field_name(key), key, "unknown config key '" + key + "'");
    }
  }
}

// Reads a value with a default and records the resolved value in the config,
// so the manifest holds everything needed to reproduce the run.
double take_double(RunConfig & cfg, const std::string & key, std::optional<double> fallback)
{
  const double v = cfg.get_double(key, fallback);
  cfg.set(key, format_number(v));
  return v;
}

std::uint64_t take_u64(RunConfig & cfg, const std::string & key, std::optional<std::uint64_t> fallback)
{
  const std::uint64_t v = cfg.get_u64(key, fallback);
  cfg.set(key, std::to_string(v));
  return v;
}

CovPtr make_covariance(const RunConfig & cfg, std::size_t d)
{
  const auto sigma = cfg.get_sigma("model.sigma", d);
  em2g_covariance * raw = nullptr;
  const em2g_status s = em2g_covariance_create(sigma.values.data(), d, &raw);
  if (s != EM2G_OK) {
    throw ConfigError("sigma", "model.sigma", std::string("config field 'sigma' (model.sigma): ") +
                                                em2g_last_error());
  }
  return CovPtr(raw);
}

std::vector<double> require_mu(const RunConfig & cfg)
{
  if (!cfg.has("model.mu")) {
    throw ConfigError("mu", "model.mu", "config field 'mu' (model.mu) is required");
  }
  return cfg.get_vector("model.mu");
}

void require_dim(const std::vector<double> & v, std::size_t d, const std::string & key)
{
  if (v.size() != d) {
    throw ConfigError(
      em2g_cli::field_name(key), key,
      "config field '" + em2g_cli::field_name(key) + "' (" + key + ") has " +
        std::to_string(v.size()) + " entries, expected " + std::to_string(d));
  }
}

struct Outputs
{
  std::string csv;
  std::string manifest;
};

Outputs output_paths(RunConfig & cfg, const std::string & command)
{
  const std::string out = cfg.get_string("out", command + ".csv");
  cfg.set("out", out);
  return {out, out + ".manifest"};
}

void write_manifest(
  const std::string & path, const RunConfig & cfg,
  const std::vector<std::pair<std::string, std::string>> & results)
{
  std::vector<std::string> keys{"version"};
  std::vector<std::string> values{em2g_version()};
  for (const auto & [k, v] : cfg.entries()) {
    if (k.rfind("result.", 0) == 0 || k == "version") {
      continue;
    }
    keys.push_back(k);
    values.push_back(v);
  }
  for (const auto & [k, v] : results) {
    keys.push_back("result." + k);
    values.push_back(v);
  }
  std::vector<const char *> kp;
  std::vector<const char *> vp;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    kp.push_back(keys[i].c_str());
    vp.push_back(values[i].c_str());
  }
  check(em2g_write_manifest(path.c_str(), kp.data(), vp.data(), kp.size()));
}

int workers_of(RunConfig & cfg)
{
  const std::uint64_t w = take_u64(cfg, "workers", 1);
  if (w < 1 || w > 1024) {
    throw ConfigError("workers", "workers", "config field 'workers' must lie in [1, 1024]");
  }
  return static_cast<int>(w);
}

// ---------------------------------------------------------------- converge

int cmd_converge(RunConfig & cfg)
{
  const Outputs paths = output_paths(cfg, "converge");
  const std::vector<double> mu = require_mu(cfg);
  const std::size_t d = mu.size();
  const CovPtr cov = make_covariance(cfg, d);

  const std::string start = em2g_cli::trim(cfg.get_string("run.lambda0", "inf"));
  cfg.set("run.lambda0", start);
  std::vector<double> lambda0;
  int infinite = 0;
  if (start == "inf" || start == "-inf") {
    infinite = 1;
    lambda0 = mu;
    if (start == "-inf") {
      for (auto & x : lambda0) {
        x = -x;
      }
    }
  } else if (start.rfind("inf:", 0) == 0) {
    infinite = 1;
    RunConfig tmp;
    tmp.set("run.lambda0", start.substr(4));
    lambda0 = tmp.get_vector("run.lambda0");
  } else {
    lambda0 = cfg.get_vector("run.lambda0");
  }
  require_dim(lambda0, d, "run.lambda0");

  em2g_run_options opts;
  em2g_run_options_default(&opts);
  opts.max_steps = take_u64(cfg, "run.max_steps", opts.max_steps);
  opts.tol = take_double(cfg, "run.tol", opts.tol);
  opts.quadrature_order =
    static_cast<int>(take_u64(cfg, "run.quadrature_order", static_cast<std::uint64_t>(opts.quadrature_order)));

  em2g_trajectory * raw = nullptr;
  check(em2g_run(cov.get(), mu.data(), lambda0.data(), infinite, &opts, &raw));
  const TrajPtr traj(raw);
  check(em2g_trajectory_write_csv(traj.get(), paths.csv.c_str()));

  const std::size_t n = em2g_trajectory_length(traj.get());
  std::vector<double> last(d);
  double err = 0.0;
  check(em2g_trajectory_point(traj.get(), n - 1, last.data(), &err, nullptr, nullptr));
  const em2g_termination term = em2g_trajectory_termination(traj.get());
  const char * term_text =
    term == EM2G_CONVERGED ? "converged" : (term == EM2G_FIXED_AT_ZERO ? "fixed_at_zero" : "max_steps");
  write_manifest(
    paths.manifest, cfg,
    {{"termination", term_text},
     {"steps", std::to_string(n - 1)},
     {"target_sign", std::to_string(em2g_trajectory_target_sign(traj.get()))},
     {"lambda", format_list(last)},
     {"err", format_number(err)}});
  std::cout << "termination = " << term_text << "\nsteps = " << (n - 1)
            << "\nlambda = " << format_list(last) << "\nerr = " << format_number(err) << "\n";
  return term == EM2G_MAX_STEPS ? kExitAlgorithm : kExitOk;
}

// ---------------------------------------------------------------- pipeline

int cmd_pipeline(RunConfig & cfg)
{
  const Outputs paths = output_paths(cfg, "pipeline");
  em2g_pipeline_config pc;
  em2g_pipeline_config_default(&pc);
  pc.seed = take_u64(cfg, "seed", 0);
  pc.workers = workers_of(cfg);
  pc.eps = take_double(cfg, "pipeline.eps", pc.eps);
  pc.eta = take_double(cfg, "pipeline.eta", pc.eta);
  pc.n_center = take_u64(cfg, "pipeline.n_center", 0);
  pc.n_init = take_u64(cfg, "pipeline.n_init", 0);
  pc.n_step = take_u64(cfg, "pipeline.n_step", 0);
  pc.bootstrap_cap = take_u64(cfg, "pipeline.bootstrap_cap", 0);
  pc.main_steps = take_u64(cfg, "pipeline.main_steps", 0);
  pc.blowup = take_double(cfg, "pipeline.blowup", 0.0);
  pc.reuse = cfg.get_bool("pipeline.reuse", false) ? 1 : 0;
  cfg.set("pipeline.reuse", pc.reuse ? "true" : "false");
  if (!(pc.eps > 0.0)) {
    throw ConfigError("eps", "pipeline.eps", "config field 'eps' (pipeline.eps) must be positive");
  }
  if (!(pc.eta > 0.0 && pc.eta < 1.0)) {
    throw ConfigError("eta", "pipeline.eta", "config field 'eta' (pipeline.eta) must lie in (0, 1)");
  }

  em2g_pipeline_result * raw = nullptr;
  std::size_t d = 0;
  CovPtr cov;
  const auto data_path = cfg.get("pipeline.data");
  if (data_path) {
    em2g_batch * braw = nullptr;
    if (em2g_batch_read_csv(data_path->c_str(), &braw) != EM2G_OK) {
      throw ConfigError("data", "pipeline.data", std::string("config field 'data' (pipeline.data): ") +
                                                   em2g_last_error());
    }
    const BatchPtr data(braw);
    d = em2g_batch_dimension(data.get());
    cov = make_covariance(cfg, d);
    check(em2g_pipeline_run_batch(cov.get(), data.get(), &pc, &raw));
  } else {
    std::vector<double> mu1;
    std::vector<double> mu2;
    if (cfg.has("model.mu1") || cfg.has("model.mu2")) {
      mu1 = cfg.get_vector("model.mu1");
      mu2 = cfg.get_vector("model.mu2");
      require_dim(mu2, mu1.size(), "model.mu2");
    } else {
      mu1 = require_mu(cfg);
      mu2 = mu1;
      for (auto & x : mu2) {
        x = -x;
      }
    }
    d = mu1.size();
    cov = make_covariance(cfg, d);
    check(em2g_pipeline_run_synthetic(cov.get(), mu1.data(), mu2.data(), &pc, &raw));
  }
  const PipePtr result(raw);
  check(em2g_pipeline_write_csv(result.get(), paths.csv.c_str()));

  std::vector<double> lambda(d);
  std::vector<double> center(d);
  std::vector<double> plus(d);
  std::vector<double> minus(d);
  check(em2g_pipeline_lambda(result.get(), lambda.data()));
  check(em2g_pipeline_center(result.get(), center.data()));
  check(em2g_pipeline_means(result.get(), plus.data(), minus.data()));

  const std::string estimate_path = paths.csv + ".estimate.csv";
  {
    std::FILE * f = std::fopen(estimate_path.c_str(), "wb");
    if (!f) {
      throw ApiFailure(EM2G_ERR_IO, "cannot open " + estimate_path + " for writing");
    }
    std::string text = "name";
    for (std::size_t k = 0; k < d; ++k) {
      text += ",x" + std::to_string(k + 1);
    }
    text += "\n";
    const std::pair<const char *, const std::vector<double> *> rows[] = {
      {"lambda_star", &lambda}, {"center", &center}, {"mean_plus", &plus}, {"mean_minus", &minus}};
    for (const auto & [name, v] : rows) {
      text += std::string(name) + "," + format_list(*v) + "\n";
    }
    const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
    if (std::fclose(f) != 0 || !ok) {
      throw ApiFailure(EM2G_ERR_IO, "write to " + estimate_path + " failed");
    }
  }

  std::size_t n_center = 0;
  std::size_t n_init = 0;
  std::size_t n_step = 0;
  em2g_pipeline_sizes(result.get(), &n_center, &n_init, &n_step);
  std::vector<std::pair<std::string, std::string>> summary{
    {"mode", em2g_pipeline_is_synthetic(result.get()) ? "synthetic" : "estimation"},
    {"lambda_star", format_list(lambda)},
    {"center", format_list(center)},
    {"mean_plus", format_list(plus)},
    {"mean_minus", format_list(minus)},
    {"snr_hat", format_number(em2g_pipeline_snr_hat(result.get()))},
    {"blowup", format_number(em2g_pipeline_blowup(result.get()))},
    {"main_steps", std::to_string(em2g_pipeline_main_steps(result.get()))},
    {"bootstrap_iterations", std::to_string(em2g_pipeline_bootstrap_iterations(result.get()))},
    {"n_center", std::to_string(n_center)},
    {"n_init", std::to_string(n_init)},
    {"n_step", std::to_string(n_step)},
    {"streams", "center=0,init=1,probe=2,direction=3,main=100+t"},
    {"estimate_csv", estimate_path},
  };
  if (em2g_pipeline_is_synthetic(result.get())) {
    summary.emplace_back("error", format_number(em2g_pipeline_error(result.get())));
    summary.emplace_back("center_error", format_number(em2g_pipeline_center_error(result.get())));
    summary.emplace_back("init_alignment", format_number(em2g_pipeline_init_alignment(result.get())));
  }
  write_manifest(paths.manifest, cfg, summary);
  for (const auto & [k, v] : summary) {
    std::cout << k << " = " << v << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- field

int cmd_field(RunConfig & cfg)
{
  const Outputs paths = output_paths(cfg, "field");
  if (!cfg.has("model.mu")) {
    cfg.set("model.mu", "2,2");
  }
  const std::vector<double> mu = cfg.get_vector("model.mu");
  if (mu.size() != 2) {
    throw ConfigError(
      "mu", "model.mu", "config field 'mu' (model.mu): the field grid needs d = 2, got d = " +
                          std::to_string(mu.size()));
  }
  const CovPtr cov = make_covariance(cfg, 2);
  const double lo = take_double(cfg, "field.lo", -4.0);
  const double hi = take_double(cfg, "field.hi", 4.0);
  const std::uint64_t res = take_u64(cfg, "field.resolution", 81);
  const int workers = workers_of(cfg);
  if (res < 2) {
    throw ConfigError("resolution", "field.resolution",
                      "config field 'resolution' (field.resolution) must be at least 2");
  }
  if (!(lo < hi)) {
    throw ConfigError("lo", "field.lo", "config field 'lo' (field.lo) must be below field.hi");
  }
  em2g_field_grid * raw = nullptr;
  check(em2g_field_grid_create(cov.get(), mu.data(), lo, hi, res, workers, &raw));
  const GridPtr grid(raw);
  check(em2g_field_grid_write_csv(grid.get(), paths.csv.c_str()));
  write_manifest(paths.manifest, cfg, {{"cells", std::to_string(em2g_field_grid_cells(grid.get()))}});
  std::cout << "cells = " << em2g_field_grid_cells(grid.get()) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- tensteps

int cmd_tensteps(RunConfig & cfg)
{
  const Outputs paths = output_paths(cfg, "tensteps");
  const double snr = take_double(cfg, "tensteps.snr", 1.0);
  const double target = take_double(cfg, "tensteps.target", 0.01);
  if (!(snr > 0.0) || !std::isfinite(snr)) {
    throw ConfigError("snr", "tensteps.snr", "config field 'snr' (tensteps.snr) must be positive");
  }
  if (!(target > 0.0)) {
    throw ConfigError(
      "target", "tensteps.target", "config field 'target' (tensteps.target) must be positive");
  }
  em2g_ten_step_table * raw = nullptr;
  check(em2g_ten_step_table_create(snr, target, &raw));
  const TablePtr table(raw);
  check(em2g_ten_step_table_write_csv(table.get(), paths.csv.c_str()));
  const long needed = em2g_ten_step_table_steps_needed(table.get());
  write_manifest(
    paths.manifest, cfg,
    {{"steps_needed", needed < 0 ? std::string("none") : std::to_string(needed)},
     {"rows", std::to_string(em2g_ten_step_table_rows(table.get()))}});
  std::cout << "steps_needed = " << (needed < 0 ? std::string("none") : std::to_string(needed))
            << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- scaling

int cmd_scaling(RunConfig & cfg)
{
  const Outputs paths = output_paths(cfg, "scaling");
  em2g_scaling_config sc;
  em2g_scaling_config_default(&sc);
  sc.seed = take_u64(cfg, "seed", 0);
  sc.workers = workers_of(cfg);
  sc.d = take_u64(cfg, "scaling.d", sc.d);
  sc.snr = take_double(cfg, "scaling.snr", sc.snr);
  sc.eps = take_double(cfg, "scaling.eps", sc.eps);
  sc.eta = take_double(cfg, "scaling.eta", sc.eta);
  sc.trials = take_u64(cfg, "scaling.trials", sc.trials);
  if (!cfg.has("scaling.n")) {
    cfg.set("scaling.n", "1000,10000,100000");
  }
  const auto n64 = cfg.get_u64_list("scaling.n");
  const std::vector<std::size_t> n_values(n64.begin(), n64.end());

  em2g_scaling_result * raw = nullptr;
  const em2g_status s = em2g_scaling_study(&sc, n_values.data(), n_values.size(), &raw);
  if (s == EM2G_ERR_INVALID_ARGUMENT) {
    throw ConfigError("scaling", "scaling", em2g_last_error());
  }
  check(s);
  const ScalingPtr result(raw);
  check(em2g_scaling_write_csv(result.get(), paths.csv.c_str()));
  write_manifest(
    paths.manifest, cfg,
    {{"slope", format_number(em2g_scaling_slope(result.get()))},
     {"intercept", format_number(em2g_scaling_intercept(result.get()))},
     {"trials_csv", paths.csv + ".trials.csv"}});
  std::cout << "slope = " << format_number(em2g_scaling_slope(result.get())) << "\n";
  return kExitOk;
}

struct CommonFlags
{
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> workers;
  std::vector<std::string> sets;
};

void add_common(CLI::App * sub, CommonFlags & flags)
{
  sub->add_option("--config", flags.config, "Flat key = value config file");
  sub->add_option("--seed", flags.seed, "Master seed (u64)");
  sub->add_option("--out", flags.out, "Output CSV path (manifest goes to <out>.manifest)");
  sub->add_option("--workers", flags.workers, "Worker threads (default 1)");
  sub->add_option("--set", flags.sets, "Override a config key: key=value (repeatable)");
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"EM for balanced two-component Gaussian mixtures"};
  app.require_subcommand(1);
  CommonFlags flags;
  const std::vector<std::pair<std::string, std::function<int(RunConfig &)>>> commands{
    {"converge", cmd_converge}, {"pipeline", cmd_pipeline}, {"field", cmd_field},
    {"scaling", cmd_scaling},   {"tensteps", cmd_tensteps},
  };
  const std::vector<std::string> descriptions{
    "Population EM run; writes the trajectory",
    "Finite-sample pipeline: centering, bootstrap, stabilized EM",
    "Update vector field and decay grid (d = 2)",
    "Error-vs-n scaling study with a log-log fit",
    "One-dimensional run from infinity, step table",
  };
  for (std::size_t i = 0; i < commands.size(); ++i) {
    add_common(app.add_subcommand(commands[i].first, descriptions[i]), flags);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp & e) {
    return app.exit(e);
  } catch (const CLI::ParseError & e) {
    app.exit(e);
    return kExitConfig;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    RunConfig cfg = flags.config.empty() ? RunConfig{} : RunConfig::load(flags.config);
    for (const auto & s : flags.sets) {
      cfg.set_assignment(s);
    }
    if (flags.seed) {
      cfg.set("seed", std::to_string(*flags.seed));
    }
    if (!flags.out.empty()) {
      cfg.set("out", flags.out);
    }
    if (flags.workers) {
      cfg.set("workers", std::to_string(*flags.workers));
    }
    const auto declared = cfg.get("command");
    if (declared && *declared != name) {
      throw ConfigError(
        "command", "command", "config is for command '" + *declared + "', not '" + name + "'");
    }
    cfg.set("command", name);
    reject_unknown_keys(cfg);
    take_u64(cfg, "seed", 0);
    workers_of(cfg);
    for (const auto & [cmd, fn] : commands) {
      if (cmd == name) {
        return fn(cfg);
      }
    }
    return kExitConfig;
  } catch (const ConfigError & e) {
    std::cerr << "em2g " << name << ": " << e.what() << "\n";
    return kExitConfig;
  } catch (const ApiFailure & e) {
    std::cerr << "em2g " << name << ": " << e.what() << "\n";
    const std::string stage = em2g_last_error_stage();
    if (!stage.empty()) {
      std::cerr << "em2g " << name << ": failed stage: " << stage << "\n";
    }
    return exit_code_for(e.status());
  } catch (const std::exception & e) {
    std::cerr << "em2g " << name << ": " << e.what() << "\n";
    return kExitAlgorithm;
  }
}
