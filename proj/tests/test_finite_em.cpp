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

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>

#include <doctest.h>

#include "core/error.hpp"
#include "core/finite_em.hpp"
#include "core/population_em.hpp"
#include "core/sampling.hpp"
#include "test_support.hpp"

using em2g::CovarianceModel;
using em2g::ErrorCode;
using em2g::Matrix;
using em2g::PipelineConfig;
using em2g::QuartileKind;
using em2g::SampleBatch;
using em2g::Vector;

namespace
{

Vector vec(std::initializer_list<double> xs)
{
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) {
    v(i++) = x;
  }
  return v;
}

SampleBatch raw(const Matrix & pts)
{
  SampleBatch b;
  b.points = pts;
  return b;
}

SampleBatch paired(const Matrix & pts)
{
  SampleBatch b;
  b.points.resize(pts.rows(), 2 * pts.cols());
  for (Eigen::Index i = 0; i < pts.cols(); ++i) {
    b.points.col(2 * i) = pts.col(i);
    b.points.col(2 * i + 1) = -pts.col(i);
  }
  b.stabilized = true;
  b.centered_by = Vector::Zero(pts.rows());
  return b;
}

ErrorCode code_of(const std::function<void()> & f)
{
  try {
    f();
  } catch (const em2g::Error & e) {
    return e.code();
  }
  FAIL("expected an em2g::Error");
  return ErrorCode::io;
}

bool same_bits(const Vector & a, const Vector & b)
{
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

double inverse_normal_cdf_quarter()
{
  // Phi^{-1}(0.25) by bisection on erfc; independent of any table.
  double lo = -2.0;
  double hi = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double cdf = 0.5 * std::erfc(-mid / std::sqrt(2.0));
    (cdf < 0.25 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("quartile examples")
{
  CHECK(em2g::quartile({1, 2, 3, 4}, QuartileKind::first) == 1.0);
  CHECK(em2g::quartile({1, 2, 3, 4}, QuartileKind::third) == 3.0);
  CHECK(em2g::quartile({4, 3, 2, 1}, QuartileKind::third) == 3.0);
  CHECK(em2g::quartile({7, 7, 7, 7, 7}, QuartileKind::first) == 7.0);
  CHECK(em2g::quartile({7, 7, 7, 7, 7}, QuartileKind::third) == 7.0);
  // n = 5: ranks ceil(5/4) = 2 and ceil(15/4) = 4.
  CHECK(em2g::quartile({5, 1, 4, 2, 3}, QuartileKind::first) == 2.0);
  CHECK(em2g::quartile({5, 1, 4, 2, 3}, QuartileKind::third) == 4.0);
  CHECK(code_of([] { em2g::quartile({1, 2, 3}, QuartileKind::first); }) ==
        ErrorCode::invalid_argument);
}

TEST_CASE("quartile of standard normal draws")
{
  const auto b = em2g::draw(
    100000, Vector::Zero(1), Vector::Zero(1), CovarianceModel::identity(1), 123);
  std::vector<double> xs(b.points.data(), b.points.data() + b.points.size());
  const double q = inverse_normal_cdf_quarter();
  CHECK(q == doctest::Approx(-0.6744897501960817).epsilon(1e-12));
  CHECK(std::abs(em2g::quartile(xs, QuartileKind::first) - q) <= 0.02);
  CHECK(std::abs(em2g::quartile(xs, QuartileKind::third) + q) <= 0.02);
}

TEST_CASE("center estimate examples")
{
  em2g_test::Rng rng(1);
  const CovarianceModel cov(em2g_test::random_spd(rng, 3));
  // Five (x, -x) pairs, left unstabilized. With n = 10 the two quartile ranks
  // (3 and 8) are mirror images, so the estimate is exactly 0.
  Matrix pts(3, 10);
  for (int i = 0; i < 5; ++i) {
    const Vector x = em2g_test::random_vector(rng, 3);
    pts.col(2 * i) = x;
    pts.col(2 * i + 1) = -x;
  }
  const auto c0 = em2g::estimate_center(raw(pts), cov);
  CHECK(c0.c.cwiseAbs().maxCoeff() == 0.0);
  CHECK(c0.n_used == 10);

  const Vector v = vec({1.5, -2.0, 0.25});
  const Matrix same = v.replicate(1, 9);
  const auto cv = em2g::estimate_center(raw(same), cov);
  CHECK((cv.c - v).norm() <= 1e-12);

  CHECK(code_of([&] { em2g::estimate_center(raw(same.leftCols(7)), cov); }) ==
        ErrorCode::invalid_argument);
  CHECK(code_of([&] { em2g::estimate_center(em2g::stabilize(raw(same), v), cov); }) ==
        ErrorCode::precondition);
  CHECK(code_of([&] { em2g::estimate_center(raw(Matrix::Zero(2, 9)), cov); }) ==
        ErrorCode::dimension);
}

TEST_CASE("center estimate stores the quartiles it averages")
{
  em2g_test::Rng rng(2);
  const CovarianceModel cov(em2g_test::random_spd(rng, 4));
  const Vector mu1 = em2g_test::random_vector(rng, 4, 2.0);
  const Vector mu2 = em2g_test::random_vector(rng, 4, 2.0);
  const auto b = em2g::draw(5001, mu1, mu2, cov, 9);
  const auto est = em2g::estimate_center(b, cov);
  REQUIRE(est.per_axis_quartiles.size() == 4);
  Vector mid(4);
  for (Eigen::Index k = 0; k < 4; ++k) {
    const auto [q1, q3] = est.per_axis_quartiles[static_cast<std::size_t>(k)];
    CHECK(q1 <= q3);
    mid(k) = 0.5 * (q1 + q3);
  }
  CHECK((cov.unwhiten(mid) - est.c).norm() <= 1e-12 * (1.0 + est.c.norm()));
  // The stored pairs are the order statistics of the whitened coordinates.
  const Matrix w = cov.whiten_columns(b.points);
  for (Eigen::Index k = 0; k < 4; ++k) {
    std::vector<double> col(static_cast<std::size_t>(w.cols()));
    for (Eigen::Index i = 0; i < w.cols(); ++i) {
      col[static_cast<std::size_t>(i)] = w(k, i);
    }
    std::sort(col.begin(), col.end());
    CHECK(est.per_axis_quartiles[static_cast<std::size_t>(k)].first == col[1250]);
    CHECK(est.per_axis_quartiles[static_cast<std::size_t>(k)].second == col[3750]);
  }
  // Well within the centering accuracy at this size.
  CHECK(cov.norm(est.c - 0.5 * (mu1 + mu2)) <= 0.5);
}

TEST_CASE("sample update examples")
{
  const auto id = CovarianceModel::identity(2);
  Matrix one(2, 1);
  one << 0.7, -1.2;
  const Vector lambda = vec({0.5, 0.25});
  const Vector got = em2g::sample_update(lambda, paired(one), id);
  const Vector want = std::tanh(lambda.dot(one.col(0))) * Vector(one.col(0));
  CHECK((got - want).norm() <= 1e-15);
  CHECK(em2g::sample_update(Vector::Zero(2), paired(one), id).norm() == 0.0);
  CHECK(code_of([&] { em2g::sample_update(lambda, raw(one), id); }) == ErrorCode::precondition);
  CHECK(code_of([&] { em2g::sample_update(vec({1, 2, 3}), paired(one), id); }) ==
        ErrorCode::dimension);
}

TEST_CASE("property: stabilized sample update is exactly odd in lambda")
{
  em2g_test::Rng rng(3);
  for (Eigen::Index d : {1, 3, 6}) {
    const CovarianceModel cov(em2g_test::random_spd(rng, d));
    const Vector mu = em2g_test::random_vector(rng, d);
    const auto s = em2g::stabilize(em2g::draw(3000, mu, -mu, cov, 40), Vector::Zero(d));
    for (int rep = 0; rep < 5; ++rep) {
      const Vector l = em2g_test::random_vector(rng, d);
      const Vector a = em2g::sample_update(l, s, cov);
      const Vector b = em2g::sample_update(-l, s, cov);
      CHECK(same_bits(a, -b));
    }
  }
}

TEST_CASE("sample update at lambda = mu concentrates on mu")
{
  const auto id = CovarianceModel::identity(2);
  const Vector mu = vec({1.0, 0.0});
  const std::size_t n = 1'000'000;
  const auto s = em2g::stabilize(em2g::draw(n, mu, -mu, id, 55), Vector::Zero(2));
  const Vector got = em2g::sample_update(mu, s, id);
  // Standard errors for the unpaired average, from the same kind of draws.
  const auto mc = em2g::mc_update(mu, mu, -mu, id, n, 56);
  for (Eigen::Index k = 0; k < 2; ++k) {
    CHECK(std::abs(got(k) - mu(k)) <= 3.0 * mc.standard_error(k));
  }
}

TEST_CASE("sample update does not depend on the worker count")
{
  em2g_test::Rng rng(4);
  const CovarianceModel cov(em2g_test::random_spd(rng, 3));
  const Vector mu = vec({0.8, 0.1, -0.3});
  const auto s = em2g::stabilize(em2g::draw(20000, mu, -mu, cov, 12), Vector::Zero(3));
  const Vector l = vec({0.2, 0.4, -0.1});
  CHECK(same_bits(em2g::sample_update(l, s, cov, 1), em2g::sample_update(l, s, cov, 4)));
  const Matrix c1 = em2g::empirical_covariance(s, cov, 1);
  const Matrix c4 = em2g::empirical_covariance(s, cov, 4);
  CHECK(std::memcmp(c1.data(), c4.data(), sizeof(double) * 9) == 0);
}

TEST_CASE("empirical covariance examples")
{
  const auto id = CovarianceModel::identity(2);
  Matrix e1(2, 1);
  e1 << 1, 0;
  const Matrix c = em2g::empirical_covariance(paired(e1), id);
  CHECK(c(0, 0) == 1.0);
  CHECK(c(0, 1) == 0.0);
  CHECK(c(1, 0) == 0.0);
  CHECK(c(1, 1) == 0.0);
  CHECK(code_of([&] { em2g::empirical_covariance(raw(e1), id); }) == ErrorCode::precondition);

  const Vector mu = vec({2.0, 0.0});
  const auto s = em2g::stabilize(em2g::draw(100000, mu, -mu, id, 13), Vector::Zero(2));
  const Matrix emp = em2g::empirical_covariance(s, id);
  const Matrix ideal = Matrix::Identity(2, 2) + mu * mu.transpose();
  CHECK((emp - emp.transpose()).norm() == 0.0);
  const double op =
    Eigen::SelfAdjointEigenSolver<Matrix>(emp - ideal).eigenvalues().cwiseAbs().maxCoeff();
  CHECK(op <= 0.1);
  CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(emp).eigenvalues().minCoeff() >= 0.0);
}

TEST_CASE("spectrum summary")
{
  Matrix m = Matrix::Identity(3, 3);
  m(0, 0) = 5.0;
  const auto s = em2g::summarize_spectrum(m);
  CHECK(s.top == doctest::Approx(5.0));
  CHECK(s.second == doctest::Approx(1.0));
  CHECK(s.gap_ratio == doctest::Approx(5.0));
  CHECK(s.snr_squared == doctest::Approx(4.0));
  CHECK(std::abs(std::abs(s.top_vector(0)) - 1.0) <= 1e-12);

  const auto one = em2g::summarize_spectrum(Matrix::Constant(1, 1, 3.0));
  CHECK(one.gap_ratio == doctest::Approx(3.0));
  CHECK(one.snr_squared == doctest::Approx(2.0));

  const auto flat = em2g::summarize_spectrum(0.9 * Matrix::Identity(2, 2));
  CHECK(flat.snr_squared == 0.0);
}

TEST_CASE("bootstrap iteration cap")
{
  CHECK(em2g::default_bootstrap_cap(32, 4.0) == 40);
  CHECK(em2g::default_bootstrap_cap(2, 0.25) == 32);
  CHECK(em2g::default_bootstrap_cap(1, 4.0) == 1);
  CHECK(em2g::default_bootstrap_cap(8, 0.0) > 1000);
}

TEST_CASE("bootstrap on a batch with covariance exactly I + mu mu^T finds mu")
{
  // Columns +-sqrt(d) R e_k with R R^T = I + mu mu^T reproduce that matrix as
  // their second moment.
  const Eigen::Index d = 6;
  em2g_test::Rng rng(5);
  const Vector mu = em2g_test::random_vector(rng, d, 1.0).normalized() * 1.5;
  const Matrix target = Matrix::Identity(d, d) + mu * mu.transpose();
  const Matrix r = target.llt().matrixL();
  const Matrix pts = std::sqrt(static_cast<double>(d)) * r;
  const auto batch = paired(pts);
  const auto id = CovarianceModel::identity(d);
  CHECK((em2g::empirical_covariance(batch, id) - target).norm() <= 1e-12);

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto st = em2g::bootstrap_init(batch, id, 1e-3, 200, seed);
    const double align = std::abs(st.direction.dot(mu.normalized()));
    INFO("seed " << seed << ": alignment " << align);
    CHECK(align >= 0.999);
    CHECK(std::abs(id.norm(st.direction) - 1.0) <= 1e-10);
    const double s = pts.colwise().norm().array().cube().sum() * 2.0;
    CHECK(st.s == doctest::Approx(s).epsilon(1e-12));
    CHECK(st.magnitude == doctest::Approx(std::sqrt(2.0 / s) * 1e-3).epsilon(1e-12));
    CHECK(st.iterations_done <= st.iteration_cap);
  }
}

TEST_CASE("bootstrap reports no signal and unstable directions")
{
  const auto id = CovarianceModel::identity(4);
  const auto flat = em2g::stabilize(
    em2g::draw(20000, Vector::Zero(4), Vector::Zero(4), id, 3), Vector::Zero(4));
  try {
    em2g::bootstrap_init(flat, id, 0.1, 0, 1);
    FAIL("expected a stage error");
  } catch (const em2g::StageError & e) {
    CHECK(e.stage() == "initialization");
    CHECK(e.code() == ErrorCode::stage_failure);
  }

  // A weak signal with a one-step cap cannot settle.
  const Vector mu = vec({0.6, 0, 0, 0});
  const auto weak = em2g::stabilize(em2g::draw(20000, mu, -mu, id, 4), Vector::Zero(4));
  CHECK_THROWS_AS(em2g::bootstrap_init(weak, id, 0.1, 1, 2), em2g::StageError);
  CHECK(code_of([&] { em2g::bootstrap_init(em2g::draw(100, mu, -mu, id, 4), id, 0.1, 0, 2); }) ==
        ErrorCode::precondition);
}

TEST_CASE("bootstrap alignment at a moderate size")
{
  const Eigen::Index d = 8;
  const auto id = CovarianceModel::identity(d);
  Vector mu = Vector::Zero(d);
  mu(0) = 2.0;
  int good = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = em2g::stabilize(em2g::draw(20000, mu, -mu, id, seed, 1), Vector::Zero(d));
    const auto st = em2g::bootstrap_init(s, id, 0.2, 0, seed);
    if (std::abs(st.direction(0)) >= 0.5) {
      ++good;
    }
  }
  CHECK(good >= 18);
}

TEST_CASE("pipeline configuration")
{
  CHECK(em2g::default_stage_size(2, 0.2, 0.1) ==
        static_cast<std::size_t>(std::ceil(64.0 * 2.0 * 1.0 * std::log(30.0) / 0.04)));
  CHECK(em2g::default_stage_size(16, 0.5, 0.1) ==
        static_cast<std::size_t>(std::ceil(64.0 * 16.0 * std::log(16.0) * std::log(30.0) / 0.25)));
  PipelineConfig bad;
  bad.eps = 0.0;
  CHECK(code_of([&] { em2g::validate(bad); }) == ErrorCode::invalid_argument);
  bad = PipelineConfig{};
  bad.eta = 1.0;
  CHECK(code_of([&] { em2g::validate(bad); }) == ErrorCode::invalid_argument);
  bad = PipelineConfig{};
  bad.blowup = -1.0;
  CHECK(code_of([&] { em2g::validate(bad); }) == ErrorCode::invalid_argument);
  bad = PipelineConfig{};
  bad.workers = 0;
  CHECK(code_of([&] { em2g::validate(bad); }) == ErrorCode::invalid_argument);
}

TEST_CASE("synthetic pipeline: accuracy, diagnostics, determinism")
{
  const auto id = CovarianceModel::identity(2);
  const Vector mu1 = vec({2.5, 1.0});
  const Vector mu2 = vec({-1.5, 1.0});
  PipelineConfig cfg;
  cfg.seed = 17;
  cfg.n_center = 20000;
  cfg.n_init = 20000;
  cfg.n_step = 20000;
  const auto r = em2g::run_pipeline(cfg, mu1, mu2, id);
  REQUIRE(r.error.has_value());
  CHECK(*r.error <= 3.0 * cfg.eps);
  CHECK(r.synthetic);
  REQUIRE(r.center_error.has_value());
  CHECK(*r.center_error <= 0.1);
  REQUIRE(r.init_alignment.has_value());
  CHECK(*r.init_alignment >= 0.5);
  CHECK(r.snr_hat == doctest::Approx(2.0).epsilon(0.1));
  CHECK(r.steps.size() == r.main_steps + 1);
  CHECK(r.steps.front().seed_stream == em2g::kInitStream);
  for (std::size_t t = 1; t < r.steps.size(); ++t) {
    CHECK(r.steps[t].seed_stream == em2g::kMainStreamBase + t);
    CHECK(r.steps[t].batch_size == cfg.n_step);
    REQUIRE(r.steps[t].error.has_value());
  }
  CHECK(*r.steps.back().error == *r.error);
  CHECK((r.mean_plus - (r.center.c + r.lambda_star)).norm() == 0.0);
  CHECK((r.mean_minus - (r.center.c - r.lambda_star)).norm() == 0.0);
  // Sign-resolved estimates of the raw means.
  const double e1 = std::min((r.mean_plus - mu1).norm(), (r.mean_minus - mu1).norm());
  CHECK(e1 <= 3.0 * cfg.eps + 0.1);

  const auto again = em2g::run_pipeline(cfg, mu1, mu2, id);
  CHECK(same_bits(r.lambda_star, again.lambda_star));
  cfg.workers = 4;
  const auto par = em2g::run_pipeline(cfg, mu1, mu2, id);
  CHECK(same_bits(r.lambda_star, par.lambda_star));
  cfg.workers = 1;
  cfg.seed = 18;
  const auto other = em2g::run_pipeline(cfg, mu1, mu2, id);
  CHECK_FALSE(same_bits(r.lambda_star, other.lambda_star));
}

TEST_CASE("pipeline preconditions and stage failures")
{
  const auto id = CovarianceModel::identity(2);
  PipelineConfig cfg;
  cfg.n_center = cfg.n_init = cfg.n_step = 5000;
  cfg.eps = 5.0;
  CHECK(code_of([&] { em2g::run_pipeline(cfg, vec({2, 0}), vec({-2, 0}), id); }) ==
        ErrorCode::precondition);
  cfg.eps = 0.2;
  try {
    em2g::run_pipeline(cfg, vec({0, 0}), vec({0, 0}), id);
    FAIL("expected a stage error");
  } catch (const em2g::StageError & e) {
    CHECK(e.stage() == "initialization");
  }
  CHECK(code_of([&] { em2g::run_pipeline(cfg, vec({1, 0, 0}), vec({-1, 0}), id); }) ==
        ErrorCode::dimension);
}

TEST_CASE("pipeline on a fixed sample file")
{
  const auto id = CovarianceModel::identity(2);
  const Vector mu = vec({2.0, 0.0});
  PipelineConfig cfg;
  cfg.n_center = cfg.n_init = cfg.n_step = 4000;
  cfg.main_steps = 5;
  const auto data = em2g::draw(4000 * 7, mu + vec({0.5, 0.5}), -mu + vec({0.5, 0.5}), id, 5);
  const auto r = em2g::run_pipeline(cfg, data, id);
  CHECK_FALSE(r.synthetic);
  CHECK_FALSE(r.error.has_value());
  CHECK_FALSE(r.center_error.has_value());
  CHECK(r.steps.size() == 6);
  for (const auto & s : r.steps) {
    CHECK_FALSE(s.error.has_value());
  }
  CHECK(r.steps.back().alignment == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(em2g::sign_resolved_error(r.lambda_star, mu, id) <= 0.6);
  // Identical rows give identical estimates.
  CHECK(same_bits(r.lambda_star, em2g::run_pipeline(cfg, data, id).lambda_star));

  SampleBatch short_data = data;
  short_data.points = data.points.leftCols(4000 * 7 - 1);
  CHECK(code_of([&] { em2g::run_pipeline(cfg, short_data, id); }) == ErrorCode::invalid_argument);
  cfg.reuse = true;
  short_data.points = data.points.leftCols(4000 * 3);
  const auto reused = em2g::run_pipeline(cfg, short_data, id);
  CHECK(reused.steps.back().seed_stream == em2g::kMainStreamBase);
  CHECK(code_of([&] { em2g::run_pipeline(cfg, em2g::stabilize(data, mu), id); }) ==
        ErrorCode::precondition);
}

TEST_CASE("property: incorrectly centered population contraction")
{
  em2g_test::Rng rng(6);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int checked = 0;
  for (Eigen::Index d : {1, 2, 3, 5}) {
    for (int rep = 0; rep < 25; ++rep) {
      const CovarianceModel cov(em2g_test::random_spd(rng, d));
      const double snr = 1.0 + 3.0 * unit(rng);
      Vector mu = em2g_test::random_vector(rng, d);
      mu *= snr / cov.norm(mu);
      const double eps = snr / 10.0 * unit(rng);
      Vector delta = em2g_test::random_vector(rng, d);
      delta *= eps * unit(rng) / cov.norm(delta);
      // Start as the main loop does: lambda = M lambda_hat with M >= ||mu||_Sigma
      // and <lambda_hat, mu_hat>_Sigma >= 1/2.
      Vector dir = em2g_test::random_vector(rng, d);
      dir /= cov.norm(dir);
      const Vector mu_hat = mu / snr;
      if (cov.inner(dir, mu_hat) < 0.5) {
        const Vector perp = dir - cov.inner(dir, mu_hat) * mu_hat;
        const double pn = cov.norm(perp);
        const double c = 0.5 + 0.5 * unit(rng);
        dir = pn > 1e-12 ? Vector(c * mu_hat + std::sqrt(1.0 - c * c) * perp / pn) : mu_hat;
      }
      const Vector lambda = snr * (1.0 + 3.0 * unit(rng)) * dir;
      const Vector next = em2g::shifted_population_update(lambda, mu, delta, cov);
      const double k = std::exp(-snr * snr / 6.0);
      INFO("snr " << snr << ", eps " << eps << ", align " << cov.inner(dir, mu_hat));
      CHECK(cov.norm(next - mu) <= k * cov.norm(lambda - mu) + k * eps + 1e-6);
      ++checked;
    }
  }
  CHECK(checked == 100);
}

TEST_CASE("sign-resolved error")
{
  const auto id = CovarianceModel::identity(2);
  CHECK(em2g::sign_resolved_error(vec({-1, 0}), vec({1, 0}), id) == 0.0);
  CHECK(em2g::sign_resolved_error(vec({1, 1}), vec({1, 0}), id) == doctest::Approx(1.0));
}
