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

#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>

#include "core/error.hpp"
#include "core/population_em.hpp"
#include "core/sampling.hpp"
#include "test_support.hpp"

using em2g::CovarianceModel;
using em2g::ErrorCode;
using em2g::Iterate;
using em2g::Matrix;
using em2g::MixtureSpec;
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

Vector scalar(double x) { return vec({x}); }

// x * tanh(lambda x / sigma^2) against N(mu, sigma^2), by the test oracle.
double oracle_update_1d(double lambda, double mu, double sigma)
{
  const double a = lambda / (sigma * sigma);
  return em2g_test::oracle_normal_expectation(
    [a](double x) { return std::tanh(a * x) * x; }, mu, sigma);
}

// Independent evaluation of the plane-reduced update: whiten with the
// symmetric square root from an eigendecomposition, integrate both plane
// components with the test oracle, map back.
Vector oracle_update(const Vector & lambda, const Vector & mu, const Matrix & sigma)
{
  Eigen::SelfAdjointEigenSolver<Matrix> es(sigma);
  const Matrix root = es.operatorSqrt();
  const Matrix inv_root = es.operatorInverseSqrt();
  // Sigma^{-1} lambda expressed in whitened coordinates is Sigma^{-1/2} lambda.
  const Vector l = inv_root * lambda;
  const Vector m = inv_root * mu;
  const double ln = l.norm();
  if (ln == 0.0) {
    return Vector::Zero(lambda.size());
  }
  const Vector u = l / ln;
  const double along = u.dot(m);
  const Vector perp = m - along * u;
  const double c1 = em2g_test::oracle_normal_expectation(
    [ln](double y) { return std::tanh(ln * y) * y; }, along, 1.0);
  const double c2 = em2g_test::oracle_normal_expectation(
    [ln](double y) { return std::tanh(ln * y); }, along, 1.0);
  return root * (c1 * u + c2 * perp);
}

double pow2(double x) { return x * x; }

}  // namespace

TEST_CASE("update_1d examples")
{
  CHECK(em2g::update_1d(1.0, 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(em2g::update_1d(0.0, 1.0, 1.0) == 0.0);
  const double folded = 1.0 * std::erf(1.0 / std::numbers::sqrt2) +
                        std::sqrt(2.0 / std::numbers::pi) * std::exp(-0.5);
  CHECK(em2g::update_1d(1e6, 1.0, 1.0) == doctest::Approx(folded).epsilon(1e-10));
}

TEST_CASE("update_1d errors")
{
  CHECK_THROWS_AS(em2g::update_1d(1.0, 1.0, 0.0), em2g::InvalidArgument);
  CHECK_THROWS_AS(em2g::update_1d(1.0, 1.0, -2.0), em2g::InvalidArgument);
  CHECK_THROWS_AS(em2g::update_1d(1.0, 1.0, 1.0, {10}), em2g::InvalidArgument);
}

TEST_CASE("update_1d(0.5, 1, 1) agrees with Monte Carlo at n = 1e7 and with the adaptive oracle")
{
  const double got = em2g::update_1d(0.5, 1.0, 1.0);
  CHECK(got == doctest::Approx(oracle_update_1d(0.5, 1.0, 1.0)).epsilon(1e-11));
  const auto mc = em2g::mc_update(
    scalar(0.5), scalar(1.0), scalar(-1.0), CovarianceModel::identity(1), 10'000'000, 2024);
  INFO("mc = " << mc.estimate(0) << " +- " << mc.standard_error(0));
  CHECK(std::abs(got - mc.estimate(0)) <= 3.0 * mc.standard_error(0));
}

TEST_CASE("folded normal mean: closed form, oracle integration, Monte Carlo")
{
  CHECK(em2g::folded_normal_mean(0.0, 1.0) ==
        doctest::Approx(std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-15));
  const double v = em2g::folded_normal_mean(1.0, 1.0);
  // Closed form evaluated by hand: erf(1/sqrt 2) = 0.682689492137086,
  // sqrt(2/pi) e^{-1/2} = 0.483941449038287.
  CHECK(v == doctest::Approx(1.166630941175373).epsilon(1e-13));
  const double integrated =
    em2g_test::oracle_normal_expectation([](double x) { return std::abs(x); }, 1.0, 1.0);
  CHECK(v == doctest::Approx(integrated).epsilon(1e-12));

  // Monte Carlo with an unrelated generator, n = 1e7.
  std::mt19937_64 rng(99);
  std::normal_distribution<double> n(1.0, 1.0);
  const int count = 10'000'000;
  double s = 0.0;
  double s2 = 0.0;
  for (int i = 0; i < count; ++i) {
    const double a = std::abs(n(rng));
    s += a;
    s2 += a * a;
  }
  const double mean = s / count;
  const double se = std::sqrt((s2 / count - mean * mean) / count);
  CHECK(std::abs(mean - v) <= 3.0 * se);

  em2g_test::Rng r(5);
  std::uniform_real_distribution<double> um(-6.0, 6.0);
  std::uniform_real_distribution<double> us(0.05, 5.0);
  for (int i = 0; i < 200; ++i) {
    const double mu = um(r);
    const double sigma = us(r);
    CHECK(em2g::folded_normal_mean(std::abs(mu), sigma) <=
          std::abs(mu) + sigma * std::sqrt(2.0 / std::numbers::pi) + 1e-14);
  }
  CHECK_THROWS_AS(em2g::folded_normal_mean(1.0, 0.0), em2g::InvalidArgument);
}

TEST_CASE("population update examples")
{
  const auto id = CovarianceModel::identity(2);
  const Vector mu = vec({2, 2});
  CHECK((em2g::population_update(mu, mu, id) - mu).norm() <= 1e-8);
  CHECK(em2g::population_update(vec({0, 0}), mu, id).norm() == 0.0);
  CHECK((em2g::population_update(-mu, mu, id) + mu).norm() <= 1e-8);

  // Collinear: reduces to the 1D update on the norms.
  const Vector lambda = 0.6 * mu;
  const Vector out = em2g::population_update(lambda, mu, id);
  const double expected = em2g::update_1d(lambda.norm(), mu.norm(), 1.0);
  CHECK(std::abs(out.norm() - expected) <= 1e-8);
  CHECK(std::abs(out.normalized().dot(mu.normalized()) - 1.0) <= 1e-12);

  // Orthogonal: collinear with lambda, strictly shorter.
  const Vector orth = vec({1.5, -1.5});
  const Vector o = em2g::population_update(orth, mu, id);
  CHECK(std::abs(o(0) * orth(1) - o(1) * orth(0)) <= 1e-12);
  CHECK(o.dot(orth) > 0.0);
  CHECK(o.norm() < orth.norm());

  CHECK_THROWS_AS(em2g::population_update(vec({1, 0, 0}), mu, id), em2g::DimensionError);
}

TEST_CASE("population update matches an independent plane-reduction oracle")
{
  em2g_test::Rng rng(31);
  for (Eigen::Index d : {1, 2, 5}) {
    for (int rep = 0; rep < 6; ++rep) {
      const Matrix s = em2g_test::random_spd(rng, d);
      const CovarianceModel cov(s);
      const Vector mu = em2g_test::random_vector(rng, d, 1.5);
      const Vector lambda = em2g_test::random_vector(rng, d, 1.5);
      const Vector got = em2g::population_update(lambda, mu, cov);
      const Vector want = oracle_update(lambda, mu, s);
      CHECK((got - want).norm() <= 1e-9 * (1.0 + want.norm()));
    }
  }
}

TEST_CASE("population update agrees with multivariate Monte Carlo")
{
  em2g_test::Rng rng(32);
  for (int rep = 0; rep < 4; ++rep) {
    const Eigen::Index d = 3;
    const CovarianceModel cov(em2g_test::random_spd(rng, d));
    const Vector mu = em2g_test::random_vector(rng, d);
    const Vector lambda = em2g_test::random_vector(rng, d);
    const Vector got = em2g::population_update(lambda, mu, cov);
    const auto mc = em2g::mc_update(lambda, mu, -mu, cov, 1'000'000, 700 + rep);
    for (Eigen::Index k = 0; k < d; ++k) {
      CHECK(std::abs(got(k) - mc.estimate(k)) <= 4.0 * mc.standard_error(k));
    }
  }
}

TEST_CASE("update at infinity is the limit of large finite iterates")
{
  em2g_test::Rng rng(10);
  const CovarianceModel cov(em2g_test::random_spd(rng, 3));
  const Vector mu = vec({1.0, -0.5, 0.3});
  const Vector dir = vec({0.2, 1.0, -0.4});
  const Vector lim = em2g::population_update_at_infinity(dir, mu, cov);
  const Vector big = em2g::population_update(1e7 * dir, mu, cov);
  CHECK((lim - big).norm() <= 1e-6);
}

TEST_CASE("rate certificate examples")
{
  CHECK(em2g::rate_1d(1.0, 1.0, 1.0).kappa == doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
  const auto r2 = em2g::rate_1d(2.0, 1.0, 1.0);
  CHECK(r2.kappa == doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
  CHECK(r2.branch == em2g::RateBranch::alignment);
  CHECK(em2g::rate_1d(1e-9, 1.0, 1.0).kappa == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(em2g::rate_1d(-1.0, 1.0, 1.0), em2g::Error);
  CHECK_THROWS_AS(em2g::rate_1d(1.0, 0.0, 1.0), em2g::Error);

  em2g_test::Rng rng(3);
  const Matrix s = em2g_test::random_spd(rng, 3);
  const MixtureSpec spec(vec({1, 2, -1}), CovarianceModel(s));
  const auto at_mu = em2g::rate(Iterate::make(spec.mu(), spec), spec);
  CHECK(at_mu.kappa == doctest::Approx(std::exp(-0.5 * pow2(spec.snr()))).epsilon(1e-12));

  const MixtureSpec unit(vec({0.6, 0.8}), CovarianceModel::identity(2));
  const auto ten = em2g::rate(Iterate::make(10.0 * unit.mu(), unit), unit);
  CHECK(ten.branch == em2g::RateBranch::alignment);
  CHECK(ten.kappa == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));

  // Collinear multi-d certificate equals the 1D one.
  const MixtureSpec line(vec({1.3, 0.0}), CovarianceModel::identity(2));
  const auto c = em2g::rate(Iterate::make(vec({0.7, 0.0}), line), line);
  CHECK(c.kappa == doctest::Approx(em2g::rate_1d(0.7, 1.3, 1.0).kappa).epsilon(1e-14));

  try {
    em2g::rate(Iterate::make(-unit.mu(), unit), unit);
    FAIL("expected a basin error");
  } catch (const em2g::Error & e) {
    CHECK(e.code() == ErrorCode::basin);
  }
}

TEST_CASE("certificate invariants hold")
{
  em2g_test::Rng rng(4);
  std::uniform_real_distribution<double> u(0.05, 4.0);
  for (int rep = 0; rep < 100; ++rep) {
    const double l = u(rng);
    const double m = u(rng);
    const double s = u(rng);
    const auto c = em2g::rate_1d(l, m, s);
    CHECK(c.kappa > 0.0);
    CHECK(c.kappa <= 1.0);
    const double mt = std::min(l, m) * l / (s * s);
    CHECK(c.kappa == doctest::Approx(std::exp(-mt * mt / (2.0 * l * l / (s * s)))).epsilon(1e-12));
  }
}

TEST_CASE("run examples")
{
  const MixtureSpec spec(vec({2, 2}), CovarianceModel::identity(2));
  const auto at = em2g::run(spec.mu(), spec);
  CHECK(at.termination == em2g::Termination::converged);
  CHECK(at.points.size() == 1);

  const MixtureSpec one(scalar(1.0), CovarianceModel::identity(1));
  em2g::RunOptions opt;
  opt.max_steps = 10;
  const auto big = em2g::run(scalar(1e6), one, opt);
  REQUIRE(big.points.size() >= 2);
  CHECK(big.points.back().error <= 0.01);

  const auto neg = em2g::run(vec({-1.0, 0.3}), spec);
  CHECK(neg.target_sign == -1);
  CHECK(neg.termination == em2g::Termination::converged);
  CHECK((neg.points.back().iterate.lambda + spec.mu()).norm() <= 1e-6);

  const auto zero = em2g::run(vec({0, 0}), spec);
  CHECK(zero.termination == em2g::Termination::fixed_at_zero);
}

TEST_CASE("trajectory caches match recomputation")
{
  em2g_test::Rng rng(5);
  const Matrix s = em2g_test::random_spd(rng, 4);
  const MixtureSpec spec(vec({1.0, 0.5, -0.2, 0.8}), CovarianceModel(s));
  const auto traj = em2g::run(vec({0.1, 0.1, 0.1, 0.1}), spec);
  CHECK(traj.termination == em2g::Termination::converged);
  for (const auto & p : traj.points) {
    const Vector & l = p.iterate.lambda;
    CHECK(p.iterate.lambda_norm == doctest::Approx(spec.cov().norm(l)).epsilon(1e-12));
    REQUIRE(p.iterate.alignment.has_value());
    CHECK(*p.iterate.alignment ==
          doctest::Approx(spec.cov().inner(l, spec.mu())).epsilon(1e-12).scale(1e-300));
    CHECK(std::abs(p.error - spec.cov().norm(l - traj.target_sign * spec.mu())) <= 1e-10);
    if (p.certificate) {
      const double nn = spec.cov().inner(l, l);
      const double mt = std::min(nn, spec.cov().inner(spec.mu(), l));
      CHECK(std::abs(p.certificate->kappa - std::exp(-mt * mt / (2.0 * nn))) <= 1e-10);
    }
  }
}

TEST_CASE("property: fixed points")
{
  em2g_test::Rng rng(6);
  for (Eigen::Index d : {1, 3, 7}) {
    const CovarianceModel cov(em2g_test::random_spd(rng, d));
    const Vector mu = em2g_test::random_vector(rng, d, 2.0);
    CHECK((em2g::population_update(mu, mu, cov) - mu).norm() <= 1e-8);
    CHECK((em2g::population_update(-mu, mu, cov) + mu).norm() <= 1e-8);
    CHECK(em2g::population_update(Vector::Zero(d), mu, cov).norm() <= 1e-8);
  }
}

TEST_CASE("property: update_1d is strictly increasing and odd")
{
  for (double mu : {0.3, 1.0, 2.5}) {
    for (double sigma : {0.5, 1.0, 2.0}) {
      double prev = -1e300;
      for (int k = 0; k < 100; ++k) {
        const double l = -5.0 * sigma + 10.0 * sigma * k / 99.0;
        const double v = em2g::update_1d(l, mu, sigma);
        CHECK(v > prev);
        prev = v;
        CHECK(em2g::update_1d(-l, mu, sigma) ==
              doctest::Approx(-em2g::update_1d(l, -mu, sigma)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("property: one-dimensional contraction certificate")
{
  const double sigma = 1.0;
  for (int i = 1; i <= 30; ++i) {
    for (int j = 1; j <= 30; ++j) {
      const double l = 3.0 * sigma * i / 30.0;
      const double m = 3.0 * sigma * j / 30.0;
      const double kappa = em2g::rate_1d(l, m, sigma).kappa;
      CHECK(std::abs(em2g::update_1d(l, m, sigma) - m) <= kappa * std::abs(l - m) + 1e-6);
    }
  }
}

TEST_CASE("property: components outside span{lambda, mu} vanish")
{
  em2g_test::Rng rng(7);
  for (Eigen::Index d : {2, 5, 16}) {
    for (int rep = 0; rep < 10; ++rep) {
      const CovarianceModel cov(em2g_test::random_spd(rng, d));
      const Vector mu = em2g_test::random_vector(rng, d);
      const Vector lambda = em2g_test::random_vector(rng, d);
      const Vector out = em2g::population_update(lambda, mu, cov);
      // Sigma-orthogonal complement of span{lambda, mu} via Gram-Schmidt in
      // the Sigma inner product.
      std::vector<Vector> basis;
      for (const Vector & v : {lambda, mu}) {
        Vector w = v;
        for (const Vector & b : basis) {
          w -= cov.inner(w, b) * b;
        }
        if (cov.norm(w) > 1e-12) {
          basis.push_back(w / cov.norm(w));
        }
      }
      for (int probe = 0; probe < 3; ++probe) {
        Vector w = em2g_test::random_vector(rng, d);
        for (const Vector & b : basis) {
          w -= cov.inner(w, b) * b;
        }
        if (cov.norm(w) < 1e-8) {
          continue;
        }
        w /= cov.norm(w);
        CHECK(std::abs(cov.inner(out, w)) <= 1e-9);
      }
    }
  }
}

TEST_CASE("property: certificate and progress are monotone along aligned runs")
{
  em2g_test::Rng rng(8);
  for (Eigen::Index d : {1, 2, 5}) {
    for (int rep = 0; rep < 8; ++rep) {
      const CovarianceModel cov(em2g_test::random_spd(rng, d));
      const MixtureSpec spec(em2g_test::random_vector(rng, d, 1.5), cov);
      Vector l0 = em2g_test::random_vector(rng, d, 2.0);
      if (cov.inner(l0, spec.mu()) <= 0.0) {
        l0 = -l0;
      }
      em2g::RunOptions opt;
      opt.max_steps = 200;
      const auto traj = em2g::run(l0, spec, opt);
      const auto progress = [&](const Vector & l) {
        const double n = cov.norm(l);
        return std::min(n, cov.inner(l / n, spec.mu()));
      };
      for (std::size_t t = 0; t + 1 < traj.points.size(); ++t) {
        const auto & a = traj.points[t];
        const auto & b = traj.points[t + 1];
        REQUIRE(a.certificate.has_value());
        REQUIRE(b.certificate.has_value());
        CHECK(b.certificate->kappa <= a.certificate->kappa + 1e-9);
        CHECK(progress(a.iterate.lambda) <= progress(b.iterate.lambda) + 1e-9);
        CHECK(b.error <= a.certificate->kappa * a.error + 1e-7);
      }
    }
  }
}

TEST_CASE("tanh expectation examples and lower bounds")
{
  CHECK(std::abs(em2g::tanh_expectation(0.0, 2.0, 1.0)) <= 1e-15);
  CHECK(em2g::tanh_expectation(1.5, 0.0, 1.0) == 0.0);
  const double v = em2g::tanh_expectation(1.0, 1.0, 1.0);
  CHECK(v >= 1.0 - std::exp(-0.5));
  const double want =
    em2g_test::oracle_normal_expectation([](double x) { return std::tanh(x); }, 1.0, 1.0);
  CHECK(v == doctest::Approx(want).epsilon(1e-10));
  CHECK_THROWS_AS(em2g::tanh_expectation(1.0, 1.0, 0.0), em2g::InvalidArgument);

  for (int i = 1; i <= 20; ++i) {
    for (int j = 1; j <= 20; ++j) {
      const double a = 4.0 * i / 20.0;
      const double b = 4.0 * j / 20.0;
      for (double s : {0.5, 1.0, 2.0}) {
        const double bound = 1.0 - std::exp(-std::min(a, b) * a / (2.0 * s * s));
        CHECK(em2g::tanh_expectation(a, b, s) >= bound - 1e-6);
        CHECK(em2g::tanh_derivative_moment(a, b, s) >= -1e-9);
      }
    }
  }
  const double dm = em2g::tanh_derivative_moment(0.7, 1.2, 1.3);
  const double dm_want = em2g_test::oracle_normal_expectation(
    [](double x) {
      const double c = std::cosh(1.2 * x / (1.3 * 1.3));
      return x / (c * c);
    },
    0.7, 1.3);
  CHECK(dm == doctest::Approx(dm_want).epsilon(1e-10));
}

TEST_CASE("property: quadrature agrees with Monte Carlo over random 1D problems")
{
  em2g_test::Rng rng(9);
  std::uniform_real_distribution<double> ul(-3.0, 3.0);
  std::uniform_real_distribution<double> um(-2.0, 2.0);
  std::uniform_real_distribution<double> us(0.3, 2.0);
  int outside = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const double l = ul(rng);
    const double m = um(rng);
    const double s = us(rng);
    const double q = em2g::update_1d(l, m, s);
    const Matrix sig = Matrix::Constant(1, 1, s * s);
    const auto mc = em2g::mc_update(
      scalar(l), scalar(m), scalar(-m), CovarianceModel(sig), 1'000'000, 5000 + rep);
    if (std::abs(q - mc.estimate(0)) > 3.0 * mc.standard_error(0)) {
      ++outside;
    }
  }
  // Three standard errors, 50 draws: one miss is within chance (p ~ 0.13).
  CHECK(outside <= 1);
}

TEST_CASE("property: equidistant iterates shrink and tend to 0")
{
  const MixtureSpec spec(vec({1.0, 1.0}), CovarianceModel::identity(2));
  Vector l = vec({2.0, -2.0});
  double prev = l.norm();
  for (int t = 0; t < 20000 && prev >= 0.01; ++t) {
    l = em2g::population_update(l, spec.mu(), spec.cov());
    CHECK(std::abs(l(0) + l(1)) <= 1e-12);
    CHECK(l.norm() > 0.0);
    CHECK(l.norm() < prev);
    prev = l.norm();
  }
  CHECK(prev < 0.01);
}

TEST_CASE("shifted update averages the two offset mixtures")
{
  const auto id = CovarianceModel::identity(2);
  const Vector mu = vec({1.0, 0.5});
  const Vector lambda = vec({0.8, 0.4});
  CHECK((em2g::shifted_population_update(lambda, mu, Vector::Zero(2), id) -
         em2g::population_update(lambda, mu, id))
          .norm() <= 1e-15);
}
