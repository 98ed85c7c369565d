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

#include "core/quadrature.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "core/error.hpp"

namespace em2g
{
namespace
{

constexpr double kPanelHalfWidth = 12.0;

// Orthonormal probabilists' Hermite recurrence:
//   p_0 = 1, p_1 = x, p_{k+1} = (x p_k - sqrt(k) p_{k-1}) / sqrt(k+1).
// Returns p_n(x) and fills sum_{k<n} p_k(x)^2 and p_{n-1}(x).
double hermite_orthonormal(int n, double x, double & sum_sq, double & p_prev)
{
  double pkm1 = 0.0;
  double pk = 1.0;
  sum_sq = 0.0;
  for (int k = 0; k < n; ++k) {
    sum_sq += pk * pk;
    const double next = (x * pk - std::sqrt(static_cast<double>(k)) * pkm1) /
                        std::sqrt(static_cast<double>(k + 1));
    pkm1 = pk;
    pk = next;
  }
  p_prev = pkm1;
  return pk;
}

GaussHermiteRule build_rule(int n)
{
  // Golub-Welsch for the starting nodes.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi, Eigen::EigenvaluesOnly);

  GaussHermiteRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = eig.eigenvalues()(i);
    double sum_sq = 0.0;
    double p_prev = 0.0;
    // Newton polish on p_n, p_n' = sqrt(n) p_{n-1}.
    for (int it = 0; it < 8; ++it) {
      const double pn = hermite_orthonormal(n, x, sum_sq, p_prev);
      const double step = pn / (std::sqrt(static_cast<double>(n)) * p_prev);
      x -= step;
      if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(x))) {
        break;
      }
    }
    hermite_orthonormal(n, x, sum_sq, p_prev);
    rule.nodes[i] = x;
    rule.weights[i] = 1.0 / sum_sq;
  }
  // Enforce exact node symmetry; odd integrands then cancel pairwise.
  for (int i = 0; i < n / 2; ++i) {
    const double x = 0.5 * (rule.nodes[n - 1 - i] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[n - 1 - i] + rule.weights[i]);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) {
    rule.nodes[n / 2] = 0.0;
  }
  return rule;
}

}  // namespace

void validate(const QuadratureConfig & quad)
{
  if (quad.order < 20) {
    throw InvalidArgument(
      "quadrature order must be at least 20, got " + std::to_string(quad.order));
  }
  if (quad.order > 400) {
    throw InvalidArgument("quadrature order above 400 is not supported");
  }
}

const GaussHermiteRule & gauss_hermite_rule(int order)
{
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<GaussHermiteRule>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto & slot = cache[order];
  if (!slot) {
    slot = std::make_unique<GaussHermiteRule>(build_rule(order));
  }
  return *slot;
}

std::vector<double> panel_breakpoints(double shift, double sharpness)
{
  const double lo = shift - kPanelHalfWidth;
  const double hi = shift + kPanelHalfWidth;
  std::vector<double> cuts;
  cuts.reserve(96);
  for (int j = -static_cast<int>(kPanelHalfWidth); j <= static_cast<int>(kPanelHalfWidth); ++j) {
    cuts.push_back(shift + j);
  }
  if (lo < 0.0 && 0.0 < hi) {
    cuts.push_back(0.0);
    for (double w = 1.0 / sharpness; w < 1.0; w *= 2.0) {
      if (-w > lo) {
        cuts.push_back(-w);
      }
      if (w < hi) {
        cuts.push_back(w);
      }
    }
  }
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> out;
  out.reserve(cuts.size());
  for (double c : cuts) {
    if (out.empty() || c - out.back() > 1e-13) {
      out.push_back(c);
    }
  }
  return out;
}

}  // namespace em2g
