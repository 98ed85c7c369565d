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

#ifndef EM2G_CORE_QUADRATURE_HPP_
#define EM2G_CORE_QUADRATURE_HPP_

#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <numbers>
#include <vector>

namespace em2g
{

struct QuadratureConfig
{
  /// Gauss-Hermite order for the smooth regime. Must be >= 20.
  int order = 80;
};

void validate(const QuadratureConfig & quad);

/// Probabilists' Gauss-Hermite rule: sum_i w_i f(x_i) ~ E_{y~N(0,1)}[f(y)].
/// Weights sum to one.
struct GaussHermiteRule
{
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Cached per order; the returned reference stays valid for the process
/// lifetime and is safe to share between threads.
const GaussHermiteRule & gauss_hermite_rule(int order);

/// Breakpoints of the composite rule used when `sharpness` > 1: covers
/// [shift - 12, shift + 12] with unit panels, refined geometrically toward 0
/// down to width 1/sharpness.
std::vector<double> panel_breakpoints(double shift, double sharpness);

/// E_{y~N(0,1)}[g(y + shift)] for an integrand g that is smooth except for a
/// transition of width ~1/sharpness around 0 (tanh(a z) and friends).
///
/// sharpness <= 1 uses the Gauss-Hermite rule directly, which converges
/// geometrically because the nearest complex singularity of tanh(a z) is at
/// distance pi/(2a) >= pi/2. Sharper integrands use composite 30-point
/// Gauss-Legendre panels against the Gaussian density.
template <class F>
double expect_shifted_normal(F && g, double shift, double sharpness, const QuadratureConfig & quad)
{
  if (std::abs(sharpness) <= 1.0) {
    const auto & rule = gauss_hermite_rule(quad.order);
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      acc += rule.weights[i] * g(rule.nodes[i] + shift);
    }
    return acc;
  }
  const double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
  const auto integrand = [&](double z) {
    const double u = z - shift;
    return g(z) * inv_sqrt_2pi * std::exp(-0.5 * u * u);
  };
  const auto cuts = panel_breakpoints(shift, std::abs(sharpness));
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    acc += boost::math::quadrature::gauss<double, 30>::integrate(integrand, cuts[i], cuts[i + 1]);
  }
  return acc;
}

}  // namespace em2g

#endif  // EM2G_CORE_QUADRATURE_HPP_
