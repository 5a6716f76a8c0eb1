// Copyright (c) 2026 The bmcd authors.
//
// Licensed under the Apache License, Version 2.0 (the "License").
// You may not use this file except in compliance with the License. You may
// obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0.
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Double-exponential (tanh-sinh) quadrature on a finite interval.
//
// The integrand receives the abscissa together with its distances to both
// endpoints, computed without cancellation, so integrands with endpoint
// singularities such as (1 - v)^(-xi) can be evaluated accurately right
// up to the boundary.

#pragma once

#include <cmath>
#include <numbers>
#include <vector>

namespace bmcd {

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  int levels = 0;
};

namespace detail {

struct TanhSinhNode {
  double x;      // abscissa on (-1, 1)
  double left;   // 1 + x
  double right;  // 1 - x
  double weight;
};

// Nodes at t = k h for odd k (plus t = 0 on level 0), h = 2^-level.
inline std::vector<TanhSinhNode> tanh_sinh_level(int level, double t_max) {
  std::vector<TanhSinhNode> nodes;
  const double h = std::ldexp(1.0, -level);
  const int step = level == 0 ? 1 : 2;
  const int first = level == 0 ? 0 : 1;
  for (int k = first; k * h <= t_max; k += step) {
    const double t = k * h;
    const double s = 0.5 * std::numbers::pi * std::sinh(t);
    const double cs = std::cosh(s);
    const double w = 0.5 * std::numbers::pi * std::cosh(t) / (cs * cs);
    const double e = std::exp(-2.0 * s);
    const double right = 2.0 * e / (1.0 + e);
    const double left = 2.0 / (1.0 + e);
    nodes.push_back({std::tanh(s), left, right, w});
  }
  return nodes;
}

inline const std::vector<TanhSinhNode>& cached_level(int level) {
  static constexpr int kMaxLevel = 10;
  static constexpr double kTMax = 4.0;
  static const std::vector<std::vector<TanhSinhNode>> levels = [] {
    std::vector<std::vector<TanhSinhNode>> out;
    for (int l = 0; l <= kMaxLevel; ++l) out.push_back(tanh_sinh_level(l, kTMax));
    return out;
  }();
  return levels.at(static_cast<std::size_t>(level));
}

}  // namespace detail

/// Integrates f over [a, b]. f is called as f(x, x - a, b - x).
/// Refines the step until successive estimates differ by less than
/// max(abs_tol, rel_tol * |I|).
template <typename F>
QuadratureResult integrate_tanh_sinh(F&& f, double a, double b, double abs_tol = 1e-12,
                                     double rel_tol = 1e-12, int max_level = 10) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  auto eval_level = [&](int level) {
    double sum = 0.0;
    for (const auto& n : detail::cached_level(level)) {
      if (n.x == 0.0) {
        sum += n.weight * f(mid, half, half);
        continue;
      }
      const double near = half * n.right;
      const double far = half * n.left;
      if (near <= 0.0) continue;
      sum += n.weight * (f(b - near, far, near) + f(a + near, near, far));
    }
    return sum;
  };

  double sum = eval_level(0);
  double estimate = half * sum;
  QuadratureResult result{estimate, INFINITY, 0};
  for (int level = 1; level <= max_level; ++level) {
    sum += eval_level(level);
    const double next = half * sum * std::ldexp(1.0, -level);
    const double err = std::abs(next - estimate);
    estimate = next;
    result = {estimate, err, level};
    if (level >= 3 && err <= std::max(abs_tol, rel_tol * std::abs(estimate))) break;
  }
  return result;
}

}  // namespace bmcd
