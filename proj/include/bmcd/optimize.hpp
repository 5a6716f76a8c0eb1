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

// Derivative-free Nelder-Mead simplex minimisation.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>

namespace bmcd {

template <std::size_t N>
struct NelderMeadResult {
  std::array<double, N> x{};
  double value = std::numeric_limits<double>::infinity();
  int evaluations = 0;
  int iterations = 0;
  bool value_reached = false;  // value <= value_tol
  bool step_converged = false;  // simplex diameter below step_tol (relative)
};

struct NelderMeadOptions {
  double value_tol = 0.0;
  double step_tol = 1e-9;
  int max_evaluations = 2000;
};

/// Standard coefficients (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
template <std::size_t N, typename F>
NelderMeadResult<N> nelder_mead(F&& f, const std::array<double, N>& start, const std::array<double, N>& step,
                                const NelderMeadOptions& opt = {}) {
  using Point = std::array<double, N>;
  std::array<Point, N + 1> simplex;
  std::array<double, N + 1> values;
  NelderMeadResult<N> out;
  auto eval = [&](const Point& p) {
    ++out.evaluations;
    const double v = f(p);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };
  simplex[0] = start;
  values[0] = eval(start);
  for (std::size_t i = 0; i < N; ++i) {
    simplex[i + 1] = start;
    simplex[i + 1][i] += step[i];
    values[i + 1] = eval(simplex[i + 1]);
  }
  std::array<std::size_t, N + 1> order;
  for (;;) {
    for (std::size_t i = 0; i <= N; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order[0], worst = order[N], second = order[N - 1];

    double diameter = 0.0, scale = 0.0;
    for (std::size_t i = 0; i <= N; ++i)
      for (std::size_t k = 0; k < N; ++k) {
        diameter = std::max(diameter, std::abs(simplex[i][k] - simplex[best][k]));
        scale = std::max(scale, std::abs(simplex[best][k]));
      }
    out.x = simplex[best];
    out.value = values[best];
    out.value_reached = values[best] <= opt.value_tol;
    out.step_converged = diameter <= opt.step_tol * std::max(1.0, scale);
    if (out.value_reached || out.step_converged || out.evaluations >= opt.max_evaluations) return out;
    ++out.iterations;

    Point centroid{};
    for (std::size_t i = 0; i <= N; ++i) {
      if (i == worst) continue;
      for (std::size_t k = 0; k < N; ++k) centroid[k] += simplex[i][k] / static_cast<double>(N);
    }
    auto along = [&](double t) {
      Point p;
      for (std::size_t k = 0; k < N; ++k) p[k] = centroid[k] + t * (simplex[worst][k] - centroid[k]);
      return p;
    };
    const Point reflected = along(-1.0);
    const double fr = eval(reflected);
    if (fr < values[best]) {
      const Point expanded = along(-2.0);
      const double fe = eval(expanded);
      if (fe < fr) {
        simplex[worst] = expanded;
        values[worst] = fe;
      } else {
        simplex[worst] = reflected;
        values[worst] = fr;
      }
      continue;
    }
    if (fr < values[second]) {
      simplex[worst] = reflected;
      values[worst] = fr;
      continue;
    }
    const bool outside = fr < values[worst];
    const Point contracted = along(outside ? -0.5 : 0.5);
    const double fc = eval(contracted);
    if (fc < (outside ? fr : values[worst])) {
      simplex[worst] = contracted;
      values[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= N; ++i) {
      if (i == best) continue;
      for (std::size_t k = 0; k < N; ++k) simplex[i][k] = simplex[best][k] + 0.5 * (simplex[i][k] - simplex[best][k]);
      values[i] = eval(simplex[i]);
    }
  }
}

}  // namespace bmcd
