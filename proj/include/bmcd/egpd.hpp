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

// Type-1 extended generalized Pareto distribution, F(z) = H_xi(z / sigma)^kappa.

#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "bmcd/error.hpp"
#include "bmcd/quadrature.hpp"
#include "bmcd/rng.hpp"
#include "bmcd/special_functions.hpp"
#include "bmcd/summation.hpp"

namespace bmcd {

/// |xi| below this is evaluated on the exponential (xi = 0) branch.
inline constexpr double kXiZeroBand = 1e-8;

struct Egpd1Params {
  double kappa = 1.0;
  double sigma = 1.0;
  double xi = 0.0;

  friend bool operator==(const Egpd1Params&, const Egpd1Params&) = default;
};

inline void validate(const Egpd1Params& p) {
  require(std::isfinite(p.kappa) && p.kappa > 0.0, ErrorCode::InvalidParameters, "eGPD kappa must be > 0");
  require(std::isfinite(p.sigma) && p.sigma > 0.0, ErrorCode::InvalidParameters, "eGPD sigma must be > 0");
  require(std::isfinite(p.xi), ErrorCode::InvalidParameters, "eGPD xi must be finite");
}

/// Upper end of the support, +inf unless xi < 0.
inline double egpd1_support_max(const Egpd1Params& p) {
  return p.xi < 0.0 ? -p.sigma / p.xi : std::numeric_limits<double>::infinity();
}

namespace detail {

// log1p(xi * y) / xi, the cumulative hazard of the standard GP law.
inline double gp_cumulative_hazard(double xi, double y) {
  if (xi == 0.0) return y;
  const double t = xi * y;
  if (std::abs(xi) < kXiZeroBand && std::abs(t) < 1e-3) {
    return y * (1.0 - t / 2.0 + t * t / 3.0 - t * t * t / 4.0);
  }
  return std::log1p(t) / xi;
}

// P(Z > y) for a standard GP variable; 0 beyond a bounded support.
inline double gp_survival(double xi, double y) {
  if (y <= 0.0) return 1.0;
  if (xi < 0.0 && xi * y <= -1.0) return 0.0;
  return std::exp(-gp_cumulative_hazard(xi, y));
}

// GP quantile from the upper-tail probability c = 1 - H: y = ((c)^(-xi) - 1) / xi.
inline double gp_quantile_upper(double xi, double log_c) {
  if (xi == 0.0) return -log_c;
  if (std::abs(xi) < kXiZeroBand) {
    const double t = -xi * log_c;
    if (std::abs(t) < 1e-3) return -log_c * (1.0 + t / 2.0 + t * t / 6.0);
  }
  return std::expm1(-xi * log_c) / xi;
}

}  // namespace detail

inline double egpd1_cdf(const Egpd1Params& p, double z) {
  validate(p);
  require(!(z < 0.0), ErrorCode::InvalidArgument, "egpd1_cdf requires z >= 0");
  const double s = detail::gp_survival(p.xi, z / p.sigma);
  if (s >= 1.0) return 0.0;
  if (s <= 0.0) return 1.0;
  return std::exp(p.kappa * std::log1p(-s));
}

/// 1 - F(z), accurate deep into the upper tail.
inline double egpd1_survival(const Egpd1Params& p, double z) {
  validate(p);
  if (z <= 0.0) return 1.0;
  const double s = detail::gp_survival(p.xi, z / p.sigma);
  if (s >= 1.0) return 1.0;
  if (s <= 0.0) return 0.0;
  return -std::expm1(p.kappa * std::log1p(-s));
}

/// Quantile F^{-1}(v) given v and its complement vc = 1 - v.
inline double egpd1_quantile(const Egpd1Params& p, double v, double vc) {
  validate(p);
  require(v >= 0.0 && vc >= 0.0, ErrorCode::InvalidArgument, "egpd1_quantile requires v in [0, 1]");
  if (v <= 0.0) return 0.0;
  if (vc <= 0.0) return egpd1_support_max(p);
  // w = v^(1/kappa) is the GP probability; c = 1 - w is its upper tail.
  const double log_v = v < 0.5 ? std::log(v) : std::log1p(-vc);
  const double c = -std::expm1(log_v / p.kappa);
  if (c <= 0.0) return egpd1_support_max(p);
  return p.sigma * detail::gp_quantile_upper(p.xi, std::log(c));
}

inline double egpd1_quantile(const Egpd1Params& p, double v) { return egpd1_quantile(p, v, 1.0 - v); }

inline double egpd1_sample(const Egpd1Params& p, Rng& rng) {
  const double u = rng.uniform_pos();
  return egpd1_quantile(p, u, 1.0 - u);
}

/// E[X]; the xi = 0 branch is the analytic limit sigma (psi(kappa + 1) + gamma).
inline double egpd1_mean(const Egpd1Params& p) {
  validate(p);
  require(p.xi < 1.0, ErrorCode::MeanUndefined, "eGPD mean requires xi < 1");
  if (std::abs(p.xi) < kXiZeroBand) {
    return p.sigma * (special::digamma(p.kappa + 1.0) + std::numbers::egamma);
  }
  // kappa * B(kappa, 1 - xi) - 1 through expm1 to limit cancellation near xi = 0.
  const double log_kb = std::log(p.kappa) + special::log_beta(p.kappa, 1.0 - p.xi);
  return p.sigma / p.xi * std::expm1(log_kb);
}

/// Integral of the survival function over [u, inf), i.e. E[(X - u)+].
inline double egpd1_tail_integral(const Egpd1Params& p, double u) {
  validate(p);
  require(p.xi < 1.0, ErrorCode::MeanUndefined, "eGPD tail integral requires xi < 1");
  require(u >= 0.0, ErrorCode::InvalidArgument, "egpd1_tail_integral requires u >= 0");
  if (u == 0.0) return egpd1_mean(p);
  if (p.xi < 0.0 && u >= egpd1_support_max(p)) return 0.0;

  if (std::abs(p.xi) < kXiZeroBand) {
    // sigma * int_0^{t_u} (1 - (1 - t)^kappa) / t dt with t = exp(-x / sigma).
    const double t_u = std::exp(-u / p.sigma);
    const double one_minus_t_u = -std::expm1(-u / p.sigma);
    const double kappa = p.kappa;
    auto g = [&](double t, double, double dr) {
      if (t <= 0.0) return kappa;
      const double one_minus_t = one_minus_t_u + dr;
      return -std::expm1(kappa * std::log(one_minus_t)) / t;
    };
    return p.sigma * integrate_tanh_sinh(g, 0.0, t_u, 1e-15, 1e-14).value;
  }

  // c = 1 - a_u is the GP upper-tail probability at u / sigma.
  const double c = detail::gp_survival(p.xi, u / p.sigma);
  if (c <= 0.0) return 0.0;
  const double a = 1.0 - c;
  const double b = std::exp(special::log_beta(p.kappa, 1.0 - p.xi));
  // B(kappa, 1 - xi) - b_a(kappa, 1 - xi) = B * I_c(1 - xi, kappa)
  const double upper_beta = b * special::ibeta_pair(1.0 - p.xi, p.kappa, c, a).first;
  const double survival_u = -std::expm1(p.kappa * std::log1p(-c));
  const double value = p.sigma * p.kappa / p.xi * upper_beta - (p.sigma / p.xi + u) * survival_u;
  return value > 0.0 ? value : 0.0;
}

/// Bracket on E[ceil(X)] = sum_{m >= 0} P(X > m).
struct CeilMeanBracket {
  double lower = 0.0;
  double upper = 0.0;
  double u = 0.0;
  bool exact = false;
};

/// For xi < 0 the sum is finite and evaluated exactly; otherwise
/// L_u = sum_{m < u} P(X > m) + int_u^inf P(X > x) dx <= E[ceil(X)] <= L_u + P(X > u).
inline CeilMeanBracket egpd1_ceil_mean_bracket(const Egpd1Params& p, double u) {
  validate(p);
  require(p.xi < 1.0, ErrorCode::MeanUndefined, "eGPD mean requires xi < 1");
  require(u >= 0.0 && u == std::floor(u), ErrorCode::InvalidArgument, "u must be a nonnegative integer");
  const double bound = egpd1_support_max(p);
  if (p.xi < 0.0 && bound <= u) {
    CompensatedSum s;
    for (double m = 0.0; m < bound; m += 1.0) s += egpd1_survival(p, m);
    return {s.value(), s.value(), std::ceil(bound), true};
  }
  CompensatedSum s;
  for (double m = 0.0; m < u; m += 1.0) s += egpd1_survival(p, m);
  s += egpd1_tail_integral(p, u);
  const double lower = s.value();
  return {lower, lower + egpd1_survival(p, u), u, false};
}

}  // namespace bmcd
