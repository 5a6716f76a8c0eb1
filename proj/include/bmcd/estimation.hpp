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

// Estimators for the spell-duration laws: empirical f1 plus probability
// weighted moments for the hurdle eGPD, EM for the geometric mixture, and the
// geometric maximum-likelihood baseline.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bmcd/distributions.hpp"
#include "bmcd/egpd.hpp"
#include "bmcd/error.hpp"
#include "bmcd/optimize.hpp"
#include "bmcd/quadrature.hpp"
#include "bmcd/rng.hpp"
#include "bmcd/summation.hpp"

namespace bmcd {

enum class FitStatus { Converged, NonConverged, InsufficientData };

inline const char* to_string(FitStatus s) {
  switch (s) {
    case FitStatus::Converged: return "CONVERGED";
    case FitStatus::NonConverged: return "NON_CONVERGED";
    case FitStatus::InsufficientData: return "INSUFFICIENT_DATA";
  }
  return "UNKNOWN";
}

struct FitDiagnostics {
  bool converged = false;
  int iterations = 0;
  double objective = std::numeric_limits<double>::quiet_NaN();
  int restart_index = -1;
  bool at_clamp = false;                // PWM: xi fitted at the +-0.99 clamp
  int monotonicity_violations = 0;      // EM: iterations where the log-likelihood fell
  std::vector<double> loglik_trace;     // EM: trace of the selected restart
  std::string message;
};

/// params is empty only for InsufficientData.
template <typename Params>
struct FitResult {
  std::optional<Params> params;
  std::int64_t n_obs = 0;
  FitStatus status = FitStatus::InsufficientData;
  FitDiagnostics diagnostics;
};

/// Sorted distinct durations with multiplicities.
struct DurationCounts {
  std::vector<Duration> values;
  std::vector<std::int64_t> counts;
  std::int64_t total = 0;
};

inline DurationCounts count_durations(std::span<const Duration> durations) {
  std::vector<Duration> sorted(durations.begin(), durations.end());
  std::sort(sorted.begin(), sorted.end());
  DurationCounts out;
  for (Duration d : sorted) {
    require(d >= 1, ErrorCode::InvalidArgument, "durations must be >= 1");
    if (out.values.empty() || out.values.back() != d) {
      out.values.push_back(d);
      out.counts.push_back(0);
    }
    ++out.counts.back();
  }
  out.total = static_cast<std::int64_t>(sorted.size());
  return out;
}

// ---------------------------------------------------------------------------
// Geometric baseline and f1

inline double estimate_f1(std::span<const Duration> durations) {
  require(!durations.empty(), ErrorCode::InvalidArgument, "estimate_f1 requires a non-empty sample");
  const auto ones = std::count(durations.begin(), durations.end(), Duration{1});
  return static_cast<double>(ones) / static_cast<double>(durations.size());
}

inline FitResult<GeometricParams> fit_geometric(std::span<const Duration> durations) {
  require(!durations.empty(), ErrorCode::InvalidArgument, "fit_geometric requires a non-empty sample");
  CompensatedSum s;
  for (Duration d : durations) {
    require(d >= 1, ErrorCode::InvalidArgument, "durations must be >= 1");
    s += static_cast<double>(d);
  }
  const double mean = s.value() / static_cast<double>(durations.size());
  FitResult<GeometricParams> out;
  out.params = GeometricParams{std::min(1.0, 1.0 / mean)};
  out.n_obs = static_cast<std::int64_t>(durations.size());
  out.status = FitStatus::Converged;
  out.diagnostics.converged = true;
  return out;
}

// ---------------------------------------------------------------------------
// Probability weighted moments

/// Empirical mu_s = E[X (1 - F(X))^s], s = 0, 1, 2, from unbiased
/// order-statistic weights w_s(i) = prod_{j=1..s} (m - i - j + 1) / (m - j).
inline std::array<double, 3> sample_pwms(std::vector<double> x) {
  const std::size_t m = x.size();
  require(m >= 3, ErrorCode::InvalidArgument, "sample PWMs need at least three observations");
  std::sort(x.begin(), x.end());
  CompensatedSum b0, b1, b2;
  const double md = static_cast<double>(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double i = static_cast<double>(k + 1);
    const double w1 = (md - i) / (md - 1.0);
    const double w2 = w1 * (md - i - 1.0) / (md - 2.0);
    b0 += x[k];
    b1 += x[k] * w1;
    b2 += x[k] * w2;
  }
  return {b0.value() / md, b1.value() / md, b2.value() / md};
}

/// Model mu_s for the continuous eGPD. mu_0 is the closed-form mean; mu_1 and
/// mu_2 integrate Q(v) (1 - v)^s over (0, 1) by tanh-sinh in a shared pass.
inline std::array<double, 3> model_pwms(const Egpd1Params& p, double abs_tol = 1e-10, double rel_tol = 1e-10) {
  validate(p);
  require(p.xi < 1.0, ErrorCode::MeanUndefined, "PWMs require xi < 1");
  auto quantile = [&](double v, double vc) {
    const double log_v = v < 0.5 ? std::log(v) : std::log1p(-vc);
    const double c = -std::expm1(log_v / p.kappa);
    if (c <= 0.0) return 0.0;  // (1 - v)^s factor vanishes faster than Q grows
    return p.sigma * detail::gp_quantile_upper(p.xi, std::log(c));
  };
  std::array<double, 2> sum{0.0, 0.0}, estimate{0.0, 0.0};
  auto add_level = [&](int level) {
    for (const auto& n : detail::cached_level(level)) {
      // v on (0, 1): v = (1 + x) / 2, 1 - v = (1 - x) / 2.
      const double v = 0.5 * n.left, vc = 0.5 * n.right;
      if (vc <= 0.0 || v <= 0.0) continue;
      auto accumulate = [&](double a, double ac) {
        const double q = quantile(a, ac);
        sum[0] += n.weight * q * ac;
        sum[1] += n.weight * q * ac * ac;
      };
      accumulate(v, vc);
      if (n.x != 0.0) accumulate(vc, v);
    }
  };
  add_level(0);
  estimate = {0.5 * sum[0], 0.5 * sum[1]};
  for (int level = 1; level <= 10; ++level) {
    add_level(level);
    const double scale = 0.5 * std::ldexp(1.0, -level);
    const std::array<double, 2> next{scale * sum[0], scale * sum[1]};
    const double err = std::max(std::abs(next[0] - estimate[0]), std::abs(next[1] - estimate[1]));
    estimate = next;
    if (level >= 3 && err <= std::max(abs_tol, rel_tol * std::abs(next[0]))) break;
  }
  return {egpd1_mean(p), estimate[0], estimate[1]};
}

struct PwmOptions {
  std::int64_t min_tail_count = 10;
  double objective_tol = 1e-10;
  double step_tol = 1e-9;
  double xi_clamp = 0.99;
  int max_evaluations = 1500;
};

/// Fits (kappa, sigma, xi) to {tau - 2 : tau >= 2} by least-squares matching
/// of the first three PWMs, scaled by the sample mean so the tolerance is
/// relative. Starts come from a 3 x 3 x 5 grid and run best-first until one
/// reaches the objective tolerance.
inline FitResult<Egpd1Params> pwm_fit_egpd(std::span<const Duration> durations, const PwmOptions& opt = {}) {
  std::vector<double> x;
  for (Duration d : durations) {
    require(d >= 1, ErrorCode::InvalidArgument, "durations must be >= 1");
    if (d >= 2) x.push_back(static_cast<double>(d - 2));
  }
  FitResult<Egpd1Params> out;
  out.n_obs = static_cast<std::int64_t>(x.size());
  if (out.n_obs < std::max<std::int64_t>(opt.min_tail_count, 3)) {
    out.status = FitStatus::InsufficientData;
    out.diagnostics.message = "fewer than min_tail_count durations >= 2";
    return out;
  }
  const auto target = sample_pwms(x);
  const double scale = target[0];
  if (!(scale > 0.0)) {
    out.status = FitStatus::NonConverged;
    out.params = Egpd1Params{1.0, std::numeric_limits<double>::min() * 1e10, 0.0};
    out.diagnostics.message = "zero-variance sample: sigma at the zero boundary";
    return out;
  }

  const double clamp = opt.xi_clamp;
  auto decode = [&](const std::array<double, 3>& t) {
    return Egpd1Params{std::exp(t[0]), std::exp(t[1]), std::clamp(t[2], -clamp, clamp)};
  };
  auto objective = [&](const std::array<double, 3>& t) {
    if (!(std::abs(t[0]) < 30.0) || !(std::abs(t[1] - std::log(scale)) < 30.0)) {
      return std::numeric_limits<double>::infinity();
    }
    const Egpd1Params p = decode(t);
    const auto mu = model_pwms(p);
    double f = 0.0;
    for (std::size_t s = 0; s < 3; ++s) {
      const double r = (mu[s] - target[s]) / scale;
      f += r * r;
    }
    const double excess = t[2] - p.xi;
    return f + excess * excess;
  };

  struct Start {
    std::array<double, 3> t;
    double value;
  };
  std::vector<Start> starts;
  for (double kappa : {0.5, 1.0, 2.0})
    for (double sigma : {scale / 2.0, scale, 2.0 * scale})
      for (double xi : {-0.3, -0.1, 0.0, 0.2, 0.4}) {
        const std::array<double, 3> t{std::log(kappa), std::log(sigma), xi};
        starts.push_back({t, objective(t)});
      }
  std::stable_sort(starts.begin(), starts.end(), [](const Start& a, const Start& b) { return a.value < b.value; });

  NelderMeadOptions nm;
  nm.value_tol = opt.objective_tol;
  nm.step_tol = opt.step_tol;
  nm.max_evaluations = opt.max_evaluations;
  const std::array<double, 3> step{0.25, 0.25, 0.1};

  NelderMeadResult<3> best;
  int total_iterations = 0;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    // Restarting from the reported vertex refreshes a collapsed simplex.
    auto r = nelder_mead(objective, starts[k].t, step, nm);
    total_iterations += r.iterations;
    if (!r.value_reached && r.value < std::numeric_limits<double>::infinity()) {
      auto again = nelder_mead(objective, r.x, step, nm);
      total_iterations += again.iterations;
      if (again.value <= r.value) r = again;
    }
    if (r.value < best.value) {
      best = r;
      out.diagnostics.restart_index = static_cast<int>(k);
    }
    if (r.value_reached) break;
  }
  const Egpd1Params fitted = decode(best.x);
  out.params = fitted;
  out.diagnostics.iterations = total_iterations;
  out.diagnostics.objective = best.value;
  out.diagnostics.converged = best.value <= opt.objective_tol;
  out.diagnostics.at_clamp = std::abs(fitted.xi) >= clamp;
  out.status = out.diagnostics.converged ? FitStatus::Converged : FitStatus::NonConverged;
  if (out.diagnostics.at_clamp) out.diagnostics.message = "xi at clamp";
  return out;
}

/// Empirical f1 combined with the PWM fit of the shifted tail.
inline FitResult<HdeGpdParams> fit_hdegpd(std::span<const Duration> durations, const PwmOptions& opt = {}) {
  const double f1 = estimate_f1(durations);
  auto tail = pwm_fit_egpd(durations, opt);
  FitResult<HdeGpdParams> out;
  out.n_obs = static_cast<std::int64_t>(durations.size());
  out.status = tail.status;
  out.diagnostics = std::move(tail.diagnostics);
  if (tail.params) out.params = HdeGpdParams{f1, *tail.params};
  return out;
}

// ---------------------------------------------------------------------------
// EM for the two-component geometric mixture

namespace detail {

// log p + (d - 1) log(1 - p), with the d = 1 term exact at p = 1.
inline double log_geometric_pmf(double p, Duration d) {
  if (d == 1) return std::log(p);
  return std::log(p) + static_cast<double>(d - 1) * std::log1p(-p);
}

inline double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

struct EmTerms {
  double la;  // log pi + log pmf_1(d)
  double lb;  // log (1 - pi) + log pmf_2(d)
};

inline EmTerms em_terms(const GeomMixParams& m, Duration d) {
  return {std::log(m.pi) + log_geometric_pmf(m.p1, d), std::log1p(-m.pi) + log_geometric_pmf(m.p2, d)};
}

}  // namespace detail

inline double geommix_loglik(const DurationCounts& c, const GeomMixParams& m) {
  CompensatedSum s;
  for (std::size_t k = 0; k < c.values.size(); ++k) {
    const auto t = detail::em_terms(m, c.values[k]);
    s += static_cast<double>(c.counts[k]) * detail::log_sum_exp(t.la, t.lb);
  }
  return s.value();
}

/// One E-step and M-step. Components are not relabelled; an empty component
/// keeps its previous success probability.
inline GeomMixParams em_step(const DurationCounts& c, const GeomMixParams& m) {
  CompensatedSum w_sum, wd_sum, v_sum, vd_sum;
  for (std::size_t k = 0; k < c.values.size(); ++k) {
    const auto t = detail::em_terms(m, c.values[k]);
    // Responsibility of component 1, computed from the log-odds.
    const double w = t.la == -std::numeric_limits<double>::infinity() ? 0.0
                     : t.lb == -std::numeric_limits<double>::infinity() ? 1.0
                                                                         : 1.0 / (1.0 + std::exp(t.lb - t.la));
    const double n = static_cast<double>(c.counts[k]);
    const double d = static_cast<double>(c.values[k]);
    w_sum += n * w;
    wd_sum += n * w * d;
    v_sum += n * (1.0 - w);
    vd_sum += n * (1.0 - w) * d;
  }
  GeomMixParams next = m;
  next.pi = w_sum.value() / static_cast<double>(c.total);
  if (w_sum.value() > 0.0) next.p1 = std::min(1.0, w_sum.value() / wd_sum.value());
  if (v_sum.value() > 0.0) next.p2 = std::min(1.0, v_sum.value() / vd_sum.value());
  return next;
}

inline GeomMixParams em_step(std::span<const Duration> durations, const GeomMixParams& m) {
  return em_step(count_durations(durations), m);
}

struct EmOptions {
  int n_restarts = 10;
  double rel_tol = 1e-6;
  int max_iter = 500;
  std::uint64_t seed = 0;
  double monotonicity_slack = 1e-9;
};

inline FitResult<GeomMixParams> em_fit_geommix(std::span<const Duration> durations, const EmOptions& opt = {}) {
  require(!durations.empty(), ErrorCode::InvalidArgument, "em_fit_geommix requires a non-empty sample");
  require(opt.n_restarts >= 1, ErrorCode::InvalidArgument, "n_restarts must be >= 1");
  const DurationCounts c = count_durations(durations);

  FitResult<GeomMixParams> out;
  out.n_obs = c.total;
  double best_ll = -std::numeric_limits<double>::infinity();
  int violations = 0, total_iterations = 0;
  for (int r = 0; r < opt.n_restarts; ++r) {
    Rng rng(derive_seed(opt.seed, "em", static_cast<std::uint64_t>(r)));
    GeomMixParams m;
    m.pi = 0.1 + 0.8 * rng.uniform();
    const double a = 0.05 + 0.9 * rng.uniform();
    const double b = 0.05 + 0.9 * rng.uniform();
    m.p1 = std::max(a, b);
    m.p2 = std::min(a, b);

    std::vector<double> trace{geommix_loglik(c, m)};
    bool converged = false;
    int it = 0;
    while (it < opt.max_iter) {
      m = em_step(c, m);
      ++it;
      const double prev = trace.back();
      const double ll = geommix_loglik(c, m);
      trace.push_back(ll);
      if (ll < prev - opt.monotonicity_slack * std::max(1.0, std::abs(prev))) ++violations;
      if (std::abs(ll - prev) <= opt.rel_tol * std::abs(prev)) {
        converged = true;
        break;
      }
    }
    total_iterations += it;
    if (trace.back() > best_ll || !out.params) {
      best_ll = trace.back();
      out.params = m;
      out.diagnostics.converged = converged;
      out.diagnostics.restart_index = r;
      out.diagnostics.loglik_trace = std::move(trace);
    }
  }
  GeomMixParams& m = *out.params;
  if (m.p1 < m.p2) {
    std::swap(m.p1, m.p2);
    m.pi = 1.0 - m.pi;
  }
  out.diagnostics.iterations = total_iterations;
  out.diagnostics.objective = best_ll;
  out.diagnostics.monotonicity_violations = violations;
  out.status = out.diagnostics.converged ? FitStatus::Converged : FitStatus::NonConverged;
  return out;
}

}  // namespace bmcd
