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

// Model validation: empirical versus model exit probabilities, the
// chi-squared goodness-of-fit test on exit probabilities, the pooled
// bivariate autocorrelation of cycle durations, and parametric bootstrap
// Q-Q envelopes.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "bmcd/chain.hpp"
#include "bmcd/distributions.hpp"
#include "bmcd/error.hpp"
#include "bmcd/rng.hpp"
#include "bmcd/special_functions.hpp"

namespace bmcd {

// ---------------------------------------------------------------------------
// Exit curves

/// counts[d] = #{tau_k >= d} for d = 0..d_max + 1 (counts[0] = counts[1] = n).
inline std::vector<std::int64_t> tail_counts(std::span<const Duration> durations, Duration d_max) {
  require(d_max >= 1, ErrorCode::InvalidArgument, "d_max must be >= 1");
  std::vector<std::int64_t> hist(static_cast<std::size_t>(d_max) + 2, 0);
  for (Duration t : durations) {
    require(t >= 1, ErrorCode::InvalidArgument, "durations must be >= 1");
    ++hist[static_cast<std::size_t>(std::min(t, d_max + 1))];
  }
  std::vector<std::int64_t> counts(hist.size(), 0);
  std::int64_t running = 0;
  for (std::size_t d = hist.size(); d-- > 1;) {
    running += hist[d];
    counts[d] = running;
  }
  counts[0] = running;
  return counts;
}

struct EmpiricalExitProbs {
  std::vector<std::int64_t> counts;      // index d = 1..d_max + 1 (index 0 unused)
  std::vector<std::optional<double>> q;  // index d = 1..d_max; absent where counts[d] = 0
};

/// q_d = (N(d) - N(d + 1)) / N(d) with N(d) = #{tau >= d}.
inline EmpiricalExitProbs empirical_exit_probs(std::span<const Duration> durations, Duration d_max) {
  EmpiricalExitProbs out;
  out.counts = tail_counts(durations, d_max);
  out.q.assign(static_cast<std::size_t>(d_max) + 1, std::nullopt);
  for (Duration d = 1; d <= d_max; ++d) {
    const auto n = out.counts[static_cast<std::size_t>(d)];
    if (n > 0) out.q[static_cast<std::size_t>(d)] = static_cast<double>(n - out.counts[static_cast<std::size_t>(d + 1)]) / static_cast<double>(n);
  }
  return out;
}

/// q_d = pmf(d) / P(tau >= d), 1 where the survival has vanished.
inline std::vector<double> model_exit_probs(const DurationDistribution& dist, Duration d_max) {
  std::vector<double> q(static_cast<std::size_t>(d_max) + 1, 0.0);
  for (Duration d = 1; d <= d_max; ++d) {
    const double s = dist.survival(d - 1);
    q[static_cast<std::size_t>(d)] = s > 0.0 ? std::clamp(dist.pmf(d) / s, 0.0, 1.0) : 1.0;
  }
  return q;
}

struct ExitCurvePoint {
  Duration d = 0;
  double q_model = 0.0;
  std::optional<double> q_emp;
  std::optional<double> band_sd;  // sqrt(q_model (1 - q_model) / N(d))
  std::int64_t count = 0;         // N(d)
};

inline std::vector<ExitCurvePoint> exit_curve(std::span<const Duration> durations, const DurationDistribution& dist,
                                              Duration d_max) {
  const auto emp = empirical_exit_probs(durations, d_max);
  const auto model = model_exit_probs(dist, d_max);
  std::vector<ExitCurvePoint> out;
  for (Duration d = 1; d <= d_max; ++d) {
    const auto i = static_cast<std::size_t>(d);
    ExitCurvePoint p{d, model[i], emp.q[i], std::nullopt, emp.counts[i]};
    if (p.count > 0) p.band_sd = std::sqrt(p.q_model * (1.0 - p.q_model) / static_cast<double>(p.count));
    out.push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Goodness-of-fit test

enum class GofStatus { Ok, Singular, InsufficientData };

inline const char* to_string(GofStatus s) {
  switch (s) {
    case GofStatus::Ok: return "OK";
    case GofStatus::Singular: return "SINGULAR";
    case GofStatus::InsufficientData: return "INSUFFICIENT_DATA";
  }
  return "UNKNOWN";
}

struct GofOptions {
  std::optional<Duration> d_max;  // empty selects the automatic rule
  std::int64_t min_tail_count = 20;
  Duration d_max_floor = 3;
  double max_condition = 1e12;
};

struct GofResult {
  GofStatus status = GofStatus::InsufficientData;
  double statistic = std::numeric_limits<double>::quiet_NaN();
  int dof = 0;
  std::optional<double> p_value;
  Duration d_max = 0;
  std::int64_t n_spells = 0;
  double condition_number = std::numeric_limits<double>::quiet_NaN();
};

/// Largest d with N(d) >= min_tail_count, floored.
inline Duration auto_d_max(std::span<const Duration> durations, std::int64_t min_tail_count, Duration floor = 3) {
  Duration longest = 0;
  for (Duration t : durations) longest = std::max(longest, t);
  if (longest < 1) return floor;
  const auto counts = tail_counts(durations, longest);
  Duration best = 0;
  for (Duration d = 1; d <= longest; ++d)
    if (counts[static_cast<std::size_t>(d)] >= min_tail_count) best = d;
  return std::max(best, floor);
}

/// Covariance of (1{tau > i})_{i = 1..k}: Fbar(max(i, j)) - Fbar(i) Fbar(j).
inline Eigen::MatrixXd gof_sigma(const std::vector<double>& sbar, int k) {
  Eigen::MatrixXd s(k, k);
  for (int i = 1; i <= k; ++i)
    for (int j = 1; j <= k; ++j) s(i - 1, j - 1) = sbar[std::max(i, j)] - sbar[i] * sbar[j];
  return s;
}

/// Jacobian of x -> (1 - x_2, (1 - x_{d+1} / x_d)_{d >= 2}) at x_d = Fbar(d - 1).
inline Eigen::MatrixXd gof_jacobian(const std::vector<double>& sbar, int k) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
  t(0, 0) = -1.0;
  for (int i = 2; i <= k; ++i) {
    t(i - 1, i - 2) = sbar[i] / (sbar[i - 1] * sbar[i - 1]);
    t(i - 1, i - 1) = -1.0 / sbar[i - 1];
  }
  return t;
}

/// Q = N_n Delta' (T Sigma T')^{-1} Delta on d = 1..d_max - 1, referred to
/// chi-squared with d_max - 1 degrees of freedom.
inline GofResult gof_test(std::span<const Duration> durations, const DurationDistribution& dist,
                          const GofOptions& opt = {}) {
  GofResult out;
  out.n_spells = static_cast<std::int64_t>(durations.size());
  out.d_max = opt.d_max ? *opt.d_max : auto_d_max(durations, opt.min_tail_count, opt.d_max_floor);
  require(out.d_max >= 2, ErrorCode::InvalidArgument, "gof_test requires d_max >= 2");
  const int k = static_cast<int>(out.d_max - 1);
  out.dof = k;
  if (out.n_spells < out.d_max + 5) return out;
  const auto emp = empirical_exit_probs(durations, out.d_max);
  for (int d = 1; d <= k; ++d)
    if (!emp.q[static_cast<std::size_t>(d)]) return out;

  const auto q_model = model_exit_probs(dist, out.d_max);
  std::vector<double> sbar(static_cast<std::size_t>(k) + 1);
  for (int d = 0; d <= k; ++d) sbar[static_cast<std::size_t>(d)] = dist.survival(d);
  Eigen::VectorXd delta(k);
  for (int d = 1; d <= k; ++d) delta(d - 1) = *emp.q[static_cast<std::size_t>(d)] - q_model[static_cast<std::size_t>(d)];

  out.status = GofStatus::Singular;
  for (int d = 0; d < k; ++d)
    if (!(sbar[static_cast<std::size_t>(d)] > 0.0)) return out;
  const Eigen::MatrixXd t = gof_jacobian(sbar, k);
  const Eigen::MatrixXd m = t * gof_sigma(sbar, k) * t.transpose();
  if (!m.allFinite()) return out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  if (eig.info() != Eigen::Success) return out;
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  out.condition_number = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(out.condition_number <= opt.max_condition)) return out;

  const Eigen::VectorXd proj = eig.eigenvectors().transpose() * delta;
  double quad = 0.0;
  for (int i = 0; i < k; ++i) quad += proj(i) * proj(i) / eig.eigenvalues()(i);
  out.statistic = std::max(0.0, static_cast<double>(out.n_spells) * quad);
  out.p_value = special::chi2_survival(out.statistic, k);
  out.status = GofStatus::Ok;
  return out;
}

// ---------------------------------------------------------------------------
// Pooled bivariate autocorrelation

enum class AcfStatus { Ok, Degenerate, InsufficientData };

inline const char* to_string(AcfStatus s) {
  switch (s) {
    case AcfStatus::Ok: return "OK";
    case AcfStatus::Degenerate: return "DEGENERATE";
    case AcfStatus::InsufficientData: return "INSUFFICIENT_DATA";
  }
  return "UNKNOWN";
}

struct AcfLag {
  int lag = 0;
  // Entry (a, b) correlates component a of cycle k with component b of
  // cycle k + lag; 0 = dry, 1 = wet.
  std::array<std::array<double, 2>, 2> r{};
  std::int64_t pairs = 0;  // C_lag
  double bound = 0.0;      // 2 / sqrt(C_lag)
};

struct AcfMatrix {
  AcfStatus status = AcfStatus::InsufficientData;
  std::vector<AcfLag> lags;  // lags with C_lag = 0 are omitted
};

/// Cross-year pairs never enter: each year is its own series, and lag-l
/// products are pooled over within-year pairs against the grand mean.
inline AcfMatrix acf_bivariate(const CyclesByYear& cycles, int max_lag) {
  require(max_lag >= 0, ErrorCode::InvalidArgument, "max_lag must be >= 0");
  AcfMatrix out;
  std::int64_t total = 0;
  std::array<double, 2> mean{0.0, 0.0};
  for (const auto& [year, cs] : cycles) {
    for (const auto& [dry, wet] : cs) {
      mean[0] += static_cast<double>(dry);
      mean[1] += static_cast<double>(wet);
    }
    total += static_cast<std::int64_t>(cs.size());
  }
  if (total < 2) return out;
  mean[0] /= static_cast<double>(total);
  mean[1] /= static_cast<double>(total);

  auto gamma = [&](int lag, std::int64_t& pairs) {
    std::array<std::array<double, 2>, 2> g{};
    pairs = 0;
    for (const auto& [year, cs] : cycles) {
      for (std::size_t k = 0; k + static_cast<std::size_t>(lag) < cs.size(); ++k) {
        const Cycle& a = cs[k];
        const Cycle& b = cs[k + static_cast<std::size_t>(lag)];
        const std::array<double, 2> va{static_cast<double>(a.first) - mean[0], static_cast<double>(a.second) - mean[1]};
        const std::array<double, 2> vb{static_cast<double>(b.first) - mean[0], static_cast<double>(b.second) - mean[1]};
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) g[i][j] += va[i] * vb[j];
        ++pairs;
      }
    }
    if (pairs > 0)
      for (auto& row : g)
        for (double& v : row) v /= static_cast<double>(pairs);
    return g;
  };

  std::int64_t c0 = 0;
  const auto g0 = gamma(0, c0);
  if (!(g0[0][0] > 0.0) || !(g0[1][1] > 0.0)) {
    out.status = AcfStatus::Degenerate;
    return out;
  }
  const std::array<double, 2> inv_sd{1.0 / std::sqrt(g0[0][0]), 1.0 / std::sqrt(g0[1][1])};
  for (int lag = 0; lag <= max_lag; ++lag) {
    AcfLag row;
    row.lag = lag;
    const auto g = lag == 0 ? g0 : gamma(lag, row.pairs);
    if (lag == 0) row.pairs = c0;
    if (row.pairs == 0) continue;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) row.r[i][j] = inv_sd[i] * g[i][j] * inv_sd[j];
    row.bound = 2.0 / std::sqrt(static_cast<double>(row.pairs));
    out.lags.push_back(row);
  }
  out.status = AcfStatus::Ok;
  return out;
}

// ---------------------------------------------------------------------------
// Bootstrap Q-Q envelope

struct QqPoint {
  std::int64_t rank = 0;  // 1-based
  Duration observed = 0;
  Duration simulated = 0;  // rank-k value of the last replicate
  double lower = 0.0;
  double upper = 0.0;
  std::int64_t multiplicity = 0;  // ranks sharing this (observed, simulated) pair
};

struct QqEnvelope {
  int replicates = 0;
  double alpha = 0.05;
  std::vector<QqPoint> points;
};

/// Sample quantile by linear interpolation between order statistics
/// (h = (n - 1) p), on an already sorted range.
inline double sorted_quantile(std::span<const double> sorted, double p) {
  require(!sorted.empty(), ErrorCode::InvalidArgument, "quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Replicate b is drawn from the stream derive_seed(seed, "qq", b), so the
/// envelope does not depend on evaluation order.
inline QqEnvelope qq_envelope(std::span<const Duration> durations, const DurationDistribution& dist, int replicates = 1000,
                              double alpha = 0.05, std::uint64_t seed = 0) {
  require(replicates >= 1, ErrorCode::InvalidArgument, "replicates must be >= 1");
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
  QqEnvelope out;
  out.replicates = replicates;
  out.alpha = alpha;
  const std::size_t n = durations.size();
  if (n == 0) return out;
  std::vector<Duration> observed(durations.begin(), durations.end());
  std::sort(observed.begin(), observed.end());

  // by_rank[k * B + b] holds the rank-k value of replicate b.
  const auto b_count = static_cast<std::size_t>(replicates);
  std::vector<double> by_rank(n * b_count);
  std::vector<Duration> sample(n), last;
  for (std::size_t b = 0; b < b_count; ++b) {
    Rng rng(derive_seed(seed, "qq", static_cast<std::uint64_t>(b)));
    for (auto& x : sample) x = dist.sample(rng);
    std::sort(sample.begin(), sample.end());
    for (std::size_t k = 0; k < n; ++k) by_rank[k * b_count + b] = static_cast<double>(sample[k]);
    if (b + 1 == b_count) last = sample;
  }
  out.points.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::span<double> row(by_rank.data() + k * b_count, b_count);
    std::sort(row.begin(), row.end());
    out.points[k] = {static_cast<std::int64_t>(k + 1), observed[k], last[k], sorted_quantile(row, alpha / 2.0),
                     sorted_quantile(row, 1.0 - alpha / 2.0), 0};
  }
  // Both columns are sorted, so equal pairs form contiguous blocks.
  for (std::size_t k = 0; k < n;) {
    std::size_t e = k;
    while (e < n && out.points[e].observed == out.points[k].observed && out.points[e].simulated == out.points[k].simulated) ++e;
    for (std::size_t i = k; i < e; ++i) out.points[i].multiplicity = static_cast<std::int64_t>(e - k);
    k = e;
  }
  return out;
}

}  // namespace bmcd
