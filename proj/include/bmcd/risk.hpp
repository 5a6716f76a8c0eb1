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

// Extreme dry-spell metrics: the mean residual dry-spell duration
// E[tau - d | tau > d] and the long-run proportion of time spent in dry
// spells beyond d days, each reported as a certified [lower, upper] bracket.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "bmcd/chain.hpp"
#include "bmcd/distributions.hpp"
#include "bmcd/egpd.hpp"
#include "bmcd/error.hpp"
#include "bmcd/exit_probs.hpp"
#include "bmcd/summation.hpp"

namespace bmcd {

enum class RiskStatus { Converged, NonConverged, Undefined };

inline const char* to_string(RiskStatus s) {
  switch (s) {
    case RiskStatus::Converged: return "CONVERGED";
    case RiskStatus::NonConverged: return "NON_CONVERGED";
    case RiskStatus::Undefined: return "UNDEFINED";
  }
  return "UNKNOWN";
}

/// Undefined (conditioning on a null event) carries NaN bounds.
struct RiskBound {
  double lower = 0.0;
  double upper = 0.0;
  double width = 0.0;
  double u_used = 0.0;
  double target_precision = 0.0;
  RiskStatus status = RiskStatus::Converged;
};

inline constexpr double kRiskFirstU = 64.0;
inline constexpr double kRiskMaxU = 67108864.0;  // 2^26

namespace detail {

inline RiskBound make_bound(double lower, double upper, double u, double precision) {
  RiskBound b{lower, upper, upper - lower, u, precision, RiskStatus::Converged};
  if (!(b.width < precision) && b.width != 0.0) b.status = RiskStatus::NonConverged;
  return b;
}

inline RiskBound undefined_bound(double precision) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return {nan, nan, nan, 0.0, precision, RiskStatus::Undefined};
}

/// Brackets sum_{m >= a} P(X > m), extending the partial sum as u doubles.
/// For xi < 0 the sum stops at the support bound and is exact, unless that
/// bound is too far out to enumerate.
class TailSumBracket {
 public:
  TailSumBracket(const Egpd1Params& p, Duration a) : p_(p), a_(static_cast<double>(a)), next_m_(a_) {
    validate(p);
    require(p.xi < 1.0, ErrorCode::MeanUndefined, "dry-spell mean requires xi < 1");
    const double bound = egpd1_support_max(p);
    if (p.xi < 0.0 && bound <= kRiskMaxU) {
      for (double m = a_; m < bound; m += 1.0) partial_ += egpd1_survival(p_, m);
      lower_ = upper_ = partial_.value();
      u_ = std::max(a_, std::ceil(bound));
      exact_ = true;
    }
  }

  bool exact() const { return exact_; }
  double lower() const { return lower_; }
  double upper() const { return upper_; }
  double u() const { return u_; }

  /// Moves the truncation point to max(u, a) and refreshes the bracket.
  void advance(double u) {
    if (exact_) return;
    u = std::max(u, a_);
    for (; next_m_ < u; next_m_ += 1.0) partial_ += egpd1_survival(p_, next_m_);
    u_ = u;
    const double head = partial_.value() + egpd1_tail_integral(p_, u);
    lower_ = head;
    upper_ = head + egpd1_survival(p_, u);
  }

 private:
  Egpd1Params p_;
  double a_;
  double next_m_;
  CompensatedSum partial_;
  double lower_ = 0.0, upper_ = 0.0, u_ = 0.0;
  bool exact_ = false;
};

}  // namespace detail

/// E[tau - d | tau > d] for hdeGPD dry spells. The numerator E[(tau - d)+]
/// is evaluated as the tail sum (1 - f1) sum_{m >= d - 1} P(X > m), which
/// equals the mean minus the partial survival sums without their
/// cancellation; it is bracketed by L_u <= sum <= L_u + P(X > u).
inline RiskBound mean_residual_hdegpd(const HdeGpdParams& h, Duration d, double precision = 1e-5) {
  validate(h);
  require(d >= 0, ErrorCode::InvalidArgument, "threshold d must be >= 0");
  require(precision > 0.0, ErrorCode::InvalidArgument, "precision must be positive");
  require(h.egpd.xi < 1.0, ErrorCode::MeanUndefined, "mean residual requires xi < 1");
  const double denom = hdegpd_survival(h, d);
  if (!(denom > 0.0)) return detail::undefined_bound(precision);
  const double w = 1.0 - h.f1;
  // For d = 0 the numerator is E[tau] = 1 + (1 - f1) sum_{m >= 0} P(X > m).
  const double offset = d == 0 ? 1.0 : 0.0;
  detail::TailSumBracket t(h.egpd, d == 0 ? 0 : d - 1);
  auto bound = [&] {
    return detail::make_bound((offset + w * t.lower()) / denom, (offset + w * t.upper()) / denom, t.u(), precision);
  };
  if (t.exact() || w == 0.0) return detail::make_bound(bound().lower, bound().lower, t.u(), precision);
  RiskBound b;
  for (double u = kRiskFirstU; u <= kRiskMaxU; u *= 2.0) {
    t.advance(u);
    b = bound();
    if (b.status == RiskStatus::Converged) return b;
  }
  return b;
}

/// Memorylessness: the residual of a geometric spell is 1/p for every d.
inline double mean_residual_geometric(const GeometricParams& g, Duration d) {
  validate(g);
  require(d >= 0, ErrorCode::InvalidArgument, "threshold d must be >= 0");
  return 1.0 / g.p;
}

/// Mean residual for any law given as a tabulated exit sequence, with
/// survival S(k) = prod_{j <= k} (1 - q_j). Beyond u the remainder
/// sum_{k >= u} S(k) lies in [S(u) / max_{j > u} q_j, S(u) / min_{j > u} q_j].
inline RiskBound mean_residual_exit_probs(const ExitProbabilitySequence& q, Duration d, double precision = 1e-5) {
  require(q.is_tabulated(), ErrorCode::InvalidArgument, "mean_residual_exit_probs needs a tabulated sequence");
  require(d >= 0, ErrorCode::InvalidArgument, "threshold d must be >= 0");
  const auto& table = q.table();
  const auto n = static_cast<Duration>(table.size());
  // Suffix extremes over q_{j}, j > k, including the constant tail.
  std::vector<double> suf_min(table.size() + 1, q.tail_q()), suf_max(table.size() + 1, q.tail_q());
  for (Duration k = n - 1; k >= 0; --k) {
    const auto i = static_cast<std::size_t>(k);
    suf_min[i] = std::min(suf_min[i + 1], table[i]);
    suf_max[i] = std::max(suf_max[i + 1], table[i]);
  }
  auto extremes_after = [&](Duration k) {
    const auto i = static_cast<std::size_t>(std::min(k, n));
    return std::pair{suf_min[i], suf_max[i]};
  };

  double s = 1.0;  // S(k), advanced lazily
  Duration k = 0;
  auto advance_to = [&](Duration target) {
    for (; k < target; ++k) s *= 1.0 - q(k + 1);
  };
  advance_to(d);
  const double denom = s;
  if (!(denom > 0.0)) return detail::undefined_bound(precision);

  CompensatedSum partial;  // sum_{k = d}^{u - 1} S(k)
  RiskBound b;
  for (double u = std::max(kRiskFirstU, static_cast<double>(d)); u <= kRiskMaxU; u *= 2.0) {
    const auto ui = static_cast<Duration>(u);
    for (; k < ui; ++k) {
      partial += s;
      s *= 1.0 - q(k + 1);
    }
    const auto [q_min, q_max] = extremes_after(ui);
    const double lo = s > 0.0 ? s / q_max : 0.0;
    const double hi = s > 0.0 ? (q_min > 0.0 ? s / q_min : std::numeric_limits<double>::infinity()) : 0.0;
    b = detail::make_bound((partial.value() + lo) / denom, (partial.value() + hi) / denom, u, precision);
    if (b.status == RiskStatus::Converged) return b;
  }
  return b;
}

// ---------------------------------------------------------------------------
// Proportion of time in long dry spells

using DryModel = std::variant<HdeGpdParams, GeometricParams>;
using WetModel = std::variant<GeomMixParams, GeometricParams>;

inline double wet_mean(const WetModel& wet) {
  return std::visit(
      [](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GeomMixParams>) {
          return geommix_mean(p);
        } else {
          return geometric_mean(p);
        }
      },
      wet);
}

/// E[(tau0 - d)+] / (E[tau0] + E[tau1]). For hdeGPD dry spells the numerator
/// N and E[tau0] share one truncation point u and the ratio is bracketed as
/// N_lower / (E_upper + E[tau1]) <= . <= N_upper / (E_lower + E[tau1]).
inline RiskBound proportion_time_long_dry(const DryModel& dry, const WetModel& wet, Duration d, double precision = 1e-5) {
  require(d >= 0, ErrorCode::InvalidArgument, "threshold d must be >= 0");
  require(precision > 0.0, ErrorCode::InvalidArgument, "precision must be positive");
  const double e_wet = wet_mean(wet);

  if (const auto* g = std::get_if<GeometricParams>(&dry)) {
    validate(*g);
    // sum_{k >= d} (1 - p)^k = (1 - p)^d / p
    const double num = geometric_survival(*g, d) / g->p;
    const double v = num / (1.0 / g->p + e_wet);
    return detail::make_bound(v, v, 0.0, precision);
  }

  const auto& h = std::get<HdeGpdParams>(dry);
  validate(h);
  require(h.egpd.xi < 1.0, ErrorCode::MeanUndefined, "dry-spell mean requires xi < 1");
  const double w = 1.0 - h.f1;
  const double offset = d == 0 ? 1.0 : 0.0;
  detail::TailSumBracket num(h.egpd, d == 0 ? 0 : d - 1);
  detail::TailSumBracket mean(h.egpd, 0);
  auto bound = [&] {
    const double n_lo = offset + w * num.lower(), n_hi = offset + w * num.upper();
    const double e_lo = 1.0 + w * mean.lower(), e_hi = 1.0 + w * mean.upper();
    return detail::make_bound(n_lo / (e_hi + e_wet), n_hi / (e_lo + e_wet), std::max(num.u(), mean.u()), precision);
  };
  if (num.exact() || w == 0.0) {
    const auto b = bound();
    return detail::make_bound(b.lower, b.lower, b.u_used, precision);
  }
  RiskBound b;
  for (double u = kRiskFirstU; u <= kRiskMaxU; u *= 2.0) {
    num.advance(u);
    mean.advance(u);
    b = bound();
    if (b.status == RiskStatus::Converged) return b;
  }
  return b;
}

// ---------------------------------------------------------------------------
// Monte Carlo reward average

/// w(r, d) from per-regime tables indexed by d - 1, with a per-regime value
/// beyond each table.
struct RewardTable {
  std::array<std::vector<double>, 2> values;
  std::array<double, 2> beyond{0.0, 0.0};

  double operator()(Regime r, Duration d) const {
    const auto& t = values[static_cast<std::size_t>(r)];
    if (d >= 1 && static_cast<std::size_t>(d) <= t.size()) return t[static_cast<std::size_t>(d - 1)];
    return beyond[static_cast<std::size_t>(r)];
  }

  /// 1{r = regime, d > threshold}.
  static RewardTable dry_longer_than(Duration threshold) {
    RewardTable w;
    w.values[0].assign(static_cast<std::size_t>(std::max<Duration>(threshold, 0)), 0.0);
    w.beyond = {1.0, 0.0};
    return w;
  }
};

/// (1/n) sum_{k < n} w(R_k, D_k) along one simulated path from (dry, 1).
inline double asymptotic_reward_mc(const ExitProbabilitySequence& q_dry, const ExitProbabilitySequence& q_wet,
                                   const RewardTable& w, std::int64_t n_steps, std::uint64_t seed) {
  require(n_steps >= 1, ErrorCode::InvalidArgument, "n_steps must be >= 1");
  for (const auto& t : w.values)
    for (double v : t) require(v >= 0.0, ErrorCode::InvalidArgument, "rewards must be nonnegative");
  require(w.beyond[0] >= 0.0 && w.beyond[1] >= 0.0, ErrorCode::InvalidArgument, "rewards must be nonnegative");
  Rng rng(seed);
  CompensatedSum total;
  simulate_chain_visit(q_dry, q_wet, n_steps, rng, [&](const BmcdState& s) { total += w(s.r, s.d); });
  return total.value() / static_cast<double>(n_steps);
}

}  // namespace bmcd
