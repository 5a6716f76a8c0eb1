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

// Exit-probability sequences q_d = P(tau = d | tau >= d) and the exact
// two-way mapping between them and duration distributions.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <vector>

#include "bmcd/distributions.hpp"
#include "bmcd/error.hpp"

namespace bmcd {

/// d -> q_d for d >= 1, backed by a finite table plus tail value, or by a
/// duration distribution.
class ExitProbabilitySequence {
 public:
  /// q[0] is q_1; beyond the table every q_d equals tail_q.
  static ExitProbabilitySequence from_table(std::vector<double> q, double tail_q) {
    require(tail_q >= 0.0 && tail_q <= 1.0, ErrorCode::InvalidArgument, "tail exit probability must lie in [0, 1]");
    for (double v : q)
      require(v >= 0.0 && v <= 1.0, ErrorCode::InvalidArgument, "exit probabilities must lie in [0, 1]");
    ExitProbabilitySequence s;
    s.table_ = std::move(q);
    s.tail_q_ = tail_q;
    return s;
  }

  static ExitProbabilitySequence constant(double q) { return from_table({}, q); }

  /// Closure over a distribution: q_d = pmf(d) / P(tau >= d), or 1 once the
  /// survival has reached zero.
  static ExitProbabilitySequence from_distribution(DistributionPtr dist) {
    require(dist != nullptr, ErrorCode::InvalidArgument, "null distribution");
    ExitProbabilitySequence s;
    s.dist_ = std::move(dist);
    return s;
  }

  double operator()(Duration d) const {
    if (dist_) {
      require(d >= 1, ErrorCode::InvalidArgument, "exit probability index must be >= 1");
      const double at_risk = dist_->survival(d - 1);
      if (!(at_risk > 0.0)) return 1.0;
      return std::clamp(dist_->pmf(d) / at_risk, 0.0, 1.0);
    }
    if (d >= 1 && static_cast<std::size_t>(d) <= table_.size()) return table_[static_cast<std::size_t>(d - 1)];
    require(d >= 1, ErrorCode::InvalidArgument, "exit probability index must be >= 1");
    return tail_q_;
  }

  bool is_tabulated() const { return dist_ == nullptr; }
  const std::vector<double>& table() const { return table_; }
  double tail_q() const { return tail_q_; }
  const DistributionPtr& distribution() const { return dist_; }

  std::vector<double> tabulate(Duration horizon) const {
    std::vector<double> out(static_cast<std::size_t>(std::max<Duration>(horizon, 0)));
    for (Duration d = 1; d <= horizon; ++d) out[static_cast<std::size_t>(d - 1)] = (*this)(d);
    return out;
  }

  /// Two-column CSV "d,q".
  void write_csv(std::ostream& os, Duration horizon) const {
    os << "d,q\n";
    os.precision(17);
    for (Duration d = 1; d <= horizon; ++d) os << d << ',' << (*this)(d) << '\n';
  }

 private:
  ExitProbabilitySequence() = default;

  std::vector<double> table_;
  double tail_q_ = 1.0;
  DistributionPtr dist_;
};

inline ExitProbabilitySequence exit_probs_from_distribution(DistributionPtr dist) {
  return ExitProbabilitySequence::from_distribution(std::move(dist));
}

/// pmf(d) = q_d prod_{k < d} (1 - q_k) for d <= horizon; the residual
/// prod_{k <= horizon} (1 - q_k) is kept as explicit tail mass.
inline TabulatedDistribution distribution_from_exit_probs(const ExitProbabilitySequence& q, Duration horizon) {
  require(horizon >= 1, ErrorCode::InvalidArgument, "horizon must be >= 1");
  std::vector<double> pmf(static_cast<std::size_t>(horizon));
  double at_risk = 1.0;
  for (Duration d = 1; d <= horizon; ++d) {
    const double qd = q(d);
    pmf[static_cast<std::size_t>(d - 1)] = qd * at_risk;
    at_risk *= 1.0 - qd;
  }
  return TabulatedDistribution(std::move(pmf), at_risk);
}

/// Tabulates q until the model survival drops below survival_floor (or the
/// support ends). Past the table q stays at its last tabulated value, or 1
/// for bounded support.
inline ExitProbabilitySequence tabulate_exit_probs(const DurationDistribution& dist, double survival_floor = 1e-12,
                                                   Duration max_horizon = 10'000'000) {
  std::vector<double> q;
  double tail_q = 1.0;
  for (Duration d = 1; d <= max_horizon; ++d) {
    const double at_risk = dist.survival(d - 1);
    if (!(at_risk > 0.0)) {
      tail_q = 1.0;
      break;
    }
    const double qd = std::clamp(dist.pmf(d) / at_risk, 0.0, 1.0);
    q.push_back(qd);
    tail_q = qd;
    if (dist.survival(d) < survival_floor) {
      if (dist.survival(d) <= 0.0) tail_q = 1.0;
      break;
    }
  }
  return ExitProbabilitySequence::from_table(std::move(q), tail_q);
}

enum class Finiteness { CertifiedFinite, Inconclusive };

inline const char* to_string(Finiteness f) {
  return f == Finiteness::CertifiedFinite ? "CERTIFIED_FINITE" : "INCONCLUSIVE";
}

/// Spell durations are a.s. finite iff sum_d q_d diverges. Certifies once
/// the partial sum exceeds s_cert, since prod (1 - q_d) <= exp(-sum q_d).
/// Never certifies an infinite duration.
inline Finiteness check_finiteness(const ExitProbabilitySequence& q, Duration budget, double s_cert = 50.0) {
  require(budget >= 1, ErrorCode::InvalidArgument, "budget must be >= 1");
  if (q.is_tabulated()) {
    double partial = 0.0;
    const auto& t = q.table();
    const Duration n = std::min<Duration>(budget, static_cast<Duration>(t.size()));
    for (Duration d = 1; d <= n; ++d) {
      partial += t[static_cast<std::size_t>(d - 1)];
      if (partial > s_cert) return Finiteness::CertifiedFinite;
    }
    const Duration rest = budget - n;
    if (rest > 0 && q.tail_q() > 0.0 && partial + static_cast<double>(rest) * q.tail_q() > s_cert)
      return Finiteness::CertifiedFinite;
    return Finiteness::Inconclusive;
  }
  // Closure: walk the survival once, q_d = (S(d-1) - S(d)) / S(d-1).
  const auto& dist = *q.distribution();
  double partial = 0.0;
  double at_risk = 1.0;
  for (Duration d = 1; d <= budget; ++d) {
    if (!(at_risk > 0.0)) return Finiteness::CertifiedFinite;
    const double next = dist.survival(d);
    partial += std::clamp((at_risk - next) / at_risk, 0.0, 1.0);
    if (partial > s_cert) return Finiteness::CertifiedFinite;
    at_risk = next;
  }
  return Finiteness::Inconclusive;
}

}  // namespace bmcd
