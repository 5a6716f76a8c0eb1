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

// Spell-duration laws on {1, 2, ...}: the hurdle discretised eGPD used for
// dry spells, the two-component geometric mixture used for wet spells, the
// geometric baseline, and a tabulated law with explicit residual tail mass.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bmcd/egpd.hpp"
#include "bmcd/error.hpp"
#include "bmcd/rng.hpp"

namespace bmcd {

using Duration = std::int64_t;

/// Samples are capped here so heavy tails cannot overflow integer durations.
inline constexpr Duration kMaxSampledDuration = Duration{1} << 53;

/// Common capability of every duration law.
class DurationDistribution {
 public:
  virtual ~DurationDistribution() = default;

  virtual double pmf(Duration d) const = 0;
  /// P(tau > d), d >= 0.
  virtual double survival(Duration d) const = 0;
  virtual Duration sample(Rng& rng) const = 0;
  /// E[tau] when finite.
  virtual std::optional<double> mean() const = 0;
  /// Largest duration with positive mass when the support is bounded.
  virtual std::optional<Duration> support_max() const { return std::nullopt; }
  virtual std::string family() const = 0;
};

using DistributionPtr = std::shared_ptr<const DurationDistribution>;

// ---------------------------------------------------------------------------
// Geometric

struct GeometricParams {
  double p = 0.5;

  friend bool operator==(const GeometricParams&, const GeometricParams&) = default;
};

inline void validate(const GeometricParams& g) {
  require(std::isfinite(g.p) && g.p > 0.0 && g.p <= 1.0, ErrorCode::InvalidParameters,
          "geometric p must lie in (0, 1]");
}

namespace detail {

inline double geometric_survival(double p, Duration d) {
  if (d <= 0) return 1.0;
  if (p >= 1.0) return 0.0;
  return std::exp(static_cast<double>(d) * std::log1p(-p));
}

inline double geometric_pmf(double p, Duration d) {
  if (d < 1) return 0.0;
  if (p >= 1.0) return d == 1 ? 1.0 : 0.0;
  return p * std::exp(static_cast<double>(d - 1) * std::log1p(-p));
}

inline Duration geometric_sample(double p, Rng& rng) {
  if (p >= 1.0) return 1;
  const double k = std::floor(std::log(rng.uniform_pos()) / std::log1p(-p));
  if (!(k < static_cast<double>(kMaxSampledDuration))) return kMaxSampledDuration;
  return 1 + static_cast<Duration>(k);
}

}  // namespace detail

inline double geometric_pmf(const GeometricParams& g, Duration d) {
  validate(g);
  require(d >= 1, ErrorCode::InvalidArgument, "pmf requires d >= 1");
  return detail::geometric_pmf(g.p, d);
}

inline double geometric_survival(const GeometricParams& g, Duration d) {
  validate(g);
  require(d >= 0, ErrorCode::InvalidArgument, "survival requires d >= 0");
  return detail::geometric_survival(g.p, d);
}

inline Duration geometric_sample(const GeometricParams& g, Rng& rng) {
  validate(g);
  return detail::geometric_sample(g.p, rng);
}

inline double geometric_mean(const GeometricParams& g) {
  validate(g);
  return 1.0 / g.p;
}

// ---------------------------------------------------------------------------
// Two-component geometric mixture

struct GeomMixParams {
  double pi = 0.5;
  double p1 = 0.5;
  double p2 = 0.5;

  friend bool operator==(const GeomMixParams&, const GeomMixParams&) = default;
};

inline void validate(const GeomMixParams& m) {
  require(std::isfinite(m.pi) && m.pi >= 0.0 && m.pi <= 1.0, ErrorCode::InvalidParameters,
          "mixture weight pi must lie in [0, 1]");
  require(std::isfinite(m.p1) && m.p1 > 0.0 && m.p1 <= 1.0, ErrorCode::InvalidParameters,
          "mixture p1 must lie in (0, 1]");
  require(std::isfinite(m.p2) && m.p2 > 0.0 && m.p2 <= 1.0, ErrorCode::InvalidParameters,
          "mixture p2 must lie in (0, 1]");
  require(m.p1 >= m.p2, ErrorCode::InvalidParameters, "mixture requires p1 >= p2");
}

inline double geommix_pmf(const GeomMixParams& m, Duration d) {
  validate(m);
  require(d >= 1, ErrorCode::InvalidArgument, "pmf requires d >= 1");
  return m.pi * detail::geometric_pmf(m.p1, d) + (1.0 - m.pi) * detail::geometric_pmf(m.p2, d);
}

inline double geommix_survival(const GeomMixParams& m, Duration d) {
  validate(m);
  require(d >= 0, ErrorCode::InvalidArgument, "survival requires d >= 0");
  return m.pi * detail::geometric_survival(m.p1, d) + (1.0 - m.pi) * detail::geometric_survival(m.p2, d);
}

inline double geommix_mean(const GeomMixParams& m) {
  validate(m);
  return m.pi / m.p1 + (1.0 - m.pi) / m.p2;
}

inline Duration geommix_sample(const GeomMixParams& m, Rng& rng) {
  validate(m);
  const double p = rng.uniform() < m.pi ? m.p1 : m.p2;
  return detail::geometric_sample(p, rng);
}

// ---------------------------------------------------------------------------
// Hurdle discretised eGPD: mass f1 at 1, otherwise 1 + ceil(X) with X ~ eGPD.

struct HdeGpdParams {
  double f1 = 0.0;
  Egpd1Params egpd;

  friend bool operator==(const HdeGpdParams&, const HdeGpdParams&) = default;
};

inline void validate(const HdeGpdParams& h) {
  require(std::isfinite(h.f1) && h.f1 >= 0.0 && h.f1 <= 1.0, ErrorCode::InvalidParameters,
          "hdeGPD f1 must lie in [0, 1]");
  validate(h.egpd);
}

inline double hdegpd_survival(const HdeGpdParams& h, Duration d) {
  validate(h);
  require(d >= 0, ErrorCode::InvalidArgument, "survival requires d >= 0");
  if (d == 0) return 1.0;
  if (d == 1) return 1.0 - h.f1;
  return (1.0 - h.f1) * egpd1_survival(h.egpd, static_cast<double>(d - 1));
}

inline double hdegpd_pmf(const HdeGpdParams& h, Duration d) {
  validate(h);
  require(d >= 1, ErrorCode::InvalidArgument, "pmf requires d >= 1");
  if (d == 1) return h.f1;
  // (1 - f1) [F(d - 1) - F(d - 2)] written on the survival scale.
  return (1.0 - h.f1) *
         (egpd1_survival(h.egpd, static_cast<double>(d - 2)) - egpd1_survival(h.egpd, static_cast<double>(d - 1)));
}

inline Duration hdegpd_sample(const HdeGpdParams& h, Rng& rng) {
  validate(h);
  if (rng.uniform() < h.f1) return 1;
  const double x = egpd1_sample(h.egpd, rng);
  const double c = std::ceil(x);
  if (!(c < static_cast<double>(kMaxSampledDuration))) return kMaxSampledDuration;
  return 1 + static_cast<Duration>(c);
}

inline std::optional<Duration> hdegpd_support_max(const HdeGpdParams& h) {
  validate(h);
  if (h.f1 >= 1.0) return Duration{1};
  if (h.egpd.xi >= 0.0) return std::nullopt;
  return 1 + static_cast<Duration>(std::ceil(egpd1_support_max(h.egpd)));
}

// ---------------------------------------------------------------------------
// Polymorphic wrappers

class GeometricDistribution final : public DurationDistribution {
 public:
  explicit GeometricDistribution(GeometricParams params) : params_(params) { validate(params_); }

  double pmf(Duration d) const override { return geometric_pmf(params_, d); }
  double survival(Duration d) const override { return geometric_survival(params_, d); }
  Duration sample(Rng& rng) const override { return geometric_sample(params_, rng); }
  std::optional<double> mean() const override { return geometric_mean(params_); }
  std::optional<Duration> support_max() const override {
    return params_.p >= 1.0 ? std::optional<Duration>(1) : std::nullopt;
  }
  std::string family() const override { return "geometric"; }

  const GeometricParams& params() const { return params_; }

 private:
  GeometricParams params_;
};

class GeomMixDistribution final : public DurationDistribution {
 public:
  explicit GeomMixDistribution(GeomMixParams params) : params_(params) { validate(params_); }

  double pmf(Duration d) const override { return geommix_pmf(params_, d); }
  double survival(Duration d) const override { return geommix_survival(params_, d); }
  Duration sample(Rng& rng) const override { return geommix_sample(params_, rng); }
  std::optional<double> mean() const override { return geommix_mean(params_); }
  std::optional<Duration> support_max() const override {
    const bool only_first = params_.pi >= 1.0 || params_.p2 >= 1.0;
    return only_first && params_.p1 >= 1.0 ? std::optional<Duration>(1) : std::nullopt;
  }
  std::string family() const override { return "geommix"; }

  const GeomMixParams& params() const { return params_; }

 private:
  GeomMixParams params_;
};

class HdeGpdDistribution final : public DurationDistribution {
 public:
  explicit HdeGpdDistribution(HdeGpdParams params) : params_(params) { validate(params_); }

  double pmf(Duration d) const override { return hdegpd_pmf(params_, d); }
  double survival(Duration d) const override { return hdegpd_survival(params_, d); }
  Duration sample(Rng& rng) const override { return hdegpd_sample(params_, rng); }
  std::optional<double> mean() const override;
  std::optional<Duration> support_max() const override { return hdegpd_support_max(params_); }
  std::string family() const override { return "hdegpd"; }

  const HdeGpdParams& params() const { return params_; }

 private:
  HdeGpdParams params_;
};

/// Finite pmf on 1..horizon plus the unresolved mass P(tau > horizon).
/// survival(d) stays at the residual tail mass beyond the horizon.
class TabulatedDistribution final : public DurationDistribution {
 public:
  TabulatedDistribution(std::vector<double> pmf, double tail_mass)
      : pmf_(std::move(pmf)), tail_mass_(tail_mass) {
    require(!pmf_.empty(), ErrorCode::InvalidArgument, "tabulated distribution needs a horizon >= 1");
    require(tail_mass_ >= 0.0, ErrorCode::InvalidArgument, "tail mass must be >= 0");
    for (double v : pmf_) require(v >= 0.0, ErrorCode::InvalidArgument, "pmf entries must be >= 0");
    survival_.resize(pmf_.size() + 1);
    // Accumulate from the tail so survival(horizon) equals tail_mass exactly.
    survival_.back() = tail_mass_;
    for (std::size_t d = pmf_.size(); d-- > 0;) survival_[d] = survival_[d + 1] + pmf_[d];
  }

  Duration horizon() const { return static_cast<Duration>(pmf_.size()); }
  double tail_mass() const { return tail_mass_; }
  const std::vector<double>& pmf_table() const { return pmf_; }

  double pmf(Duration d) const override {
    require(d >= 1, ErrorCode::InvalidArgument, "pmf requires d >= 1");
    return d <= horizon() ? pmf_[static_cast<std::size_t>(d - 1)] : 0.0;
  }
  double survival(Duration d) const override {
    require(d >= 0, ErrorCode::InvalidArgument, "survival requires d >= 0");
    return d <= horizon() ? survival_[static_cast<std::size_t>(d)] : tail_mass_;
  }
  /// Draws in the residual tail return horizon + 1.
  Duration sample(Rng& rng) const override {
    double u = rng.uniform() * survival_[0];
    for (std::size_t i = 0; i < pmf_.size(); ++i) {
      if (u < pmf_[i]) return static_cast<Duration>(i + 1);
      u -= pmf_[i];
    }
    return horizon() + 1;
  }
  std::optional<double> mean() const override {
    if (tail_mass_ > 0.0) return std::nullopt;
    double m = 0.0;
    for (std::size_t i = 0; i < pmf_.size(); ++i) m += static_cast<double>(i + 1) * pmf_[i];
    return m / survival_[0];
  }
  std::optional<Duration> support_max() const override {
    if (tail_mass_ > 0.0) return std::nullopt;
    Duration last = 1;
    for (std::size_t i = 0; i < pmf_.size(); ++i)
      if (pmf_[i] > 0.0) last = static_cast<Duration>(i + 1);
    return last;
  }
  std::string family() const override { return "tabulated"; }

 private:
  std::vector<double> pmf_;
  std::vector<double> survival_;
  double tail_mass_;
};

inline std::optional<double> HdeGpdDistribution::mean() const {
  if (params_.f1 >= 1.0) return 1.0;
  if (params_.egpd.xi >= 1.0) return std::nullopt;
  double u = 64.0;
  CeilMeanBracket b = egpd1_ceil_mean_bracket(params_.egpd, u);
  while (!b.exact && b.upper - b.lower > 1e-13 * b.lower && u < 67108864.0) {
    u *= 2.0;
    b = egpd1_ceil_mean_bracket(params_.egpd, u);
  }
  return 1.0 + (1.0 - params_.f1) * 0.5 * (b.lower + b.upper);
}

}  // namespace bmcd
