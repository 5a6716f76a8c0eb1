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

// The (regime, elapsed duration) chain, its simulation, spell extraction and
// the alternating renewal view of completed dry-wet cycles.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <ostream>
#include <utility>
#include <vector>

#include "bmcd/error.hpp"
#include "bmcd/exit_probs.hpp"
#include "bmcd/rng.hpp"

namespace bmcd {

enum class Regime : std::uint8_t { Dry = 0, Wet = 1 };

struct BmcdState {
  Regime r = Regime::Dry;
  Duration d = 1;

  friend bool operator==(const BmcdState&, const BmcdState&) = default;
};

/// Streams n_steps states starting from (dry, 1) into visit(state). From
/// (r, d) the chain moves to (1 - r, 1) with probability q^(r)_d, else to
/// (r, d + 1).
template <typename Visitor>
void simulate_chain_visit(const ExitProbabilitySequence& q_dry, const ExitProbabilitySequence& q_wet,
                          std::int64_t n_steps, Rng& rng, Visitor&& visit) {
  BmcdState s{Regime::Dry, 1};
  for (std::int64_t n = 0; n < n_steps; ++n) {
    visit(s);
    const double q = s.r == Regime::Dry ? q_dry(s.d) : q_wet(s.d);
    if (rng.uniform() < q) {
      s.r = s.r == Regime::Dry ? Regime::Wet : Regime::Dry;
      s.d = 1;
    } else {
      ++s.d;
    }
  }
}

inline std::vector<BmcdState> simulate_chain(const ExitProbabilitySequence& q_dry,
                                             const ExitProbabilitySequence& q_wet, std::int64_t n_steps,
                                             std::uint64_t seed) {
  require(n_steps >= 1, ErrorCode::InvalidArgument, "n_steps must be >= 1");
  std::vector<BmcdState> path;
  path.reserve(static_cast<std::size_t>(n_steps));
  Rng rng(seed);
  simulate_chain_visit(q_dry, q_wet, n_steps, rng, [&](const BmcdState& s) { path.push_back(s); });
  return path;
}

struct SpellLists {
  std::vector<Duration> dry;
  std::vector<Duration> wet;
};

/// Incremental run-length encoder over a stream of states. The final run is
/// censored and never emitted; a leading run is kept only if it starts fresh
/// (d == 1).
class SpellCollector {
 public:
  void push(const BmcdState& s) {
    if (length_ > 0 && s.r == regime_) {
      ++length_;
      return;
    }
    flush();
    regime_ = s.r;
    length_ = 1;
    fresh_ = s.d == 1;
  }

  SpellLists& spells() { return spells_; }
  const SpellLists& spells() const { return spells_; }

 private:
  void flush() {
    if (length_ == 0 || !fresh_) return;
    (regime_ == Regime::Dry ? spells_.dry : spells_.wet).push_back(length_);
  }

  SpellLists spells_;
  Regime regime_ = Regime::Dry;
  Duration length_ = 0;
  bool fresh_ = false;
};

inline SpellLists spells_from_path(const std::vector<BmcdState>& path) {
  SpellCollector c;
  for (const auto& s : path) c.push(s);
  return c.spells();
}

/// Cycle start times T_0 = 0, T_k = sum_{i <= k} (dry_i + wet_i), and the
/// counting process N_n = max{k : T_k <= n}.
class RenewalView {
 public:
  RenewalView(const std::vector<Duration>& dry, const std::vector<Duration>& wet) {
    require(dry.size() == wet.size(), ErrorCode::InvalidArgument, "dry and wet cycle lists differ in length");
    times_.reserve(dry.size() + 1);
    times_.push_back(0);
    for (std::size_t k = 0; k < dry.size(); ++k) {
      require(dry[k] >= 1 && wet[k] >= 1, ErrorCode::InvalidArgument, "spell durations must be >= 1");
      times_.push_back(times_.back() + dry[k] + wet[k]);
    }
  }

  const std::vector<Duration>& renewal_times() const { return times_; }

  std::int64_t count(Duration n) const {
    if (n < 0) return 0;
    const auto it = std::upper_bound(times_.begin(), times_.end(), n);
    return static_cast<std::int64_t>(it - times_.begin()) - 1;
  }

 private:
  std::vector<Duration> times_;
};

/// One dry spell followed by the wet spell that ends the cycle.
using Cycle = std::pair<Duration, Duration>;

/// Cycles grouped by calendar year, in within-year order.
using CyclesByYear = std::map<int, std::vector<Cycle>>;

inline RenewalView renewal_view(const std::vector<Duration>& dry, const std::vector<Duration>& wet) {
  return RenewalView(dry, wet);
}

inline void write_path_csv(std::ostream& os, const std::vector<BmcdState>& path) {
  os << "n,r,d\n";
  for (std::size_t n = 0; n < path.size(); ++n)
    os << n << ',' << static_cast<int>(path[n].r) << ',' << path[n].d << '\n';
}

inline void write_spells_csv(std::ostream& os, const SpellLists& spells) {
  os << "kind,index,duration\n";
  for (std::size_t i = 0; i < spells.dry.size(); ++i) os << "dry," << i << ',' << spells.dry[i] << '\n';
  for (std::size_t i = 0; i < spells.wet.size(); ++i) os << "wet," << i << ',' << spells.wet[i] << '\n';
}

}  // namespace bmcd
