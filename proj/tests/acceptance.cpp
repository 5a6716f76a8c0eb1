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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "bmcd/chain.hpp"
#include "bmcd/diagnostics.hpp"
#include "bmcd/distributions.hpp"
#include "bmcd/egpd.hpp"
#include "bmcd/estimation.hpp"
#include "bmcd/exit_probs.hpp"
#include "bmcd/ingest.hpp"
#include "bmcd/risk.hpp"
#include "bmcd/special_functions.hpp"
#include "oracles.hpp"

namespace {

using namespace bmcd;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------------------

Outcome gof_calibration() {
  const auto start = std::chrono::steady_clock::now();
  const HdeGpdDistribution law({0.3, {1.0, 6.0, 0.2}});
  GofOptions opt;
  opt.d_max = 10;
  std::vector<double> p_values;
  double stat_sum = 0.0;
  int not_ok = 0;
  for (int r = 0; r < 1000; ++r) {
    Rng rng(derive_seed(101, static_cast<std::uint64_t>(r)));
    std::vector<Duration> sample(2000);
    for (auto& d : sample) d = law.sample(rng);
    const auto g = gof_test(sample, law, opt);
    if (g.status != GofStatus::Ok) {
      ++not_ok;
      continue;
    }
    p_values.push_back(*g.p_value);
    stat_sum += g.statistic;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double ks = oracle::ks_distance_continuous(p_values, [](double u) { return std::clamp(u, 0.0, 1.0); });
  const double mean = stat_sum / static_cast<double>(p_values.size());
  Outcome o;
  o.pass = not_ok == 0 && ks < 0.05 && mean >= 8.0 && mean <= 10.0 && secs < 60.0;
  o.detail = "KS " + fmt("%.4f", ks) + ", mean Q " + fmt("%.3f", mean) + ", " + std::to_string(not_ok) +
             " non-OK, " + fmt("%.1f", secs) + " s";
  return o;
}

Outcome memorylessness() {
  double worst = 0.0;
  bool exact = true;
  for (double p : {0.05, 0.1, 0.5, 1.0}) {
    const auto q = ExitProbabilitySequence::constant(p);
    for (Duration d : {0, 20, 40, 60}) {
      exact = exact && mean_residual_geometric({p}, d) == 1.0 / p;
      const auto b = mean_residual_exit_probs(q, d);
      worst = std::max({worst, std::abs(b.lower - 1.0 / p), std::abs(b.upper - 1.0 / p)});
    }
  }
  return {exact && worst < 1e-8, std::string(exact ? "closed form exact" : "closed form inexact") +
                                     ", tabulated path max error " + fmt("%.2e", worst)};
}

Outcome certified_bounds() {
  Rng rng(303);
  int inside = 0, narrow = 0, total = 0;
  double widest = 0.0;
  for (int draw = 0; draw < 20; ++draw) {
    const double xi = -0.4 + rng.uniform();
    double sigma;
    do sigma = 2.0 + 28.0 * rng.uniform();
    while (xi < 0.0 && sigma / -xi < 70.0);  // keep d = 60 inside the support
    const HdeGpdParams h{0.1 + 0.4 * rng.uniform(), {0.3 + 2.7 * rng.uniform(), sigma, xi}};
    for (Duration d : {20, 40, 60}) {
      ++total;
      const auto b = mean_residual_hdegpd(h, d, 1e-5);
      const double want = oracle::hdegpd_mean_residual(h.f1, h.egpd.kappa, h.egpd.sigma, h.egpd.xi, d);
      // The oracle itself carries rounding of order 1e-12 relative.
      const double slack = 1e-11 * std::abs(want);
      inside += b.lower - slack <= want && want <= b.upper + slack;
      narrow += b.width < 1e-5;
      widest = std::max(widest, b.width);
    }
  }
  return {inside == total && narrow == total, std::to_string(inside) + "/" + std::to_string(total) +
                                                  " contain oracle, " + std::to_string(narrow) + "/" +
                                                  std::to_string(total) + " narrower than 1e-5 (max " +
                                                  fmt("%.2e", widest) + ")"};
}

// sd of the MLE from the expected Fisher information of n observations.
std::array<double, 3> geommix_fisher_sd(const GeomMixParams& m, double n) {
  Eigen::Matrix3d info = Eigen::Matrix3d::Zero();
  auto g = [](double p, double d) { return p * std::pow(1.0 - p, d - 1.0); };
  auto dg = [](double p, double d) { return d == 1.0 ? 1.0 : std::pow(1.0 - p, d - 2.0) * (1.0 - d * p); };
  for (int k = 1; k <= 20000; ++k) {
    const double d = k;
    const double f = m.pi * g(m.p1, d) + (1.0 - m.pi) * g(m.p2, d);
    if (f < 1e-300) break;
    const Eigen::Vector3d grad(g(m.p1, d) - g(m.p2, d), m.pi * dg(m.p1, d), (1.0 - m.pi) * dg(m.p2, d));
    info += grad * grad.transpose() / f;
  }
  const Eigen::Matrix3d cov = info.inverse() / n;
  return {std::sqrt(cov(0, 0)), std::sqrt(cov(1, 1)), std::sqrt(cov(2, 2))};
}

struct EmCoverage {
  std::array<int, 3> covered{};
  int fits = 0;
  int violations = 0;
  int iterations = 0;
};

void add_em_fit(EmCoverage& c, const GeomMixParams& truth, std::span<const Duration> sample, std::uint64_t seed) {
  EmOptions opt;
  opt.seed = seed;
  const auto r = em_fit_geommix(sample, opt);
  const auto sd = geommix_fisher_sd(truth, static_cast<double>(sample.size()));
  const std::array<double, 3> est{r.params->pi, r.params->p1, r.params->p2};
  const std::array<double, 3> tru{truth.pi, truth.p1, truth.p2};
  for (int i = 0; i < 3; ++i) c.covered[i] += std::abs(est[i] - tru[i]) <= 1.96 * sd[i];
  ++c.fits;
  c.violations += r.diagnostics.monotonicity_violations;
  c.iterations += static_cast<int>(r.diagnostics.loglik_trace.size());
}

bool em_ok(const EmCoverage& c) {
  return c.violations == 0 && std::all_of(c.covered.begin(), c.covered.end(), [&](int k) { return k >= 0.9 * c.fits; });
}

std::string em_detail(const EmCoverage& c) {
  return "EM coverage pi " + std::to_string(c.covered[0]) + ", p1 " + std::to_string(c.covered[1]) + ", p2 " +
         std::to_string(c.covered[2]) + " of " + std::to_string(c.fits) + ", " + std::to_string(c.violations) +
         " log-likelihood decreases in " + std::to_string(c.iterations) + " iterations";
}

struct XiRecovery {
  double median_abs_error = 0.0;
  double sign_agreement = 0.0;
};

XiRecovery summarize_xi(const std::vector<double>& est, double truth) {
  std::vector<double> err;
  int agree = 0;
  for (double x : est) {
    err.push_back(std::abs(x - truth));
    agree += (x > 0.0) == (truth > 0.0);
  }
  return {median(err), static_cast<double>(agree) / static_cast<double>(est.size())};
}

Outcome parameter_recovery() {
  Outcome o;
  std::string pwm;
  for (double xi : {-0.3, -0.2, 0.2, 0.3, 0.4}) {
    const HdeGpdParams h{0.3, {1.0, 10.0, xi}};
    std::vector<double> est;
    for (int r = 0; r < 200; ++r) {
      Rng rng(derive_seed(404, "pwm", static_cast<std::uint64_t>(r), static_cast<std::uint64_t>((xi + 1.0) * 100)));
      std::vector<Duration> sample(5000);
      for (auto& d : sample) d = hdegpd_sample(h, rng);
      const auto f = fit_hdegpd(sample);
      est.push_back(f.params ? f.params->egpd.xi : std::nan(""));
    }
    const auto s = summarize_xi(est, xi);
    const bool ok = s.median_abs_error < 0.08 && s.sign_agreement > 0.9;
    o.pass = o.pass && ok;
    pwm += fmt("xi %+.1f: ", xi) + fmt("med|err| %.3f ", s.median_abs_error) + fmt("sign %.2f", s.sign_agreement) +
           (ok ? "" : " (miss)") + "; ";
  }
  const GeomMixParams truth{0.4, 0.7, 0.15};
  EmCoverage em;
  for (int r = 0; r < 200; ++r) {
    Rng rng(derive_seed(404, "em", static_cast<std::uint64_t>(r)));
    std::vector<Duration> sample(5000);
    for (auto& d : sample) d = geommix_sample(truth, rng);
    add_em_fit(em, truth, sample, derive_seed(404, "em-fit", static_cast<std::uint64_t>(r)));
  }
  o.pass = o.pass && em_ok(em);
  o.detail = "PWM " + pwm + em_detail(em);
  return o;
}

Outcome renewal_asymptotics() {
  const auto q = ExitProbabilitySequence::constant(0.5);
  const std::int64_t n = 1'000'000;
  auto cycles = [&](std::uint64_t seed) {
    Rng rng(seed);
    std::int64_t i = 0, count = 0;
    simulate_chain_visit(q, q, n + 1, rng, [&](const BmcdState& s) {
      count += i > 0 && s.r == Regime::Dry && s.d == 1;
      ++i;
    });
    return count;
  };
  const double rate = static_cast<double>(cycles(505)) / static_cast<double>(n);

  // Cycle length tau0 + tau1: mean 4, variance 2 (1 - p) / p^2 = 4.
  const double mu = 4.0, var = 4.0;
  const double centre = static_cast<double>(n) / mu;
  const double scale = std::sqrt(static_cast<double>(n) * var / (mu * mu * mu));
  std::vector<double> z;
  for (int r = 0; r < 2000; ++r)
    z.push_back((static_cast<double>(cycles(derive_seed(506, static_cast<std::uint64_t>(r)))) - centre) / scale);
  const double a2 = oracle::anderson_darling_normal(z);

  const double mc = asymptotic_reward_mc(q, q, RewardTable::dry_longer_than(1), n, 507);
  const auto closed = proportion_time_long_dry(GeometricParams{0.5}, GeometricParams{0.5}, 1);
  const bool ok = std::abs(rate - 0.25) < 0.005 && a2 < oracle::kAndersonDarlingCritical01 &&
                  std::abs(mc - closed.lower) < 0.005 && closed.lower == closed.upper;
  return {ok, "N_n/n " + fmt("%.5f", rate) + ", Anderson-Darling A2 " + fmt("%.3f", a2) + " (1% critical 3.857)" +
                  ", proportion MC " + fmt("%.5f", mc) + " vs closed form " + fmt("%.5f", closed.lower)};
}

Outcome round_trip() {
  // Random finite pmf on 1..10^4 with explicit tail mass.
  Rng rng(606);
  const Duration horizon = 10'000;
  std::vector<double> pmf(static_cast<std::size_t>(horizon));
  double total = 0.0;
  for (auto& v : pmf) total += (v = rng.uniform() * std::exp(-3e-4 * static_cast<double>(&v - pmf.data())));
  for (auto& v : pmf) v *= 0.999 / total;
  const auto tab = std::make_shared<TabulatedDistribution>(pmf, 1.0 - 0.999);
  const auto back = distribution_from_exit_probs(exit_probs_from_distribution(tab), horizon);
  double worst = 0.0;
  for (Duration d = 1; d <= horizon; ++d) worst = std::max(worst, std::abs(back.pmf(d) - tab->pmf(d)));
  worst = std::max(worst, std::abs(back.survival(horizon) - tab->survival(horizon)));

  const HdeGpdParams dry_truth{0.3, {1.0, 10.0, 0.3}};
  const auto hde = std::make_shared<HdeGpdDistribution>(dry_truth);
  const auto back_hde = distribution_from_exit_probs(exit_probs_from_distribution(hde), horizon);
  for (Duration d = 1; d <= horizon; ++d) worst = std::max(worst, std::abs(back_hde.pmf(d) - hde->pmf(d)));

  // Simulate the chain, cut spells from the path, refit.
  const GeomMixParams wet_truth{0.4, 0.7, 0.15};
  const auto q_dry = tabulate_exit_probs(*hde);
  const auto q_wet = tabulate_exit_probs(GeomMixDistribution(wet_truth));
  std::vector<double> xi_est;
  EmCoverage em;
  for (int r = 0; r < 100; ++r) {
    Rng sim(derive_seed(607, static_cast<std::uint64_t>(r)));
    SpellCollector collect;
    simulate_chain_visit(q_dry, q_wet, 85'000, sim, [&](const BmcdState& s) { collect.push(s); });
    const auto& spells = collect.spells();
    const auto f = fit_hdegpd(spells.dry);
    xi_est.push_back(f.params ? f.params->egpd.xi : std::nan(""));
    add_em_fit(em, wet_truth, spells.wet, derive_seed(608, static_cast<std::uint64_t>(r)));
  }
  const auto s = summarize_xi(xi_est, dry_truth.egpd.xi);
  const bool ok = worst < 1e-12 && s.median_abs_error < 0.08 && s.sign_agreement > 0.9 && em_ok(em);
  return {ok, "mapping max error " + fmt("%.2e", worst) + ", refit xi med|err| " + fmt("%.3f", s.median_abs_error) +
                  fmt(" sign %.2f, ", s.sign_agreement) + em_detail(em)};
}

Outcome special_functions() {
  double worst_mean = 0.0, worst_gpd = 0.0, worst_sf = 0.0;
  for (double kappa : {0.3, 0.7, 1.0, 2.0, 5.0})
    for (double sigma : {0.5, 1.0, 2.5, 7.0, 20.0})
      for (double xi : {-0.5, -0.25, 0.0, 0.2, 0.4, 0.6, 0.8}) {
        const double want = oracle::egpd_tail_integral(kappa, sigma, xi, 0.0);
        const double got = egpd1_mean({kappa, sigma, xi});
        worst_mean = std::max(worst_mean, std::abs(got - want) / std::max(1.0, std::abs(want)));
        if (kappa == 1.0) worst_gpd = std::max(worst_gpd, std::abs(got - sigma / (1.0 - xi)) / (sigma / (1.0 - xi)));
      }
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };
  for (double a : {0.1, 0.5, 1.0, 2.5, 10.0, 40.0})
    for (double b : {0.2, 0.9, 1.0, 3.0, 15.0})
      for (double x : {0.01, 0.2, 0.5, 0.8, 0.99}) {
        worst_sf = std::max(worst_sf, rel(special::ibeta(a, b, x), boost::math::ibeta(a, b, x)));
        worst_sf = std::max(worst_sf, rel(special::ibetac(a, b, x), boost::math::ibetac(a, b, x)));
      }
  for (double a : {0.1, 0.5, 1.0, 3.0, 10.0, 50.0})
    for (double x : {0.01, 0.5, 1.0, 4.0, 12.0, 60.0}) {
      const double p = boost::math::gamma_p(a, x), q = boost::math::gamma_q(a, x);
      if (p > 1e-280) worst_sf = std::max(worst_sf, rel(special::gamma_p(a, x), p));
      if (q > 1e-280) worst_sf = std::max(worst_sf, rel(special::gamma_q(a, x), q));
    }
  return {worst_mean < 1e-8 && worst_gpd < 1e-10 && worst_sf < 1e-10,
          "eGPD mean vs quadrature " + fmt("%.2e", worst_mean) + ", kappa = 1 vs sigma/(1 - xi) " +
              fmt("%.2e", worst_gpd) + ", incomplete beta/gamma " + fmt("%.2e", worst_sf)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string render(const StationIngest& st) {
  std::ostringstream os;
  if (st.rejected) {
    os << "REJECTED\n";
  } else {
    write_spells_csv_header(os);
    for (const auto& ds : st.datasets) write_spells_csv_rows(os, ds);
  }
  os << "recorded_days=" << st.recorded_days << '\n';
  for (const auto& ds : st.datasets)
    for (const auto& [year, cycles] : ds.cycles_per_year)
      for (const auto& [dry, wet] : cycles)
        os << "cycle," << to_string(ds.season) << ',' << year << ',' << dry << ',' << wet << '\n';
  return os.str();
}

Outcome ingestion_goldens() {
  const fs::path dir = fs::path(BMCD_FIXTURE_DIR) / "ingest";
  const auto cases = nlohmann::json::parse(slurp(dir / "cases.json"));
  int matched = 0;
  std::string mismatched;
  for (const auto& c : cases) {
    const std::string file = c.at("file");
    IngestOptions opt;
    opt.wet_threshold_mm = c.at("threshold");
    opt.min_years = c.at("min_years");
    opt.start_date = *parse_iso_date(c.at("start_date").get<std::string>());
    const auto series = parse_station_file((dir / file).string(), parse_input_format(c.at("format").get<std::string>()));
    const auto want = slurp(dir / "golden" / (fs::path(file).stem().string() + ".txt"));
    if (render(ingest_series(series, opt)) == want) ++matched;
    else mismatched += " " + file;
  }
  const int n = static_cast<int>(cases.size());
  return {n >= 12 && matched == n,
          std::to_string(matched) + "/" + std::to_string(n) + " fixture files byte-identical" + mismatched};
}

}  // namespace

// Usage: acceptance [--allow-fail N]...
// Criteria named with --allow-fail still print FAIL but do not set the exit
// status.
int main(int argc, char** argv) {
  std::vector<std::size_t> allowed;
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--allow-fail" && i + 1 < argc) {
      allowed.push_back(std::stoul(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: %s [--allow-fail N]...\n", argv[0]);
      return 2;
    }
  }
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"GOF calibration", gof_calibration},
      {"Memorylessness", memorylessness},
      {"Certified bounds", certified_bounds},
      {"Parameter recovery", parameter_recovery},
      {"Renewal asymptotics", renewal_asymptotics},
      {"Round-trip exactness", round_trip},
      {"Special functions", special_functions},
      {"Ingestion golden files", ingestion_goldens},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const bool tolerated = std::find(allowed.begin(), allowed.end(), i + 1) != allowed.end();
    failures += !o.pass && !tolerated;
    std::printf("%s criterion %zu (%s): %s%s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str(),
                !o.pass && tolerated ? " [allowed]" : "");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
