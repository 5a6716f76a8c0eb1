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

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "config.hpp"
#include "pipeline.hpp"

namespace {

using namespace bmcd;
using namespace bmcd::cli;
namespace fs = std::filesystem;

const fs::path kFixtures = BMCD_FIXTURE_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("bmcd_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(BMCD_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

/// Column values of a CSV by header name, keyed rows filtered by predicate.
struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  explicit Csv(const fs::path& p) {
    auto ls = lines_of(slurp(p));
    auto split = [](const std::string& l) {
      std::vector<std::string> f;
      std::string cur;
      for (char c : l) {
        if (c == ',') {
          f.push_back(cur);
          cur.clear();
        } else {
          cur += c;
        }
      }
      f.push_back(cur);
      return f;
    };
    header = split(ls.at(0));
    for (std::size_t i = 1; i < ls.size(); ++i) rows.push_back(split(ls[i]));
  }

  std::size_t col(const std::string& name) const {
    return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
  }
};

// --- ingest ----------------------------------------------------------------------

TEST(CliIngest, SpellsMatchGoldenFiles) {
  const auto cases = nlohmann::json::parse(slurp(kFixtures / "ingest" / "cases.json"));
  for (const auto& c : cases) {
    const std::string file = c.at("file");
    SCOPED_TRACE(file);
    const auto out = scratch("golden");
    std::ostringstream args;
    args << "ingest -i " << (kFixtures / "ingest" / file) << " --out " << out
         << " --threshold " << c.at("threshold").get<double>() << " --min-years " << c.at("min_years").get<int>()
         << " --start-date " << c.at("start_date").get<std::string>();
    ASSERT_EQ(run_cli(args.str()), 0);
    const auto golden = lines_of(slurp(kFixtures / "ingest" / "golden" / (fs::path(file).stem().string() + ".txt")));
    std::string expected;
    if (golden.at(0) == "REJECTED") {
      expected = "station_id,season,kind,duration,start_date,year\n";
    } else {
      for (const auto& l : golden) {
        if (l.starts_with("recorded_days=")) break;
        expected += l + "\n";
      }
    }
    EXPECT_EQ(slurp(out / "spells.csv"), expected);
    const auto m = nlohmann::json::parse(slurp(out / "manifest.json"));
    ASSERT_EQ(m["stations"].size(), 1u);
    EXPECT_EQ(m["stations"][0]["status"], golden.at(0) == "REJECTED" ? "rejected" : "accepted");
  }
}

TEST(CliIngest, EmptyDirectoryGivesEmptyManifest) {
  const auto in = scratch("empty_in");
  const auto out = scratch("empty_out");
  ASSERT_EQ(run_cli("ingest -i " + in.string() + " --out " + out.string()), 0);
  const auto m = nlohmann::json::parse(slurp(out / "manifest.json"));
  EXPECT_TRUE(m["stations"].empty());
  EXPECT_TRUE(m["errors"].empty());
}

TEST(CliIngest, MalformedFileIsReportedAndOthersStillWritten) {
  const auto out = scratch("malformed");
  const int rc = run_cli("ingest --min-years 0 -i " + (kFixtures / "cli" / "malformed.csv").string() + " -i " +
                         (kFixtures / "ingest" / "generic_basic.csv").string() + " --out " + out.string());
  EXPECT_EQ(rc, 2);
  const auto m = nlohmann::json::parse(slurp(out / "manifest.json"));
  ASSERT_EQ(m["errors"].size(), 1u);
  EXPECT_NE(m["errors"][0]["message"].get<std::string>().find("line 3"), std::string::npos);
  ASSERT_EQ(m["stations"].size(), 2u);
  EXPECT_EQ(m["stations"][0]["status"], "errored");
  EXPECT_EQ(m["stations"][1]["status"], "accepted");
  EXPECT_GT(lines_of(slurp(out / "spells.csv")).size(), 1u);
}

TEST(CliIngest, MissingPathIsInputError) {
  const auto out = scratch("missing");
  EXPECT_EQ(run_cli("ingest -i /nonexistent/station.csv --out " + out.string()), 2);
  const auto m = nlohmann::json::parse(slurp(out / "manifest.json"));
  ASSERT_EQ(m["stations"].size(), 1u);
  EXPECT_EQ(m["stations"][0]["status"], "errored");
}

TEST(CliIngest, JsonDatasetSchema) {
  const auto out = scratch("json");
  ASSERT_EQ(run_cli("ingest --format json --min-years 0 -i " + (kFixtures / "ingest" / "ecad_basic.txt").string() +
                    " --out " + out.string()),
            0);
  const auto j = nlohmann::json::parse(slurp(out / "spells.json"));
  ASSERT_EQ(j.size(), 4u);
  EXPECT_EQ(j[0]["station_id"], "230");
  EXPECT_EQ(j[0]["season"], "spring");
  EXPECT_EQ(j[0]["dry"].size(), 4u);
  EXPECT_EQ(j[0]["wet"].size(), 5u);
  EXPECT_EQ(j[0]["cycles_per_year"]["1990"][0], nlohmann::json::array({2, 1}));
}

// --- configuration ---------------------------------------------------------------

TEST(CliConfig, DefaultsAndOverrideEcho) {
  const RunConfig d;
  EXPECT_EQ(d.wet_threshold_mm, 0.6);
  EXPECT_EQ(d.min_years, 30);
  EXPECT_EQ(d.start_date, "1945-01-01");
  EXPECT_EQ(d.seasons.size(), 4u);
  EXPECT_EQ(d.gof_min_tail_count, 20);
  EXPECT_EQ(d.bootstrap_replicates, 1000);
  EXPECT_EQ(d.alpha, 0.05);
  EXPECT_EQ(d.risk_thresholds, (std::vector<Duration>{20, 40, 60}));
  EXPECT_EQ(d.precision, 1e-5);
  EXPECT_TRUE(overrides(d).empty());

  const auto dir = scratch("config");
  {
    std::ofstream cfg(dir / "run.json");
    cfg << R"({"min_years": 0, "risk_thresholds": [5], "seasons": ["winter"]})";
  }
  ASSERT_EQ(run_cli("ingest -c " + (dir / "run.json").string() + " --seed 9 -i " +
                    (kFixtures / "ingest" / "ecad_year_boundary.txt").string() + " --out " + (dir / "out").string()),
            0);
  const auto m = nlohmann::json::parse(slurp(dir / "out" / "manifest.json"));
  EXPECT_EQ(m["overrides"]["min_years"], 0);
  EXPECT_EQ(m["overrides"]["seed"], 9);
  EXPECT_EQ(m["overrides"]["seasons"], nlohmann::json::array({"winter"}));
  EXPECT_FALSE(m["overrides"].contains("alpha"));
  EXPECT_EQ(m["config"]["alpha"], 0.05);
}

TEST(CliConfig, BadInputsExitTwo) {
  const auto dir = scratch("badcfg");
  {
    std::ofstream(dir / "unknown.json") << R"({"min_yeers": 3})";
    std::ofstream(dir / "broken.json") << R"({"min_years": )";
  }
  EXPECT_EQ(run_cli("fit -c " + (dir / "unknown.json").string() + " --out " + dir.string()), 2);
  EXPECT_EQ(run_cli("fit -c " + (dir / "broken.json").string() + " --out " + dir.string()), 2);
  EXPECT_EQ(run_cli("fit --alpha 2 --out " + dir.string()), 2);
  EXPECT_EQ(run_cli("fit --format xml --out " + dir.string()), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli("--help"), 0);
}

// --- fit, diagnose, risk, simulate -------------------------------------------------

RunConfig heavy_tail_config() {
  RunConfig c;
  c.inputs = {(kFixtures / "cli" / "heavy_tail.csv").string()};
  c.bootstrap_replicates = 50;
  c.seed = 11;
  return c;
}

TEST(CliFit, SimulatedStationRecovery) {
  const auto cfg = heavy_tail_config();
  auto run = run_ingest(cfg);
  ASSERT_TRUE(run.errors.empty());
  const auto fits = run_fits(run, cfg);
  ASSERT_EQ(fits.size(), 4u);
  EXPECT_EQ(run.stations[0].status, "fitted");
  for (const auto& f : fits) {
    SCOPED_TRACE(to_string(f.dataset->season));
    ASSERT_TRUE(f.hdegpd.params);
    EXPECT_EQ(f.hdegpd.status, FitStatus::Converged);
    EXPECT_NEAR(f.hdegpd.params->f1, 0.3, 0.05);
    EXPECT_NEAR(f.hdegpd.params->egpd.xi, 0.3, 0.15);
    ASSERT_TRUE(f.geommix.params);
    EXPECT_NEAR(f.geommix.params->pi, 0.6, 0.25);
    EXPECT_NEAR(f.geommix.params->p1, 0.7, 0.15);
    EXPECT_NEAR(f.geommix.params->p2, 0.25, 0.15);
  }
}

TEST(CliFit, SmallSampleGivesInsufficientDataRow) {
  const auto out = scratch("small");
  ASSERT_EQ(run_cli("fit --min-years 0 -i " + (kFixtures / "ingest" / "ecad_basic.txt").string() + " --out " +
                    out.string()),
            0);
  const Csv fits(out / "fits.csv");
  bool found = false;
  for (const auto& r : fits.rows)
    if (r[fits.col("season")] == "spring" && r[fits.col("family")] == "hdegpd") {
      EXPECT_EQ(r[fits.col("status")], "INSUFFICIENT_DATA");
      EXPECT_EQ(r[fits.col("xi")], "");
      found = true;
    }
  EXPECT_TRUE(found);
}

TEST(CliPipeline, DeterministicOutputDirectory) {
  const auto a = scratch("det_a");
  const auto b = scratch("det_b");
  const std::string args = " -i " + (kFixtures / "cli" / "heavy_tail.csv").string() +
                           " --replicates 30 --seed 5 --station H001 --season autumn --n-years 3 --out ";
  ASSERT_EQ(run_cli("all" + args + a.string()), 0);
  ASSERT_EQ(run_cli("all" + args + b.string()), 0);
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(a)) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  EXPECT_EQ(names, (std::vector<std::string>{"acf.csv", "exitcurves.csv", "fits.csv", "gof.csv", "manifest.json",
                                             "occurrence.csv", "qq.csv", "risk.csv", "spells.csv"}));
  for (const auto& n : names) {
    SCOPED_TRACE(n);
    if (n == "manifest.json") {
      auto ma = nlohmann::json::parse(slurp(a / n));
      auto mb = nlohmann::json::parse(slurp(b / n));
      for (auto* m : {&ma, &mb}) {
        m->erase("created_at");
        (*m)["config"].erase("output_dir");
        (*m)["overrides"].erase("output_dir");
      }
      EXPECT_EQ(ma, mb);
    } else {
      EXPECT_EQ(slurp(a / n), slurp(b / n));
    }
  }
  const auto m = nlohmann::json::parse(slurp(a / "manifest.json"));
  ASSERT_EQ(m["stations"].size(), 1u);
  EXPECT_EQ(m["stations"][0]["status"], "fitted");
}

TEST(CliPipeline, JsonTablesParse) {
  const auto out = scratch("json_all");
  ASSERT_EQ(run_cli("all --format json --replicates 20 -i " + (kFixtures / "cli" / "heavy_tail.csv").string() +
                    " --season winter --out " + out.string()),
            0);
  for (const char* n : {"spells", "fits", "exitcurves", "gof", "acf", "qq", "risk"}) {
    SCOPED_TRACE(n);
    const auto j = nlohmann::json::parse(slurp(out / (std::string(n) + ".json")));
    EXPECT_TRUE(j.is_array());
    EXPECT_FALSE(j.empty());
  }
  const auto fits = nlohmann::json::parse(slurp(out / "fits.json"));
  EXPECT_EQ(fits[0]["family"], "hdegpd");
  EXPECT_TRUE(fits[0]["params"].contains("xi"));
  EXPECT_TRUE(fits[2]["diagnostics"]["loglik_trace"].is_array());
}

TEST(CliDiagnose, GeometricCalibrationOverSimulatedStations) {
  // Forty stations whose occurrence is a plain two-state Markov chain, so
  // both regimes are geometric; the plug-in geometric GOF test should
  // rarely reject.
  const auto dir = scratch("geom_stations");
  for (int s = 0; s < 40; ++s) {
    Rng rng(derive_seed(2024, static_cast<std::uint64_t>(s)));
    const double p_dry = 0.15 + 0.2 * rng.uniform();
    const double p_wet = 0.3 + 0.3 * rng.uniform();
    std::ofstream os(dir / ("G" + std::to_string(s) + ".csv"));
    Date d = make_date(1960, 1, 1);
    bool wet = false;
    for (int i = 0; i < 31 * 365; ++i, d += std::chrono::days{1}) {
      os << 'G' << s << ',' << format_date(d) << ',' << (wet ? "3.0" : "0.0") << '\n';
      if (rng.uniform() < (wet ? p_wet : p_dry)) wet = !wet;
    }
  }
  RunConfig cfg;
  cfg.inputs = {dir.string()};
  auto run = run_ingest(cfg);
  ASSERT_EQ(run.stations.size(), 40u);
  ASSERT_TRUE(run.errors.empty());
  const auto fits = run_fits(run, cfg);
  const auto gof = gof_table(fits, cfg);
  int tests = 0, kept = 0;
  for (const auto& row : gof.rows) {
    if (std::get<std::string>(row[3]) != "geometric" || std::get<std::string>(row[4]) != "OK") continue;
    ++tests;
    kept += std::get<double>(row[7]) > 0.05;
  }
  ASSERT_GE(tests, 300);
  EXPECT_GE(static_cast<double>(kept) / tests, 0.93) << kept << " / " << tests;
}

TEST(CliDiagnose, ZeroDiscrepancyRowHasUnitPValue) {
  // A sample whose empirical exit probabilities equal the model's exactly.
  std::vector<Duration> durations;
  for (Duration d = 1; d <= 6; ++d) durations.insert(durations.end(), std::size_t{1} << (7 - d), d);
  durations.insert(durations.end(), 2, 7);
  const GofResult g = gof_test(durations, GeometricDistribution({0.5}), GofOptions{6});
  const auto row = gof_row({std::string("S"), std::string("spring"), std::string("dry"), std::string("geometric")}, g);
  EXPECT_EQ(std::get<std::string>(row[4]), "OK");
  EXPECT_DOUBLE_EQ(std::get<double>(row[7]), 1.0);
}

TEST(CliRisk, TableProperties) {
  auto cfg = heavy_tail_config();
  auto run = run_ingest(cfg);
  const auto fits = run_fits(run, cfg);
  const auto t = risk_table(fits, cfg);
  std::map<std::string, std::map<std::int64_t, std::pair<double, double>>> residual;  // season -> d -> (hde, geo)
  for (const auto& row : t.rows) {
    const auto& model = std::get<std::string>(row[2]);
    const auto& metric = std::get<std::string>(row[3]);
    const auto d = std::get<std::int64_t>(row[4]);
    const auto season = std::get<std::string>(row[1]);
    EXPECT_EQ(std::get<std::string>(row[9]), "CONVERGED");
    EXPECT_LT(std::get<double>(row[7]), cfg.precision);
    if (metric != "mean_residual") continue;
    const double mid = 0.5 * (std::get<double>(row[5]) + std::get<double>(row[6]));
    (model == "hdegpd" ? residual[season][d].first : residual[season][d].second) = mid;
  }
  ASSERT_EQ(residual.size(), 4u);
  for (const auto& [season, by_d] : residual) {
    SCOPED_TRACE(season);
    EXPECT_EQ(by_d.at(20).second, by_d.at(40).second);
    EXPECT_EQ(by_d.at(40).second, by_d.at(60).second);
    EXPECT_GE(by_d.at(60).first, by_d.at(60).second);
  }
  for (const auto& f : fits) EXPECT_GT(f.hdegpd.params->egpd.xi, 0.0);
}

TEST(CliSimulate, EmptyDeterministicAndRoundTrip) {
  auto cfg = heavy_tail_config();
  auto run = run_ingest(cfg);
  const auto fits = run_fits(run, cfg);
  const auto& f = fits.front();
  EXPECT_TRUE(occurrence_table(f, 0, 1).rows.empty());
  const auto a = occurrence_table(f, 2, 7);
  const auto b = occurrence_table(f, 2, 7);
  ASSERT_EQ(a.rows.size(), 2u * 92u);
  EXPECT_EQ(a.rows, b.rows);
  EXPECT_NE(a.rows, occurrence_table(f, 2, 8).rows);

  // Refit on a long simulated record.
  const auto sim = occurrence_table(f, 3000, 3);
  std::vector<BmcdState> path;
  for (const auto& row : sim.rows)
    path.push_back({std::get<std::int64_t>(row[3]) ? Regime::Wet : Regime::Dry, std::get<std::int64_t>(row[4])});
  const auto spells = spells_from_path(path);
  const auto refit = fit_hdegpd(spells.dry);
  ASSERT_TRUE(refit.params);
  const auto& truth = *f.hdegpd.params;
  EXPECT_NEAR(refit.params->f1, truth.f1, 0.03);
  EXPECT_NEAR(refit.params->egpd.xi, truth.egpd.xi, 0.08);
  const auto refit_wet = em_fit_geommix(spells.wet);
  ASSERT_TRUE(refit_wet.params);
  EXPECT_NEAR(geommix_mean(*refit_wet.params), geommix_mean(*f.geommix.params), 0.1);
}

TEST(CliSimulate, RequiresKnownStation) {
  const auto out = scratch("sim_missing");
  EXPECT_EQ(run_cli("simulate -i " + (kFixtures / "cli" / "heavy_tail.csv").string() +
                    " --station NOPE --season spring --out " + out.string()),
            2);
  const auto out2 = scratch("sim_ok");
  ASSERT_EQ(run_cli("simulate -i " + (kFixtures / "cli" / "heavy_tail.csv").string() +
                    " --station H001 --season spring --n-years 0 --out " + out2.string()),
            0);
  EXPECT_EQ(slurp(out2 / "occurrence.csv"), "station_id,season,day,state,duration\n");
}

}  // namespace
