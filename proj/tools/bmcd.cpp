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

// bmcd command-line tool.
//
//   bmcd ingest|fit|diagnose|simulate|risk|all [--config FILE] [options]
//
// Exit status: 0 success, 1 internal error, 2 input errors (partial results
// are still written).

#include <CLI11.hpp>
#include <iostream>

#include "config.hpp"
#include "pipeline.hpp"

namespace {

using namespace bmcd;
using namespace bmcd::cli;

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;

struct Flags {
  std::string config;
  std::vector<std::string> inputs;
  std::optional<std::string> input_format;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<double> threshold;
  std::optional<int> min_years;
  std::optional<std::string> start_date;
  std::vector<std::string> seasons;
  std::optional<std::int64_t> min_tail_count;
  std::optional<int> replicates;
  std::optional<double> alpha;
  std::vector<Duration> thresholds;
  std::optional<double> precision;
  std::optional<int> max_lag;
  std::optional<std::string> station;
  std::optional<std::int64_t> n_years;
};

RunConfig build_config(const Flags& f) {
  RunConfig c;
  if (!f.config.empty()) load_config_file(c, f.config);
  if (!f.inputs.empty()) c.inputs = f.inputs;
  if (f.input_format) c.input_format = *f.input_format;
  if (f.seed) c.seed = *f.seed;
  if (f.out) c.output_dir = *f.out;
  if (f.format) c.output_format = *f.format == "json" ? OutputFormat::Json : OutputFormat::Csv;
  if (f.threshold) c.wet_threshold_mm = *f.threshold;
  if (f.min_years) c.min_years = *f.min_years;
  if (f.start_date) c.start_date = *f.start_date;
  if (!f.seasons.empty()) {
    c.seasons.clear();
    for (const auto& s : f.seasons) c.seasons.push_back(parse_season(s));
  }
  if (f.min_tail_count) c.gof_min_tail_count = *f.min_tail_count;
  if (f.replicates) c.bootstrap_replicates = *f.replicates;
  if (f.alpha) c.alpha = *f.alpha;
  if (!f.thresholds.empty()) c.risk_thresholds = f.thresholds;
  if (f.precision) c.precision = *f.precision;
  if (f.max_lag) c.acf_max_lag = *f.max_lag;
  if (f.station) c.simulate.station = *f.station;
  if (f.n_years) c.simulate.n_years = *f.n_years;
  if (c.seasons.size() == 1 && !c.simulate.season) c.simulate.season = c.seasons.front();
  validate(c);
  return c;
}

const SeasonFits& find_fit(const std::vector<SeasonFits>& fits, const RunConfig& cfg) {
  require(!cfg.simulate.station.empty(), ErrorCode::InvalidArgument, "simulate requires a station (--station)");
  require(cfg.simulate.season.has_value(), ErrorCode::InvalidArgument,
          "simulate requires exactly one season (--season) or simulate.season in the config");
  for (const auto& f : fits)
    if (f.station_id == cfg.simulate.station && f.dataset->season == *cfg.simulate.season) return f;
  throw Error(ErrorCode::InvalidArgument, "no fitted dataset for station '" + cfg.simulate.station + "' in " +
                                              to_string(*cfg.simulate.season));
}

int run(const std::string& command, const RunConfig& cfg) {
  OutputWriter out(cfg);
  IngestRun ingest = run_ingest(cfg);
  auto is = [&](const char* c) { return command == c || command == "all"; };

  if (is("ingest")) {
    if (cfg.output_format == OutputFormat::Csv) {
      out.write("spells", spells_table(ingest));
    } else {
      auto arr = nlohmann::ordered_json::array();
      for (const auto& st : ingest.stations)
        for (const auto& ds : st.ingest.datasets) arr.push_back(to_json(ds));
      out.write_json("spells", arr);
    }
  }
  bool input_error = !ingest.errors.empty();
  if (command != "ingest") {
    const auto fits = run_fits(ingest, cfg);
    if (is("fit")) {
      if (cfg.output_format == OutputFormat::Csv) out.write("fits", fits_table(fits));
      else out.write_json("fits", fits_json(fits));
    }
    if (is("diagnose")) {
      out.write("exitcurves", exitcurves_table(fits, cfg));
      out.write("gof", gof_table(fits, cfg));
      out.write("acf", acf_table(fits, cfg));
      out.write("qq", qq_table(fits, cfg));
    }
    if (is("risk")) out.write("risk", risk_table(fits, cfg));
    if (command == "simulate" || (command == "all" && !cfg.simulate.station.empty())) {
      try {
        out.write("occurrence", occurrence_table(find_fit(fits, cfg), cfg.simulate.n_years, cfg.seed));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::InvalidArgument) throw;
        ingest.errors.push_back({"simulate", e.what()});
        input_error = true;
      }
    }
  }
  auto outputs = out.written();
  outputs.insert(outputs.begin(), "manifest.json");
  out.write_json("manifest", manifest(command, cfg, ingest, outputs));
  for (const auto& e : ingest.errors) std::cerr << "bmcd: " << e.file << ": " << e.message << '\n';
  return input_error ? kExitInput : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Binary Markov chain with duration: spell-duration modelling of daily precipitation occurrence"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  Flags f;
  app.add_option("-c,--config", f.config, "JSON config file");
  app.add_option("-i,--input", f.inputs, "Station file or directory (repeatable)");
  app.add_option("--input-format", f.input_format, "auto, ecad or generic_csv")
      ->check(CLI::IsMember({"auto", "ecad", "generic_csv"}));
  app.add_option("--seed", f.seed, "Master seed");
  app.add_option("--out", f.out, "Output directory");
  app.add_option("--format", f.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--threshold", f.threshold, "Wet-day threshold in mm (wet iff strictly above)");
  app.add_option("--min-years", f.min_years, "Minimum cumulative years per station");
  app.add_option("--start-date", f.start_date, "Drop records before this date (YYYY-MM-DD)");
  app.add_option("--season", f.seasons, "Season to process (repeatable)")
      ->check(CLI::IsMember({"spring", "summer", "autumn", "winter"}));
  app.add_option("--min-tail-count", f.min_tail_count, "Spells required beyond the goodness-of-fit d_max");
  app.add_option("--replicates", f.replicates, "Bootstrap replicates for the Q-Q envelope");
  app.add_option("--alpha", f.alpha, "Q-Q envelope level");
  app.add_option("--d", f.thresholds, "Risk threshold in days (repeatable)");
  app.add_option("--precision", f.precision, "Target width of risk bounds");
  app.add_option("--max-lag", f.max_lag, "Largest autocorrelation lag");
  app.add_option("--station", f.station, "Station to simulate");
  app.add_option("--n-years", f.n_years, "Simulated seasons");

  std::string command;
  for (const char* name : {"ingest", "fit", "diagnose", "simulate", "risk", "all"}) {
    static const std::map<std::string, std::string> help{
        {"ingest", "Parse station files and write seasonal spell tables"},
        {"fit", "Fit hdeGPD, geometric-mixture and geometric laws per station and season"},
        {"diagnose", "Exit curves, goodness-of-fit tests, autocorrelation and Q-Q envelopes"},
        {"simulate", "Simulate daily occurrence from one station's fitted laws"},
        {"risk", "Certified bounds on dry-spell risk metrics"},
        {"all", "Run every stage"}};
    app.add_subcommand(name, help.at(name))->callback([&command, name] { command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  RunConfig cfg;
  try {
    cfg = build_config(f);
  } catch (const Error& e) {
    std::cerr << "bmcd: " << e.what() << '\n';
    return kExitInput;
  }
  try {
    return run(command, cfg);
  } catch (const Error& e) {
    std::cerr << "bmcd: " << e.what() << '\n';
    return e.code() == ErrorCode::Io ? kExitInput : kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "bmcd: internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}
