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

// Run configuration: defaults, JSON config files and the effective-config echo.

#pragma once

#include <cstdint>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bmcd/distributions.hpp"
#include "bmcd/error.hpp"
#include "bmcd/ingest.hpp"

namespace bmcd::cli {

enum class OutputFormat { Csv, Json };

struct SimulateConfig {
  std::string station;
  std::optional<Season> season;
  std::int64_t n_years = 100;
};

struct RunConfig {
  std::vector<std::string> inputs;
  std::string input_format = "auto";  // auto | ecad | generic_csv
  double wet_threshold_mm = 0.6;
  int min_years = 30;
  std::string start_date = "1945-01-01";
  std::vector<Season> seasons{kAllSeasons.begin(), kAllSeasons.end()};
  std::int64_t gof_min_tail_count = 20;
  int bootstrap_replicates = 1000;
  double alpha = 0.05;
  std::vector<Duration> risk_thresholds{20, 40, 60};
  double precision = 1e-5;
  int acf_max_lag = 10;
  std::uint64_t seed = 0;
  std::string output_dir = "bmcd_out";
  OutputFormat output_format = OutputFormat::Csv;
  SimulateConfig simulate;

  IngestOptions ingest_options() const {
    IngestOptions o;
    o.wet_threshold_mm = wet_threshold_mm;
    o.min_years = min_years;
    o.start_date = *parse_iso_date(start_date);
    o.seasons = seasons;
    return o;
  }
};

inline nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["inputs"] = c.inputs;
  j["input_format"] = c.input_format;
  j["wet_threshold_mm"] = c.wet_threshold_mm;
  j["min_years"] = c.min_years;
  j["start_date"] = c.start_date;
  auto seasons = nlohmann::ordered_json::array();
  for (Season s : c.seasons) seasons.push_back(to_string(s));
  j["seasons"] = seasons;
  j["gof_min_tail_count"] = c.gof_min_tail_count;
  j["bootstrap_replicates"] = c.bootstrap_replicates;
  j["alpha"] = c.alpha;
  j["risk_thresholds"] = c.risk_thresholds;
  j["precision"] = c.precision;
  j["acf_max_lag"] = c.acf_max_lag;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["output_format"] = c.output_format == OutputFormat::Csv ? "csv" : "json";
  nlohmann::ordered_json sim;
  sim["station"] = c.simulate.station;
  sim["season"] = c.simulate.season ? nlohmann::ordered_json(to_string(*c.simulate.season)) : nullptr;
  sim["n_years"] = c.simulate.n_years;
  j["simulate"] = sim;
  return j;
}

/// Keys whose effective value differs from the default.
inline nlohmann::ordered_json overrides(const RunConfig& c) {
  const auto eff = to_json(c);
  const auto def = to_json(RunConfig{});
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  for (const auto& [k, v] : eff.items())
    if (v != def[k]) out[k] = v;
  return out;
}

/// Throws InvalidArgument on any inconsistent value.
inline void validate(const RunConfig& c) {
  auto check = [](bool ok, const std::string& what) { require(ok, ErrorCode::InvalidArgument, what); };
  check(c.input_format == "auto" || c.input_format == "ecad" || c.input_format == "generic_csv",
        "input_format must be auto, ecad or generic_csv");
  check(std::isfinite(c.wet_threshold_mm) && c.wet_threshold_mm >= 0.0, "wet_threshold_mm must be >= 0");
  check(c.min_years >= 0, "min_years must be >= 0");
  check(parse_iso_date(c.start_date).has_value(), "start_date must be YYYY-MM-DD");
  check(c.gof_min_tail_count >= 1, "gof_min_tail_count must be >= 1");
  check(c.bootstrap_replicates >= 1, "bootstrap_replicates must be >= 1");
  check(c.alpha > 0.0 && c.alpha < 1.0, "alpha must lie in (0, 1)");
  for (Duration d : c.risk_thresholds) check(d >= 0, "risk thresholds must be >= 0");
  check(c.precision > 0.0, "precision must be > 0");
  check(c.acf_max_lag >= 0, "acf_max_lag must be >= 0");
  check(c.simulate.n_years >= 0, "simulate.n_years must be >= 0");
}

namespace detail {

template <typename T>
T get_as(const nlohmann::json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::InvalidArgument, "config key '" + key + "' has the wrong type");
  }
}

}  // namespace detail

/// Applies a JSON object on top of `c`. Unknown keys are errors.
inline void apply_json(RunConfig& c, const nlohmann::json& j) {
  require(j.is_object(), ErrorCode::InvalidArgument, "config must be a JSON object");
  using detail::get_as;
  for (const auto& [k, v] : j.items()) {
    if (k == "inputs") c.inputs = get_as<std::vector<std::string>>(v, k);
    else if (k == "input_format") c.input_format = get_as<std::string>(v, k);
    else if (k == "wet_threshold_mm") c.wet_threshold_mm = get_as<double>(v, k);
    else if (k == "min_years") c.min_years = get_as<int>(v, k);
    else if (k == "start_date") c.start_date = get_as<std::string>(v, k);
    else if (k == "seasons") {
      c.seasons.clear();
      for (const auto& s : get_as<std::vector<std::string>>(v, k)) c.seasons.push_back(parse_season(s));
    } else if (k == "gof_min_tail_count") c.gof_min_tail_count = get_as<std::int64_t>(v, k);
    else if (k == "bootstrap_replicates") c.bootstrap_replicates = get_as<int>(v, k);
    else if (k == "alpha") c.alpha = get_as<double>(v, k);
    else if (k == "risk_thresholds") c.risk_thresholds = get_as<std::vector<Duration>>(v, k);
    else if (k == "precision") c.precision = get_as<double>(v, k);
    else if (k == "acf_max_lag") c.acf_max_lag = get_as<int>(v, k);
    else if (k == "seed") c.seed = get_as<std::uint64_t>(v, k);
    else if (k == "output_dir") c.output_dir = get_as<std::string>(v, k);
    else if (k == "output_format") {
      const auto f = get_as<std::string>(v, k);
      require(f == "csv" || f == "json", ErrorCode::InvalidArgument, "output_format must be csv or json");
      c.output_format = f == "csv" ? OutputFormat::Csv : OutputFormat::Json;
    } else if (k == "simulate") {
      require(v.is_object(), ErrorCode::InvalidArgument, "config key 'simulate' must be an object");
      for (const auto& [sk, sv] : v.items()) {
        if (sk == "station") c.simulate.station = get_as<std::string>(sv, sk);
        else if (sk == "season") c.simulate.season = parse_season(get_as<std::string>(sv, sk));
        else if (sk == "n_years") c.simulate.n_years = get_as<std::int64_t>(sv, sk);
        else throw Error(ErrorCode::InvalidArgument, "unknown config key 'simulate." + sk + "'");
      }
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown config key '" + k + "'");
    }
  }
}

inline void load_config_file(RunConfig& c, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::Parse, "config " + path + ": " + e.what());
  }
  apply_json(c, j);
}

}  // namespace bmcd::cli
