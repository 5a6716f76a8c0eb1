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

// Batch pipeline stages behind the command-line tool. Each stage turns the
// ingested stations into one output table; the driver decides which run.

#pragma once

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bmcd/chain.hpp"
#include "bmcd/diagnostics.hpp"
#include "bmcd/distributions.hpp"
#include "bmcd/estimation.hpp"
#include "bmcd/exit_probs.hpp"
#include "bmcd/ingest.hpp"
#include "bmcd/risk.hpp"
#include "bmcd/rng.hpp"
#include "config.hpp"
#include "table.hpp"

namespace bmcd::cli {

namespace fs = std::filesystem;

inline constexpr const char* kToolVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Ingest

struct StationEntry {
  std::string file;
  std::string station_id;
  std::string status;  // accepted | rejected | errored (fitted once fits ran)
  std::string reason;
  StationIngest ingest;
};

struct InputError {
  std::string file;
  std::string message;
};

struct IngestRun {
  std::vector<StationEntry> stations;
  std::vector<InputError> errors;
};

/// Files named directly are taken as given; directories contribute their
/// *.txt, *.csv and *.dat files in name order.
inline std::vector<std::string> expand_inputs(const std::vector<std::string>& inputs, std::vector<InputError>& errors) {
  std::vector<std::string> files;
  for (const auto& in : inputs) {
    std::error_code ec;
    if (fs::is_directory(in, ec)) {
      std::vector<std::string> found;
      for (const auto& e : fs::directory_iterator(in, ec)) {
        const auto ext = e.path().extension().string();
        const auto name = e.path().filename().string();
        if (e.is_regular_file() && !name.starts_with(".") && (ext == ".txt" || ext == ".csv" || ext == ".dat"))
          found.push_back(e.path().string());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else if (fs::is_regular_file(in, ec)) {
      files.push_back(in);
    } else {
      errors.push_back({in, "IO_ERROR: no such file or directory"});
    }
  }
  return files;
}

inline InputFormat resolve_format(const std::string& configured, const std::string& path) {
  if (configured != "auto") return parse_input_format(configured);
  return fs::path(path).extension() == ".csv" ? InputFormat::GenericCsv : InputFormat::Ecad;
}

inline IngestRun run_ingest(const RunConfig& cfg) {
  IngestRun run;
  const auto opt = cfg.ingest_options();
  const auto files = expand_inputs(cfg.inputs, run.errors);
  for (const auto& err : run.errors) run.stations.push_back({err.file, "", "errored", err.message, {}});
  for (const auto& file : files) {
    StationEntry e;
    e.file = file;
    try {
      const auto series = parse_station_file(file, resolve_format(cfg.input_format, file));
      e.ingest = ingest_series(series, opt);
      e.station_id = e.ingest.station_id;
      if (e.ingest.rejected) {
        e.status = "rejected";
        e.reason = "fewer than " + std::to_string(cfg.min_years) + " cumulative years (" +
                   format_double(std::floor(e.ingest.cumulative_years * 100.0) / 100.0) + ")";
      } else {
        e.status = "accepted";
      }
    } catch (const Error& err) {
      e.status = "errored";
      e.reason = err.what();
      run.errors.push_back({file, err.what()});
    }
    run.stations.push_back(std::move(e));
  }
  return run;
}

inline Table spells_table(const IngestRun& run) {
  Table t{{"station_id", "season", "kind", "duration", "start_date", "year"}, {}};
  for (const auto& st : run.stations) {
    for (const auto& ds : st.ingest.datasets) {
      std::vector<const SpellRecord*> all;
      for (const auto& s : ds.dry) all.push_back(&s);
      for (const auto& s : ds.wet) all.push_back(&s);
      std::sort(all.begin(), all.end(), [](auto* a, auto* b) { return a->start_date < b->start_date; });
      for (const auto* s : all)
        t.add({ds.station_id, std::string(to_string(ds.season)), std::string(s->kind == Regime::Dry ? "dry" : "wet"),
               std::int64_t{s->duration}, format_date(s->start_date), std::int64_t{s->year}});
    }
  }
  return t;
}

inline nlohmann::ordered_json to_json(const SpellDataset& ds) {
  nlohmann::ordered_json j;
  j["station_id"] = ds.station_id;
  j["season"] = to_string(ds.season);
  auto spells = [](const std::vector<SpellRecord>& v) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& s : v)
      arr.push_back({{"duration", s.duration}, {"start_date", format_date(s.start_date)}, {"year", s.year}});
    return arr;
  };
  j["dry"] = spells(ds.dry);
  j["wet"] = spells(ds.wet);
  nlohmann::ordered_json cycles = nlohmann::ordered_json::object();
  for (const auto& [year, pairs] : ds.cycles_per_year) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& [d, w] : pairs) arr.push_back({d, w});
    cycles[std::to_string(year)] = arr;
  }
  j["cycles_per_year"] = cycles;
  return j;
}

// ---------------------------------------------------------------------------
// Fits

struct SeasonFits {
  std::string station_id;
  const SpellDataset* dataset = nullptr;
  FitResult<HdeGpdParams> hdegpd;
  FitResult<GeometricParams> geometric_dry;
  FitResult<GeomMixParams> geommix;
  FitResult<GeometricParams> geometric_wet;
};

template <typename P>
FitResult<P> empty_fit() {
  FitResult<P> r;
  r.diagnostics.message = "empty sample";
  return r;
}

/// Seeds derive from (master seed, station, season), so results do not depend
/// on processing order.
inline SeasonFits fit_dataset(const SpellDataset& ds, const RunConfig& cfg) {
  SeasonFits f;
  f.station_id = ds.station_id;
  f.dataset = &ds;
  const auto dry = ds.dry_durations();
  const auto wet = ds.wet_durations();
  if (dry.empty()) {
    f.hdegpd = empty_fit<HdeGpdParams>();
    f.geometric_dry = empty_fit<GeometricParams>();
  } else {
    f.hdegpd = fit_hdegpd(dry);
    f.geometric_dry = fit_geometric(dry);
  }
  if (wet.empty()) {
    f.geommix = empty_fit<GeomMixParams>();
    f.geometric_wet = empty_fit<GeometricParams>();
  } else {
    EmOptions em;
    em.seed = derive_seed(cfg.seed, ds.station_id, std::string_view(to_string(ds.season)), "fit");
    f.geommix = em_fit_geommix(wet, em);
    f.geometric_wet = fit_geometric(wet);
  }
  return f;
}

inline std::vector<SeasonFits> run_fits(IngestRun& run, const RunConfig& cfg) {
  std::vector<SeasonFits> out;
  for (auto& st : run.stations) {
    if (st.status != "accepted") continue;
    for (const auto& ds : st.ingest.datasets) out.push_back(fit_dataset(ds, cfg));
    st.status = "fitted";
  }
  return out;
}

inline const std::vector<std::string> kFitColumns{
    "station_id", "season", "regime", "family", "status", "n_obs", "f1", "kappa", "sigma", "xi", "pi",
    "p1", "p2", "p", "iterations", "objective", "at_clamp", "restarts_best", "message"};

template <typename P>
std::vector<Cell> fit_row(const SeasonFits& f, const char* regime, const char* family, const FitResult<P>& r) {
  std::vector<Cell> row{f.station_id, std::string(to_string(f.dataset->season)), std::string(regime),
                        std::string(family), std::string(to_string(r.status)), r.n_obs};
  row.resize(kFitColumns.size());
  if (r.params) {
    const P& p = *r.params;
    if constexpr (std::is_same_v<P, HdeGpdParams>) {
      row[6] = p.f1;
      row[7] = p.egpd.kappa;
      row[8] = p.egpd.sigma;
      row[9] = p.egpd.xi;
    } else if constexpr (std::is_same_v<P, GeomMixParams>) {
      row[10] = p.pi;
      row[11] = p.p1;
      row[12] = p.p2;
    } else {
      row[13] = p.p;
    }
  }
  row[14] = std::int64_t{r.diagnostics.iterations};
  if (std::isfinite(r.diagnostics.objective)) row[15] = r.diagnostics.objective;
  row[16] = r.diagnostics.at_clamp;
  row[17] = std::int64_t{r.diagnostics.restart_index};
  row[18] = r.diagnostics.message;
  return row;
}

inline Table fits_table(const std::vector<SeasonFits>& fits) {
  Table t{kFitColumns, {}};
  for (const auto& f : fits) {
    t.add(fit_row(f, "dry", "hdegpd", f.hdegpd));
    t.add(fit_row(f, "dry", "geometric", f.geometric_dry));
    t.add(fit_row(f, "wet", "geommix", f.geommix));
    t.add(fit_row(f, "wet", "geometric", f.geometric_wet));
  }
  return t;
}

template <typename P>
nlohmann::ordered_json fit_json(const SeasonFits& f, const char* regime, const char* family, const FitResult<P>& r) {
  nlohmann::ordered_json j;
  j["station_id"] = f.station_id;
  j["season"] = to_string(f.dataset->season);
  j["regime"] = regime;
  j["family"] = family;
  j["status"] = to_string(r.status);
  j["n_obs"] = r.n_obs;
  nlohmann::ordered_json p = nullptr;
  if (r.params) {
    if constexpr (std::is_same_v<P, HdeGpdParams>)
      p = {{"f1", r.params->f1}, {"kappa", r.params->egpd.kappa}, {"sigma", r.params->egpd.sigma}, {"xi", r.params->egpd.xi}};
    else if constexpr (std::is_same_v<P, GeomMixParams>)
      p = {{"pi", r.params->pi}, {"p1", r.params->p1}, {"p2", r.params->p2}};
    else
      p = {{"p", r.params->p}};
  }
  j["params"] = p;
  const auto& d = r.diagnostics;
  j["diagnostics"] = {{"converged", d.converged},
                      {"iterations", d.iterations},
                      {"objective", std::isfinite(d.objective) ? nlohmann::ordered_json(d.objective) : nullptr},
                      {"restart_index", d.restart_index},
                      {"at_clamp", d.at_clamp},
                      {"monotonicity_violations", d.monotonicity_violations},
                      {"loglik_trace", d.loglik_trace},
                      {"message", d.message}};
  return j;
}

inline nlohmann::ordered_json fits_json(const std::vector<SeasonFits>& fits) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& f : fits) {
    arr.push_back(fit_json(f, "dry", "hdegpd", f.hdegpd));
    arr.push_back(fit_json(f, "dry", "geometric", f.geometric_dry));
    arr.push_back(fit_json(f, "wet", "geommix", f.geommix));
    arr.push_back(fit_json(f, "wet", "geometric", f.geometric_wet));
  }
  return arr;
}

// ---------------------------------------------------------------------------
// Diagnostics

/// A fitted model for one regime, ready for diagnostics.
struct FittedModel {
  const char* regime;
  const char* family;
  DistributionPtr dist;
  std::vector<Duration> sample;
};

inline std::vector<FittedModel> fitted_models(const SeasonFits& f) {
  std::vector<FittedModel> out;
  const auto dry = f.dataset->dry_durations();
  const auto wet = f.dataset->wet_durations();
  if (f.hdegpd.params) out.push_back({"dry", "hdegpd", std::make_shared<HdeGpdDistribution>(*f.hdegpd.params), dry});
  if (f.geometric_dry.params)
    out.push_back({"dry", "geometric", std::make_shared<GeometricDistribution>(*f.geometric_dry.params), dry});
  if (f.geommix.params) out.push_back({"wet", "geommix", std::make_shared<GeomMixDistribution>(*f.geommix.params), wet});
  if (f.geometric_wet.params)
    out.push_back({"wet", "geometric", std::make_shared<GeometricDistribution>(*f.geometric_wet.params), wet});
  return out;
}

inline std::vector<Cell> key_cells(const SeasonFits& f, const FittedModel& m) {
  return {f.station_id, std::string(to_string(f.dataset->season)), std::string(m.regime), std::string(m.family)};
}

inline Table exitcurves_table(const std::vector<SeasonFits>& fits, const RunConfig& cfg) {
  Table t{{"station_id", "season", "regime", "family", "d", "q_model", "q_emp", "band_sd", "count"}, {}};
  for (const auto& f : fits) {
    for (const auto& m : fitted_models(f)) {
      const Duration d_max = auto_d_max(m.sample, cfg.gof_min_tail_count);
      for (const auto& p : exit_curve(m.sample, *m.dist, d_max)) {
        auto row = key_cells(f, m);
        row.insert(row.end(), {std::int64_t{p.d}, p.q_model, opt_cell(p.q_emp), opt_cell(p.band_sd), p.count});
        t.add(std::move(row));
      }
    }
  }
  return t;
}

inline std::vector<Cell> gof_row(std::vector<Cell> key, const GofResult& g) {
  key.insert(key.end(), {std::string(to_string(g.status)), std::isfinite(g.statistic) ? Cell{g.statistic} : Cell{},
                         std::int64_t{g.dof}, opt_cell(g.p_value), std::int64_t{g.d_max}, g.n_spells,
                         std::isfinite(g.condition_number) ? Cell{g.condition_number} : Cell{}});
  return key;
}

inline const std::vector<std::string> kGofColumns{"station_id", "season",  "regime",   "family",   "status",          "statistic",
                                                  "dof",        "p_value", "d_max",    "n_spells", "condition_number"};

inline Table gof_table(const std::vector<SeasonFits>& fits, const RunConfig& cfg) {
  Table t{kGofColumns, {}};
  GofOptions opt;
  opt.min_tail_count = cfg.gof_min_tail_count;
  for (const auto& f : fits)
    for (const auto& m : fitted_models(f)) t.add(gof_row(key_cells(f, m), gof_test(m.sample, *m.dist, opt)));
  return t;
}

inline Table acf_table(const std::vector<SeasonFits>& fits, const RunConfig& cfg) {
  Table t{{"station_id", "season", "status", "lag", "r_dd", "r_dw", "r_wd", "r_ww", "pairs", "bound"}, {}};
  for (const auto& f : fits) {
    const auto acf = acf_bivariate(f.dataset->cycles_per_year, cfg.acf_max_lag);
    const Cell station = f.station_id, season = std::string(to_string(f.dataset->season));
    if (acf.status != AcfStatus::Ok) {
      t.add({station, season, std::string(to_string(acf.status)), {}, {}, {}, {}, {}, {}, {}});
      continue;
    }
    for (const auto& l : acf.lags)
      t.add({station, season, std::string(to_string(acf.status)), std::int64_t{l.lag}, l.r[0][0], l.r[0][1], l.r[1][0],
             l.r[1][1], l.pairs, l.bound});
  }
  return t;
}

inline Table qq_table(const std::vector<SeasonFits>& fits, const RunConfig& cfg) {
  Table t{{"station_id", "season", "regime", "family", "rank", "observed", "lower", "upper", "multiplicity"}, {}};
  for (const auto& f : fits) {
    for (const auto& m : fitted_models(f)) {
      if (m.sample.empty()) continue;
      const auto seed = derive_seed(cfg.seed, f.station_id, std::string_view(to_string(f.dataset->season)),
                                    std::string_view(m.regime), std::string_view(m.family), "qq");
      const auto env = qq_envelope(m.sample, *m.dist, cfg.bootstrap_replicates, cfg.alpha, seed);
      for (const auto& p : env.points) {
        auto row = key_cells(f, m);
        row.insert(row.end(), {p.rank, std::int64_t{p.observed}, p.lower, p.upper, p.multiplicity});
        t.add(std::move(row));
      }
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// Risk

inline std::vector<Cell> risk_row(const SeasonFits& f, const char* model, const char* metric, Duration d,
                                  const RiskBound& b) {
  auto num = [](double v) { return std::isfinite(v) ? Cell{v} : Cell{}; };
  return {f.station_id,       std::string(to_string(f.dataset->season)), std::string(model), std::string(metric),
          std::int64_t{d},    num(b.lower),                               num(b.upper),      num(b.width),
          num(b.u_used),      std::string(to_string(b.status))};
}

inline RiskBound exact_bound(double v, double precision) {
  return {v, v, 0.0, 0.0, precision, RiskStatus::Converged};
}

inline Table risk_table(const std::vector<SeasonFits>& fits, const RunConfig& cfg) {
  Table t{{"station_id", "season", "model", "metric", "d", "lower", "upper", "width", "u_used", "status"}, {}};
  for (const auto& f : fits) {
    for (Duration d : cfg.risk_thresholds) {
      if (f.hdegpd.params) {
        t.add(risk_row(f, "hdegpd", "mean_residual", d, mean_residual_hdegpd(*f.hdegpd.params, d, cfg.precision)));
        if (f.geommix.params)
          t.add(risk_row(f, "hdegpd", "proportion_long_dry", d,
                         proportion_time_long_dry(*f.hdegpd.params, *f.geommix.params, d, cfg.precision)));
      }
      if (f.geometric_dry.params) {
        t.add(risk_row(f, "geometric", "mean_residual", d,
                       exact_bound(mean_residual_geometric(*f.geometric_dry.params, d), cfg.precision)));
        if (f.geometric_wet.params)
          t.add(risk_row(f, "geometric", "proportion_long_dry", d,
                         proportion_time_long_dry(*f.geometric_dry.params, *f.geometric_wet.params, d, cfg.precision)));
      }
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// Simulation

/// Days in a season of a non-leap year.
inline std::int64_t season_length(Season s) {
  switch (s) {
    case Season::Spring: return 92;
    case Season::Summer: return 92;
    case Season::Autumn: return 91;
    case Season::Winter: return 90;
  }
  return 0;
}

/// n_years seasons of daily occurrence from the fitted hdeGPD (dry) and
/// geometric mixture (wet) laws, run as one continuous chain.
inline Table occurrence_table(const SeasonFits& f, std::int64_t n_years, std::uint64_t master_seed) {
  Table t{{"station_id", "season", "day", "state", "duration"}, {}};
  require(f.hdegpd.params.has_value(), ErrorCode::InvalidArgument,
          "no hdeGPD fit for station " + f.station_id + " (" + to_string(f.hdegpd.status) + ")");
  require(f.geommix.params.has_value(), ErrorCode::InvalidArgument,
          "no geometric-mixture fit for station " + f.station_id + " (" + to_string(f.geommix.status) + ")");
  const auto n_steps = n_years * season_length(f.dataset->season);
  if (n_steps == 0) return t;
  const auto q_dry = tabulate_exit_probs(HdeGpdDistribution(*f.hdegpd.params));
  const auto q_wet = tabulate_exit_probs(GeomMixDistribution(*f.geommix.params));
  Rng rng(derive_seed(master_seed, f.station_id, std::string_view(to_string(f.dataset->season)), "simulate"));
  std::int64_t day = 0;
  const Cell station = f.station_id, season = std::string(to_string(f.dataset->season));
  simulate_chain_visit(q_dry, q_wet, n_steps, rng, [&](const BmcdState& s) {
    t.add({station, season, ++day, std::int64_t{s.r == Regime::Wet ? 1 : 0}, std::int64_t{s.d}});
  });
  return t;
}

// ---------------------------------------------------------------------------
// Output

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class OutputWriter {
 public:
  explicit OutputWriter(const RunConfig& cfg) : dir_(cfg.output_dir), format_(cfg.output_format) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create output directory " + dir_.string() + ": " + ec.message());
  }

  void write(const std::string& stem, const Table& t) {
    if (format_ == OutputFormat::Csv) {
      auto os = open(stem + ".csv");
      write_csv(os, t);
    } else {
      write_json(stem, to_json(t));
    }
  }

  void write_json(const std::string& stem, const nlohmann::ordered_json& j) {
    auto os = open(stem + ".json");
    os << j.dump(2) << '\n';
  }

  const std::vector<std::string>& written() const { return written_; }
  const fs::path& dir() const { return dir_; }

 private:
  std::ofstream open(const std::string& name) {
    std::ofstream os(dir_ / name);
    if (!os) throw Error(ErrorCode::Io, "cannot write " + (dir_ / name).string());
    written_.push_back(name);
    return os;
  }

  fs::path dir_;
  OutputFormat format_;
  std::vector<std::string> written_;
};

inline nlohmann::ordered_json manifest(const std::string& command, const RunConfig& cfg, const IngestRun& run,
                                       const std::vector<std::string>& outputs) {
  nlohmann::ordered_json m;
  m["tool"] = "bmcd";
  m["version"] = kToolVersion;
  m["command"] = command;
  m["created_at"] = utc_timestamp();
  m["config"] = to_json(cfg);
  m["overrides"] = overrides(cfg);
  auto stations = nlohmann::ordered_json::array();
  for (const auto& s : run.stations) {
    nlohmann::ordered_json e;
    e["file"] = s.file;
    e["station_id"] = s.station_id.empty() ? nullptr : nlohmann::ordered_json(s.station_id);
    e["status"] = s.status;
    e["reason"] = s.reason.empty() ? nullptr : nlohmann::ordered_json(s.reason);
    if (s.status != "errored") {
      e["recorded_days"] = s.ingest.recorded_days;
      e["cumulative_years"] = s.ingest.cumulative_years;
    }
    stations.push_back(e);
  }
  m["stations"] = stations;
  auto errors = nlohmann::ordered_json::array();
  for (const auto& e : run.errors) errors.push_back({{"file", e.file}, {"message", e.message}});
  m["errors"] = errors;
  m["outputs"] = outputs;
  return m;
}

}  // namespace bmcd::cli
