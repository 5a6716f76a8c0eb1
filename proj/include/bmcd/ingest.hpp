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

// Station ingestion: parse daily precipitation files, repair short gaps,
// threshold into wet/dry occurrence, and cut seasonal spell datasets.

#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "bmcd/chain.hpp"
#include "bmcd/distributions.hpp"
#include "bmcd/error.hpp"

namespace bmcd {

using Date = std::chrono::sys_days;

inline Date make_date(int y, unsigned m, unsigned d) {
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  require(ymd.ok(), ErrorCode::InvalidArgument, "invalid calendar date");
  return Date{ymd};
}

inline std::chrono::year_month_day ymd_of(Date d) { return std::chrono::year_month_day{d}; }

/// YYYY-MM-DD
inline std::string format_date(Date d) {
  const auto ymd = ymd_of(d);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) return out;
    start = comma + 1;
  }
}

template <typename T>
inline std::optional<T> parse_number(std::string_view s) {
  T v{};
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<Date> parse_date_digits(std::string_view y, std::string_view m, std::string_view d) {
  const auto yy = parse_number<int>(y);
  const auto mm = parse_number<unsigned>(m);
  const auto dd = parse_number<unsigned>(d);
  if (!yy || !mm || !dd) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{*yy}, std::chrono::month{*mm}, std::chrono::day{*dd}};
  if (!ymd.ok()) return std::nullopt;
  return Date{ymd};
}

}  // namespace detail

/// YYYY-MM-DD, strictly.
inline std::optional<Date> parse_iso_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  return detail::parse_date_digits(s.substr(0, 4), s.substr(5, 2), s.substr(8, 2));
}

/// YYYYMMDD, strictly.
inline std::optional<Date> parse_compact_date(std::string_view s) {
  if (s.size() != 8) return std::nullopt;
  return detail::parse_date_digits(s.substr(0, 4), s.substr(4, 2), s.substr(6, 2));
}

// ---------------------------------------------------------------------------
// Daily series

/// One value per calendar day from `start`; empty optionals are missing.
struct DailySeries {
  std::string station_id;
  Date start{};
  std::vector<std::optional<double>> precip;

  Date date_at(std::size_t i) const { return start + std::chrono::days{static_cast<int>(i)}; }
  bool empty() const { return precip.empty(); }
};

enum class InputFormat { Ecad, GenericCsv };

inline InputFormat parse_input_format(std::string_view s) {
  if (s == "ecad") return InputFormat::Ecad;
  if (s == "generic_csv") return InputFormat::GenericCsv;
  throw Error(ErrorCode::InvalidArgument, "unknown input format '" + std::string(s) + "'");
}

inline const char* to_string(InputFormat f) { return f == InputFormat::Ecad ? "ecad" : "generic_csv"; }

namespace detail {

[[noreturn]] inline void parse_fail(std::size_t line_no, const std::string& what) {
  throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": " + what);
}

/// Appends one dated value, filling skipped calendar days with missing.
class SeriesBuilder {
 public:
  explicit SeriesBuilder(DailySeries& s) : s_(s) {}

  void push(Date date, std::optional<double> value, std::size_t line_no) {
    if (s_.precip.empty()) {
      s_.start = date;
    } else {
      const Date last = s_.date_at(s_.precip.size() - 1);
      if (date <= last) {
        throw Error(ErrorCode::NonMonotoneDates,
                    "line " + std::to_string(line_no) + ": date " + format_date(date) + " does not follow " + format_date(last));
      }
      for (Date d = last + std::chrono::days{1}; d < date; d += std::chrono::days{1}) s_.precip.emplace_back();
    }
    s_.precip.push_back(value);
  }

 private:
  DailySeries& s_;
};

}  // namespace detail

/// ECA&D text export: free-text preamble, then a header row naming the
/// columns (STAID or SOUID, DATE, RR, Q_RR) and comma-separated data rows.
/// RR is in 0.1 mm. Q_RR = 9, RR = -9999 and any negative RR are missing.
/// Calendar days absent from the file are missing as well.
inline DailySeries parse_ecad(std::istream& in) {
  DailySeries s;
  detail::SeriesBuilder builder(s);
  std::string line;
  std::size_t line_no = 0;
  int col_id = -1, col_date = -1, col_rr = -1, col_q = -1;
  std::size_t n_cols = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = detail::trim(line);
    if (t.empty()) continue;
    const auto fields = detail::split_fields(t);
    if (col_date < 0) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (fields[i] == "DATE") col_date = static_cast<int>(i);
        if (fields[i] == "RR") col_rr = static_cast<int>(i);
        if (fields[i] == "Q_RR") col_q = static_cast<int>(i);
        if (fields[i] == "STAID" || (fields[i] == "SOUID" && col_id < 0)) col_id = static_cast<int>(i);
      }
      if (col_date >= 0 && col_rr >= 0) {
        n_cols = fields.size();
      } else {
        col_date = col_rr = col_q = col_id = -1;
      }
      continue;
    }
    if (fields.size() != n_cols) detail::parse_fail(line_no, "expected " + std::to_string(n_cols) + " fields");
    const auto date = parse_compact_date(fields[static_cast<std::size_t>(col_date)]);
    if (!date) detail::parse_fail(line_no, "bad date '" + std::string(fields[static_cast<std::size_t>(col_date)]) + "'");
    const auto rr = detail::parse_number<long>(fields[static_cast<std::size_t>(col_rr)]);
    if (!rr) detail::parse_fail(line_no, "bad RR value");
    std::optional<long> q;
    if (col_q >= 0) {
      q = detail::parse_number<long>(fields[static_cast<std::size_t>(col_q)]);
      if (!q) detail::parse_fail(line_no, "bad Q_RR value");
    }
    if (col_id >= 0) {
      const std::string id(fields[static_cast<std::size_t>(col_id)]);
      if (s.station_id.empty()) s.station_id = id;
      else if (id != s.station_id) detail::parse_fail(line_no, "station id changes within file");
    }
    const bool missing = (q && *q == 9) || *rr < 0;
    builder.push(*date, missing ? std::nullopt : std::optional<double>(static_cast<double>(*rr) / 10.0), line_no);
  }
  if (col_date < 0) throw Error(ErrorCode::Parse, "no ECA&D header row (DATE, RR) found");
  return s;
}

/// station_id,date,precip_mm with ISO dates and NA for missing; an optional
/// header row starting with "station_id" is skipped.
inline DailySeries parse_generic_csv(std::istream& in) {
  DailySeries s;
  detail::SeriesBuilder builder(s);
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = detail::trim(line);
    if (t.empty()) continue;
    const auto fields = detail::split_fields(t);
    if (first && !fields.empty() && fields[0] == "station_id") {
      first = false;
      continue;
    }
    first = false;
    if (fields.size() != 3) detail::parse_fail(line_no, "expected 3 fields");
    if (fields[0].empty()) detail::parse_fail(line_no, "empty station id");
    const std::string id(fields[0]);
    if (s.station_id.empty()) s.station_id = id;
    else if (id != s.station_id) detail::parse_fail(line_no, "station id changes within file");
    const auto date = parse_iso_date(fields[1]);
    if (!date) detail::parse_fail(line_no, "bad date '" + std::string(fields[1]) + "'");
    std::optional<double> value;
    if (fields[2] != "NA") {
      value = detail::parse_number<double>(fields[2]);
      if (!value || !std::isfinite(*value) || *value < 0.0)
        detail::parse_fail(line_no, "bad precipitation value '" + std::string(fields[2]) + "'");
    }
    builder.push(*date, value, line_no);
  }
  return s;
}

inline DailySeries parse_station_file(const std::string& path, InputFormat format) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  DailySeries s = format == InputFormat::Ecad ? parse_ecad(in) : parse_generic_csv(in);
  if (s.station_id.empty()) {
    const auto slash = path.find_last_of('/');
    std::string stem = path.substr(slash == std::string::npos ? 0 : slash + 1);
    s.station_id = stem.substr(0, stem.find('.'));
  }
  return s;
}

/// Drops records before `first`.
inline DailySeries filter_start_date(const DailySeries& s, Date first) {
  DailySeries out{s.station_id, s.start, {}};
  if (s.empty()) return out;
  const auto skip = std::max<long>(0, (first - s.start).count());
  if (static_cast<std::size_t>(skip) >= s.precip.size()) return out;
  out.start = s.date_at(static_cast<std::size_t>(skip));
  out.precip.assign(s.precip.begin() + skip, s.precip.end());
  return out;
}

// ---------------------------------------------------------------------------
// Gap repair and occurrence

struct PrecipRun {
  Date start{};
  std::vector<double> values;
};

/// Interior missing runs of length <= max_interpolated are filled by linear
/// interpolation between the bracketing values; longer runs and runs
/// touching either end split the series.
inline std::vector<PrecipRun> fill_gaps(const DailySeries& s, std::size_t max_interpolated = 3) {
  std::vector<PrecipRun> runs;
  const auto& p = s.precip;
  std::size_t i = 0;
  while (i < p.size() && !p[i]) ++i;
  PrecipRun cur;
  while (i < p.size()) {
    if (cur.values.empty()) cur.start = s.date_at(i);
    cur.values.push_back(*p[i]);
    std::size_t j = i + 1;
    while (j < p.size() && !p[j]) ++j;
    const std::size_t gap = j - i - 1;
    if (j == p.size()) break;
    if (gap == 0) {
      i = j;
      continue;
    }
    if (gap <= max_interpolated) {
      const double a = *p[i], b = *p[j];
      for (std::size_t k = 1; k <= gap; ++k)
        cur.values.push_back(a + (b - a) * static_cast<double>(k) / static_cast<double>(gap + 1));
    } else {
      runs.push_back(std::move(cur));
      cur = PrecipRun{};
    }
    i = j;
  }
  if (!cur.values.empty()) runs.push_back(std::move(cur));
  return runs;
}

/// A maximal run of recorded days as wet (1) / dry (0) states.
struct OccurrenceSegment {
  Date start{};
  std::vector<std::uint8_t> states;
};

/// Wet iff precipitation strictly exceeds the threshold.
inline OccurrenceSegment threshold_occurrence(const PrecipRun& run, double wet_threshold_mm = 0.6) {
  require(!run.values.empty(), ErrorCode::InvalidArgument, "threshold_occurrence requires a non-empty run");
  OccurrenceSegment seg{run.start, {}};
  seg.states.reserve(run.values.size());
  for (double v : run.values) seg.states.push_back(v > wet_threshold_mm ? 1 : 0);
  return seg;
}

// ---------------------------------------------------------------------------
// Spells

enum class Season { Spring, Summer, Autumn, Winter };

inline constexpr std::array<Season, 4> kAllSeasons{Season::Spring, Season::Summer, Season::Autumn, Season::Winter};

inline const char* to_string(Season s) {
  switch (s) {
    case Season::Spring: return "spring";
    case Season::Summer: return "summer";
    case Season::Autumn: return "autumn";
    case Season::Winter: return "winter";
  }
  return "unknown";
}

inline Season parse_season(std::string_view s) {
  for (Season x : kAllSeasons)
    if (s == to_string(x)) return x;
  throw Error(ErrorCode::InvalidArgument, "unknown season '" + std::string(s) + "'");
}

/// MAM spring, JJA summer, SON autumn, DJF winter.
inline Season season_of(Date d) {
  const unsigned m = static_cast<unsigned>(ymd_of(d).month());
  if (m >= 3 && m <= 5) return Season::Spring;
  if (m >= 6 && m <= 8) return Season::Summer;
  if (m >= 9 && m <= 11) return Season::Autumn;
  return Season::Winter;
}

struct SpellRecord {
  Regime kind = Regime::Dry;
  Duration duration = 1;
  Date start_date{};
  Season season = Season::Spring;
  int year = 0;

  friend bool operator==(const SpellRecord&, const SpellRecord&) = default;
};

/// Run-length encoding of a segment, boundary runs included.
inline std::vector<SpellRecord> run_lengths(const OccurrenceSegment& seg) {
  std::vector<SpellRecord> out;
  for (std::size_t i = 0; i < seg.states.size();) {
    std::size_t j = i;
    while (j < seg.states.size() && seg.states[j] == seg.states[i]) ++j;
    const Date start = seg.start + std::chrono::days{static_cast<int>(i)};
    out.push_back({seg.states[i] ? Regime::Wet : Regime::Dry, static_cast<Duration>(j - i), start, season_of(start),
                   static_cast<int>(ymd_of(start).year())});
    i = j;
  }
  return out;
}

/// Complete spells only: the first and last run of the segment are dropped.
inline std::vector<SpellRecord> extract_spells(const OccurrenceSegment& seg) {
  require(!seg.states.empty(), ErrorCode::InvalidArgument, "extract_spells requires a non-empty segment");
  auto runs = run_lengths(seg);
  if (runs.size() <= 2) return {};
  return {runs.begin() + 1, runs.end() - 1};
}

// ---------------------------------------------------------------------------
// Datasets

struct SpellDataset {
  std::string station_id;
  Season season = Season::Spring;
  std::vector<SpellRecord> dry;
  std::vector<SpellRecord> wet;
  CyclesByYear cycles_per_year;

  std::vector<Duration> dry_durations() const {
    std::vector<Duration> out;
    for (const auto& s : dry) out.push_back(s.duration);
    return out;
  }
  std::vector<Duration> wet_durations() const {
    std::vector<Duration> out;
    for (const auto& s : wet) out.push_back(s.duration);
    return out;
  }
};

struct Rejected {
  double cumulative_years = 0.0;
  int min_years = 0;
};

/// Recorded days (after date filtering and gap removal) over 365.
inline double cumulative_years(std::int64_t recorded_days) { return static_cast<double>(recorded_days) / 365.0; }

/// Spells must be in temporal order. A cycle is a dry spell followed
/// immediately by a wet spell with both in `season` and in the same year.
inline std::variant<SpellDataset, Rejected> build_dataset(const std::string& station_id,
                                                          const std::vector<SpellRecord>& spells, Season season,
                                                          std::int64_t recorded_days, int min_years = 30) {
  const double years = cumulative_years(recorded_days);
  if (years < static_cast<double>(min_years)) return Rejected{years, min_years};
  SpellDataset ds;
  ds.station_id = station_id;
  ds.season = season;
  for (std::size_t i = 0; i < spells.size(); ++i) {
    const auto& s = spells[i];
    if (s.season != season) continue;
    (s.kind == Regime::Dry ? ds.dry : ds.wet).push_back(s);
    if (s.kind != Regime::Dry || i + 1 == spells.size()) continue;
    const auto& n = spells[i + 1];
    const bool adjacent = n.start_date == s.start_date + std::chrono::days{static_cast<int>(s.duration)};
    if (n.kind == Regime::Wet && adjacent && n.season == season && n.year == s.year)
      ds.cycles_per_year[s.year].push_back({s.duration, n.duration});
  }
  return ds;
}

struct IngestOptions {
  double wet_threshold_mm = 0.6;
  int min_years = 30;
  Date start_date = make_date(1945, 1, 1);
  std::vector<Season> seasons{kAllSeasons.begin(), kAllSeasons.end()};
};

/// Everything derived from one station file.
struct StationIngest {
  std::string station_id;
  std::int64_t recorded_days = 0;
  double cumulative_years = 0.0;
  bool rejected = false;
  std::vector<SpellRecord> spells;          // all seasons, temporal order
  std::vector<SpellDataset> datasets;       // one per requested season unless rejected
};

inline StationIngest ingest_series(const DailySeries& raw, const IngestOptions& opt = {}) {
  StationIngest out;
  out.station_id = raw.station_id;
  const auto series = filter_start_date(raw, opt.start_date);
  for (const auto& run : fill_gaps(series)) {
    out.recorded_days += static_cast<std::int64_t>(run.values.size());
    const auto spells = extract_spells(threshold_occurrence(run, opt.wet_threshold_mm));
    out.spells.insert(out.spells.end(), spells.begin(), spells.end());
  }
  out.cumulative_years = cumulative_years(out.recorded_days);
  for (Season season : opt.seasons) {
    auto r = build_dataset(out.station_id, out.spells, season, out.recorded_days, opt.min_years);
    if (std::holds_alternative<Rejected>(r)) {
      out.rejected = true;
      out.datasets.clear();
      break;
    }
    out.datasets.push_back(std::move(std::get<SpellDataset>(r)));
  }
  if (opt.seasons.empty()) out.rejected = out.cumulative_years < opt.min_years;
  return out;
}

/// station_id,season,kind,duration,start_date,year
inline void write_spells_csv_header(std::ostream& os) { os << "station_id,season,kind,duration,start_date,year\n"; }

inline void write_spells_csv_rows(std::ostream& os, const SpellDataset& ds) {
  auto row = [&](const SpellRecord& s) {
    os << ds.station_id << ',' << to_string(ds.season) << ',' << (s.kind == Regime::Dry ? "dry" : "wet") << ','
       << s.duration << ',' << format_date(s.start_date) << ',' << s.year << '\n';
  };
  // Interleave in temporal order.
  std::size_t i = 0, j = 0;
  while (i < ds.dry.size() || j < ds.wet.size()) {
    if (j == ds.wet.size() || (i < ds.dry.size() && ds.dry[i].start_date < ds.wet[j].start_date)) row(ds.dry[i++]);
    else row(ds.wet[j++]);
  }
}

}  // namespace bmcd
