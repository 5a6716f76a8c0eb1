#!/usr/bin/env python3
# Copyright (c) 2026 The bmcd authors.
#
# Licensed under the Apache License, Version 2.0 (the "License").
# You may not use this file except in compliance with the License. You may
# obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0.
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Writes the ingest fixture battery next to this script."""

import datetime as dt
import json
import os
import random

HERE = os.path.dirname(os.path.abspath(__file__))

ECAD_PREAMBLE = """EUROPEAN CLIMATE ASSESSMENT & DATASET (ECA&D), file created on: 01-01-2026
THESE DATA CAN BE USED FREELY PROVIDED THAT THE FOLLOWING SOURCE IS ACKNOWLEDGED:

FILE FORMAT (MISSING VALUE CODE IS -9999):

01-06 STAID: Station identifier
08-13 SOUID: Source identifier
15-22 DATE : Date YYYYMMDD
24-28 RR   : precipitation amount in 0.1 mm
30-34 Q_RR : Quality code for RR (0='valid'; 1='suspect'; 9='missing')

"""


def days(start, n):
    d = dt.date.fromisoformat(start)
    return [d + dt.timedelta(days=i) for i in range(n)]


def write_ecad(name, staid, rows):
    """rows: (date, rr_tenths, q)"""
    with open(os.path.join(HERE, name), "w") as f:
        f.write(ECAD_PREAMBLE)
        f.write("STAID, SOUID,    DATE,   RR, Q_RR\n")
        for d, rr, q in rows:
            f.write("%6d,%6d,%s,%5d,%5d\n" % (staid, 100000 + staid, d.strftime("%Y%m%d"), rr, q))


def write_generic(name, sid, rows, header=True):
    """rows: (date, value or None)"""
    with open(os.path.join(HERE, name), "w") as f:
        if header:
            f.write("station_id,date,precip_mm\n")
        for d, v in rows:
            f.write("%s,%s,%s\n" % (sid, d.isoformat(), "NA" if v is None else v))


def main():
    rng = random.Random(20260101)
    cases = []

    def case(name, fmt, **opt):
        c = {"file": name, "format": fmt, "threshold": 0.6, "min_years": 0, "start_date": "1945-01-01"}
        c.update(opt)
        cases.append(c)

    # Plain ECA&D with values at and around the threshold.
    rr = [0, 6, 7, 64, 0, 0, 12, 6, 0, 30, 31, 0, 0, 0, 5, 8, 0, 1, 100, 0]
    write_ecad("ecad_basic.txt", 230, [(d, v, 0) for d, v in zip(days("1990-03-01", len(rr)), rr)])
    case("ecad_basic.txt", "ecad")

    # Q_RR = 9 flags and Q_RR = 1 (suspect but kept).
    dd = days("1990-05-10", 30)
    rows = []
    for i, d in enumerate(dd):
        v = [0, 20, 0, 0, 15, 9, 0, 0, 0, 40][i % 10]
        q = 9 if i in (7, 8, 20, 21, 22, 23) else (1 if i in (3, 14) else 0)
        rows.append((d, v if q != 9 else -9999, q))
    write_ecad("ecad_quality_flags.txt", 231, rows)
    case("ecad_quality_flags.txt", "ecad")

    # RR = -9999 sentinel with Q_RR left at 0.
    dd = days("1991-06-01", 25)
    rows = [(d, -9999 if i in (5, 12, 13) else [0, 0, 11, 0, 7][i % 5], 0) for i, d in enumerate(dd)]
    write_ecad("ecad_sentinel.txt", 232, rows)
    case("ecad_sentinel.txt", "ecad")

    # Interpolation across gaps of 1, 2 and 3 days, including a gap whose
    # interpolated amounts fall below the threshold between two wet days.
    vals = [0, 10, None, 0, 0, 30, None, None, 0, 0, 8, None, None, None, 20, 0, 0, 0, 12, None, 0, 0]
    dd = days("1992-09-01", len(vals))
    write_ecad("ecad_interpolation.txt", 233, [(d, -9999 if v is None else v, 9 if v is None else 0) for d, v in zip(dd, vals)])
    case("ecad_interpolation.txt", "ecad")

    # A gap of exactly four days splits the series.
    vals = [0, 10, 0, 0, 9, 0, None, None, None, None, 0, 0, 15, 16, 0, 0, 3, 9]
    dd = days("1993-11-20", len(vals))
    write_ecad("ecad_long_gap.txt", 234, [(d, -9999 if v is None else v, 9 if v is None else 0) for d, v in zip(dd, vals)])
    case("ecad_long_gap.txt", "ecad")

    # Calendar days simply absent from the file.
    dd = days("1994-02-20", 30)
    keep = [d for i, d in enumerate(dd) if i not in (4, 10, 11, 12, 13, 14)]
    write_ecad("ecad_absent_dates.txt", 235, [(d, rng.choice([0, 0, 3, 8, 25]), 0) for d in keep])
    case("ecad_absent_dates.txt", "ecad")

    # Starts before the 1945 cutoff.
    dd = days("1944-12-15", 40)
    write_ecad("ecad_pre1945.txt", 236, [(d, rng.choice([0, 0, 0, 7, 40]), 0) for d in dd])
    case("ecad_pre1945.txt", "ecad")

    # Spells spanning the year and season boundaries (winter).
    vals = [0, 9, 9, 0, 0, 0, 0, 0, 0, 11, 0, 14, 14, 14, 14, 0, 0]
    dd = days("1995-12-25", len(vals))
    write_ecad("ecad_year_boundary.txt", 237, [(d, v, 0) for d, v in zip(dd, vals)])
    case("ecad_year_boundary.txt", "ecad")

    # Generic CSV: plain, with header.
    vals = ["0.0", "1.2", "0.6", "0.61", "0.0", "5.5", "5.5", "0.0", "0.0", "0.2", "7.0", "0.0"]
    dd = days("1995-03-02", len(vals))
    write_generic("generic_basic.csv", "P001", [(d, v) for d, v in zip(dd, vals)])
    case("generic_basic.csv", "generic_csv")

    # Generic CSV without header, NA at both ends and in the middle.
    vals = [None, None, "3.0", "0.0", None, "0.0", "2.0", "0.1", None, None, "4.0", "0.0", "9.9", None]
    dd = days("1996-07-28", len(vals))
    write_generic("generic_boundary_na.csv", "P002", [(d, v) for d, v in zip(dd, vals)], header=False)
    case("generic_boundary_na.csv", "generic_csv")

    # Season boundary at the end of February in a leap year.
    vals = ["0.0", "2.0", "0.0", "0.0", "0.0", "0.0", "3.0", "3.0", "0.0", "8.0", "0.0"]
    dd = days("2000-02-25", len(vals))
    write_generic("generic_leap_season.csv", "P003", [(d, v) for d, v in zip(dd, vals)])
    case("generic_leap_season.csv", "generic_csv")

    # Non-default threshold of zero.
    vals = ["0.0", "0.1", "0.0", "0.0", "0.05", "0.2", "0.0", "0.0"]
    dd = days("2001-10-01", len(vals))
    write_generic("generic_threshold_zero.csv", "P004", [(d, v) for d, v in zip(dd, vals)])
    case("generic_threshold_zero.csv", "generic_csv", threshold=0.0)

    # Long synthetic records for the minimum-length rule: 30 full years with
    # occasional short and long gaps (plus slack for the removed days), and
    # one year short of that.
    def synthetic(sid, start, n_years, name, extra_days=0):
        first = dt.date.fromisoformat(start)
        last = dt.date(first.year + n_years, first.month, first.day) + dt.timedelta(days=extra_days)
        rows = []
        wet = False
        d = first
        while d < last:
            wet = rng.random() < (0.6 if wet else 0.3)
            v = "%.1f" % (rng.expovariate(0.2) + 0.6) if wet else ("0.0" if rng.random() < 0.8 else "0.3")
            rows.append([d, v])
            d += dt.timedelta(days=1)
        for _ in range(6):
            i = rng.randrange(10, len(rows) - 10)
            for k in range(rng.choice([1, 2, 3, 5, 9])):
                rows[i + k][1] = None
        write_generic(name, sid, rows)

    synthetic("P100", "1961-01-01", 30, "generic_30_years.csv", extra_days=60)
    case("generic_30_years.csv", "generic_csv", min_years=30)
    synthetic("P101", "1961-01-01", 29, "generic_29_years.csv")
    case("generic_29_years.csv", "generic_csv", min_years=30)

    with open(os.path.join(HERE, "cases.json"), "w") as f:
        json.dump(cases, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
