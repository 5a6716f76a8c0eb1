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

"""Writes the command-line fixtures next to this script.

heavy_tail.csv alternates dry spells from a hurdle discretised eGPD
(f1 = 0.3, kappa = 1, sigma = 10, xi = 0.3) with wet spells from a
geometric mixture (pi = 0.6, p1 = 0.7, p2 = 0.25), 120 years from 1950.
"""

import datetime as dt
import math
import os
import random

HERE = os.path.dirname(os.path.abspath(__file__))


def egpd_sample(rng, kappa, sigma, xi):
    u = 1.0 - rng.random()
    return sigma / xi * ((1.0 - u ** (1.0 / kappa)) ** (-xi) - 1.0)


def dry_spell(rng):
    if rng.random() < 0.3:
        return 1
    return 1 + max(1, math.ceil(egpd_sample(rng, 1.0, 10.0, 0.3)))


def wet_spell(rng):
    p = 0.7 if rng.random() < 0.6 else 0.25
    n = 1
    while rng.random() >= p:
        n += 1
    return n


def main():
    rng = random.Random(424242)
    start = dt.date(1950, 1, 1)
    end = dt.date(2070, 1, 1)
    n_days = (end - start).days
    states = []
    while len(states) < n_days:
        states += [0] * dry_spell(rng)
        states += [1] * wet_spell(rng)
    with open(os.path.join(HERE, "heavy_tail.csv"), "w") as f:
        f.write("station_id,date,precip_mm\n")
        for i in range(n_days):
            day = start + dt.timedelta(days=i)
            f.write("H001,%s,%s\n" % (day.isoformat(), "4.2" if states[i] else "0.0"))

    with open(os.path.join(HERE, "malformed.csv"), "w") as f:
        f.write("station_id,date,precip_mm\nM001,1990-01-01,0.0\nM001,1990-01-02,oops\n")


if __name__ == "__main__":
    main()
