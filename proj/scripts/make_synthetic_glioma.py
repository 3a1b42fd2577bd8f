#!/usr/bin/env python3
"""Generate a synthetic stand-in for the malignant-glioma trial table.

The original randomized polymer-vs-placebo glioma dataset (222 patients,
~93% events, follow-up in weeks, covariates age / years since diagnosis /
performance score / race / sex / nitrosourea exposure / histopathology /
grade) is not redistributable here, so the pipeline is exercised on a
synthetic table with the same schema and similar marginals. Fixed seed;
regenerating rewrites the identical file.
"""

import csv
import math
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "tests" / "data" / "glioma_synth.csv"

rng = random.Random(20240615)

rows = []
for i in range(222):
    polymer = i < 110
    age = min(79.0, max(19.0, rng.gauss(48.0, 11.0)))
    dx_years = round(abs(rng.gauss(1.2, 1.6)), 2)
    kps = 1 if rng.random() < (0.55 if polymer else 0.50) else 0
    race = 1 if rng.random() < 0.85 else 0
    sex = 1 if rng.random() < 0.65 else 0
    nitro = 1 if rng.random() < 0.47 else 0
    u = rng.random()
    path = 1 if u < 0.70 else 2 if u < 0.83 else 3 if u < 0.96 else 4
    grade = 1 if rng.random() < 0.55 else 0

    # log-scale survival with a modest polymer benefit and covariate effects
    eta = (3.55 + 0.25 * polymer - 0.012 * (age - 48) + 0.15 * kps +
           0.25 * (path >= 2) - 0.12 * nitro)
    t = math.exp(eta) * (-math.log(rng.random())) ** (1.0 / 1.3)
    c = -math.log(rng.random()) / 0.002  # sparse random censoring, ~7%
    weeks = round(min(t, c), 1)
    if weeks < 0.1:
        weeks = 0.1
    rows.append({
        "id": i + 1,
        "weeks": weeks,
        "status": "dead" if t <= c else "censored",
        "group": "polymer" if polymer else "placebo",
        "age": round(age, 1),
        "dx_years": dx_years,
        "kps": kps,
        "race": race,
        "sex": sex,
        "nitro": nitro,
        "path": path,
        "grade": grade,
    })

with open(OUT, "w", newline="") as f:
    w = csv.DictWriter(f, fieldnames=list(rows[0].keys()))
    w.writeheader()
    w.writerows(rows)

n_events = sum(1 for r in rows if r["status"] == "dead")
print(f"wrote {OUT}: {len(rows)} rows, {n_events} events")
