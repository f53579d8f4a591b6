#!/usr/bin/env python3
"""Generate the bundled synthetic report-level dataset.

200 vulnerability descriptions spread over 2010-2019 (20 per year), with
class-correlated marker words per assessment task so linear models and
naive Bayes can genuinely learn each label.  Deterministic under the
fixed seed; regenerating overwrites tests/data/synthetic_reports.jsonl.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

TASK_CLASSES = {
    "Confidentiality": ("None", "Partial", "Complete"),
    "Integrity": ("None", "Partial", "Complete"),
    "Availability": ("None", "Partial", "Complete"),
    "Access Vector": ("Local", "Network"),
    "Access Complexity": ("Low", "Medium", "High"),
    "Authentication": ("None", "Single"),
    "Severity": ("Low", "Medium", "High"),
}

# short marker words keep the char-gram feature space (and so the SGD
# cost per record) small while staying fully class-informative
MARKERS = {
    ("Confidentiality", "None"): "kept veiled",
    ("Confidentiality", "Partial"): "leaks peek",
    ("Confidentiality", "Complete"): "dumps wholly",
    ("Integrity", "None"): "intact pure",
    ("Integrity", "Partial"): "tamper nudge",
    ("Integrity", "Complete"): "wrecks spoil",
    ("Availability", "None"): "steady calm",
    ("Availability", "Partial"): "laggy slow",
    ("Availability", "Complete"): "crash halt",
    ("Access Vector", "Local"): "local bench",
    ("Access Vector", "Network"): "remote wire",
    ("Access Complexity", "Low"): "easy plain",
    ("Access Complexity", "Medium"): "fiddly mixed",
    ("Access Complexity", "High"): "tricky race",
    ("Authentication", "None"): "anon gate",
    ("Authentication", "Single"): "login badge",
    ("Severity", "Low"): "minor mild",
    ("Severity", "Medium"): "middling fair",
    ("Severity", "High"): "grave dire",
}

FILLER = "flaw parser buffer field index copy loop value input check".split()


def make_record(rng: np.random.Generator, year: int, serial: int) -> dict:
    labels = {
        task: classes[int(rng.integers(len(classes)))]
        for task, classes in TASK_CLASSES.items()
    }
    noise = rng.choice(FILLER, size=2)
    parts = [f"A {noise[0]} {noise[1]} bug"]
    for task in TASK_CLASSES:
        parts.append(MARKERS[(task, labels[task])])
    description = " ".join(parts)
    month = 1 + serial % 12
    day = 1 + int(rng.integers(28))
    return {
        "id": f"SV-{year}-{serial:04d}",
        "description": description,
        "date": f"{year:04d}-{month:02d}-{day:02d}",
        "labels": labels,
    }


def generate(seed: int = 0, per_year: int = 20, years=range(2010, 2020)) -> list[dict]:
    rng = np.random.default_rng(seed)
    records = []
    for year in years:
        for serial in range(per_year):
            records.append(make_record(rng, year, serial))
    return records


def main() -> int:
    out = Path(__file__).resolve().parent.parent / "tests" / "data" / "synthetic_reports.jsonl"
    records = generate()
    out.write_text(
        "".join(json.dumps(r) + "\n" for r in records), encoding="utf-8"
    )
    print(f"wrote {len(records)} records to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
