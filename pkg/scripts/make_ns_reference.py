#!/usr/bin/env python3
"""Generate the pinned high-resolution reference for the count estimator.

One-off calibration run (s = 60, eps = 0.05, 400 trials); the result is
frozen into data/ns_reference.json and every coarser estimate is compared
against it.
"""

import json
import os
import sys
import time

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from nodal_lab.config import DomainConfig, ExperimentConfig, FieldConfig
from nodal_lab.experiments import run_ns


def main():
    cfg = ExperimentConfig()
    cfg.field = FieldConfig(kind="rpw", k=1.0, m=256)
    cfg.domain = DomainConfig(shape="disc", s=60.0)
    cfg.meshes = [0.05]
    cfg.trials = 400
    cfg.seed = 20260810
    cfg.workers = 2
    t0 = time.time()
    rec = run_ns(cfg, with_budget=False)
    row = rec.tables["ns"][0]
    out = {
        "description": "pinned high-resolution count-density reference",
        "field": {"kind": "rpw", "k": 1.0, "m": cfg.field.m},
        "s": cfg.domain.s,
        "eps": cfg.meshes[0],
        "trials": cfg.trials,
        "seed": cfg.seed,
        "mean": row["mean"],
        "stderr": row["stderr"],
        "wall_seconds": time.time() - t0,
    }
    path = os.path.join(os.path.dirname(__file__), "..", "data", "ns_reference.json")
    with open(path, "w") as fh:
        json.dump(out, fh, indent=2)
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
