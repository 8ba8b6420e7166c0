"""
Running an experiment from a config file
========================================

The same thing as ``clustermax run configs/tail_ratio_identity.cfg``.
"""

import json
import tempfile
from pathlib import Path

from clustermax.config import load_config
from clustermax.harness import read_results_csv, run_experiment

here = Path(__file__).resolve().parent.parent
cfg = load_config(here / "configs" / "tail_ratio_identity.cfg")

with tempfile.TemporaryDirectory() as out:
    code, summary = run_experiment(cfg, out=out)
    print("exit code", code)
    for check in summary["checks"]:
        print(check["name"], check["pass"])
    header, table = read_results_csv(Path(out) / "results.csv")
    print(header)
    print(json.loads((Path(out) / "manifest.json").read_text()))
