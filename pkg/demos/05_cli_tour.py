"""Running experiments from config files.

Each subcommand reads a JSON config, writes CSV tables, a sorted-key
report.json and a sha256 manifest, and exits with 0 (pass), 1 (a check
failed), 2 (bad config) or 3 (numerical failure).  This script runs the
bundled configs into a temporary directory.
"""

import json
import tempfile
from pathlib import Path

from sublinear_potential.cli import main

configs = Path(__file__).resolve().parents[1] / "configs"
runs = [
    ("solve", "solve_manufactured.json"),
    ("verify", "verify_square.json"),
    ("verify", "verify_fault.json"),
    ("threshold", "threshold_square.json"),
]
with tempfile.TemporaryDirectory() as tmp:
    for cmd, cfg in runs:
        out = Path(tmp) / cfg.removesuffix(".json")
        code = main([cmd, "--config", str(configs / cfg), "--out", str(out)])
        print(f"{cmd:9} {cfg:26} exit {code}: {sorted(p.name for p in out.iterdir())}")
    report = json.loads((Path(tmp) / "solve_manufactured" / "report.json").read_text())
    ref = report["refinement"]
    print("manufactured errors", [f"{e:.2e}" for e in ref["error"]], "status", ref["status"])
    code = main(["verify", "--config", str(configs / "verify_square.json"), "--out", str(Path(tmp) / "again"),
                 "--manifest", str(Path(tmp) / "verify_square" / "manifest.json")])
    print("rerun matches the recorded manifest:", code == 0)
