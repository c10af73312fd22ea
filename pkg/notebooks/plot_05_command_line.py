"""
The command-line workflow
=========================

emulate, fit, sweep and plot, each leaving a JSON manifest next to
its outputs.
"""

import json
import tempfile
from pathlib import Path

from gridsysid.cli import main

work = Path(tempfile.mkdtemp())
scenario = {
    "plant": {"num": [-0.02113, -9.334e-4], "den": [1.0, 2.104, 0.1133]},
    "ts": 0.1, "duration": 800.0, "seed": 1,
    "excitation": {"kind": "prbs", "switch_times": [5.0, 500.0], "prbs_bit_period": 0.5, "amplitude": 6.0},
}
(work / "scenario.json").write_text(json.dumps(scenario))

# Equivalent shell: gridsysid emulate scenario.json --out data.csv
main(["emulate", str(work / "scenario.json"), "--out", str(work / "data.csv")])
print((work / "data.csv").read_text().splitlines()[:3])

# %%
# Sweep orders. Preprocessing options can come from a JSON file or
# from flags, and flags win.
main(["--quiet", "sweep", str(work / "data.csv"), "--median-window", "1", "--no-detrend",
      "--out-dir", str(work / "sweep")])
summary = json.loads((work / "sweep" / "summary.json").read_text())
print("best:", summary["rows"][0]["model_order"], summary["rows"][0]["model_coefficients"])

# %%
# Fit the chosen order, then draw the measured and simulated current
# with the confidence band as an SVG. The plot manifest is written
# next to the SVG.
main(["fit", str(work / "data.csv"), "--order", "2", "1", "--median-window", "1", "--no-detrend",
      "--out-dir", str(work / "fit")])
print(sorted(p.name for p in (work / "fit").iterdir()))
main(["plot", str(work / "fit" / "fit.csv"), "--out", str(work / "fit.svg")])
print(json.loads((work / "fit.svg.manifest.json").read_text())["outputs"])
