"""Driving the lab from a JSON configuration, as the command line does.

The same run can be started from a shell with
``spopo validity --config validity_run.json --out runs/validity``.
"""

import json
from pathlib import Path

from spopo import cli

config = {
    "units": {"time": "fs", "power": "W", "wavelength": "um"},
    "oscillator": {"roundtrip_time": 10000.0, "loss_rate_signal": 1e-6, "loss_rate_pump": 1e-5,
                   "threshold": 50.0, "wavelength": 0.4},
    "pump": {"shape": "gaussian", "mu0": 1.1, "duration": 100.0},
    "fig4": {"mu0_values": [0.5, 1.0, 2.0], "delay_min": -150.0, "delay_max": 150.0, "delay_points": 301},
    "validity": {"averaging_time": 10.0},
}
path = Path("validity_run.json")
path.write_text(json.dumps(config, indent=2))

for task in ("validity", "steady-state", "fig4"):
    code = cli.main([task, "--config", str(path), "--out", f"runs/{task}"])
    print(f"{task:13s} exit code {code}")

report = json.loads(Path("runs/validity/validity.json").read_text())
print(f"linearisation margin {report['margin']:.3e}; mu0 - 1 = {report['mu0_minus_1']:.2f} -> {report['verdict']}")
manifest = json.loads(Path("runs/fig4/manifest.json").read_text())
print("fig4 outputs:", sorted(manifest["outputs"]))
