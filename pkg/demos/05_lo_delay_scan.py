"""Noise at zero frequency versus the delay of a short LO pulse.

With a gaussian pump the pulse centre is far above threshold while its
wings are below; an LO that samples a slice of the pulse reads the local
noise. The analytic curves are overlaid with simulated points.
"""

import math
import warnings

import numpy as np

from spopo import (
    LOProfile,
    OscillatorParams,
    PumpProfile,
    SimConfig,
    fig4_scan,
    photocurrent_spectrum,
    simulate,
    synthesize_photocurrent,
)
from spopo.io import write_csv

tau = 0.1
params = OscillatorParams(1.0, 1e-3, 0.1, 1.0)
delays = np.linspace(-1.5 * tau, 1.5 * tau, 301)
table = fig4_scan(params, [0.5, 1.0, 2.0], delays, lo_width=0.0, pump_duration=tau)
write_csv("lo_delay_scan.csv", {"mu0": table[:, 0], "delay_s": table[:, 1], "noise": table[:, 2]})

for mu0 in (0.5, 1.0, 2.0):
    rows = table[table[:, 0] == mu0]
    j = np.argmin(rows[:, 2])
    print(f"mu0 = {mu0}: centre {rows[150, 2]:.4f}, lowest {rows[j, 2]:.4f} at {rows[j, 1] / tau:+.3f} tau")
print(f"threshold crossing of the mu0 = 2 pulse: +-{math.sqrt(math.log(2) / 2):.4f} tau")

# simulated overlay, only where the pulse is above threshold
sim_params = OscillatorParams(1.0, 0.01, 1.0, 1.0)
pump = PumpProfile.gaussian(2.0, tau)
slices = (0.0, 0.02, 0.04, 0.05)
with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    _, sig = simulate(sim_params, pump, SimConfig(pulses=8000, trajectories=300, slice_times=slices,
                                                  bin_width=1e-3, seed=5))
theory = fig4_scan(sim_params, [2.0], slices, 0.0, tau)[:, 2]
for d, ref in zip(slices, theory):
    m = photocurrent_spectrum(synthesize_photocurrent(sig, LOProfile("delta", 1.0, delay=d)), [0.0])
    print(f"delay {d / tau:4.2f} tau: simulated {m.values[0]:.3f} +- {m.stderr[0]:.3f}, analytic {ref:.3f}")
