"""Shot-noise-normalised photocurrent spectra around the cavity resonances.

Shows the fifty-percent floor of the pump, the vanishing signal noise at
threshold, the smooth hand-over to the below-threshold formula, and how
pulse shapes enter through a local-oscillator-weighted average.
"""

import math

import numpy as np

from spopo import (
    LOProfile,
    OscillatorParams,
    PumpProfile,
    resonance_value,
    spectrum_above,
    spectrum_below,
    spectrum_general,
)
from spopo.io import write_csv

params = OscillatorParams(roundtrip_time=1.0, loss_rate_signal=0.01, loss_rate_pump=1.0, coupling=1.0)

mu = np.linspace(1.01, 4.0, 300)
pump_floor = [resonance_value("pump", "Y", m, params) for m in mu]
i = int(np.argmin(pump_floor))
print(f"pump Y on resonance is lowest at mu0 = {mu[i]:.2f}: {pump_floor[i]:.4f}")

for m in (1.5, 1.1, 1.01, 1.001):
    print(f"signal Y on resonance at mu0 = {m}: {resonance_value('signal', 'Y', m, params):.6f}")

# three resonances, both sides of threshold meeting at mu = 1
omega = np.linspace(0.0, 3 * 2 * math.pi, 3001)
write_csv("spectra.csv", {
    "omega_rad_s": omega,
    "signal_Y_mu0_1p5": spectrum_above("signal", "Y", omega, 1.5, params),
    "signal_X_mu0_1p5": spectrum_above("signal", "X", omega, 1.5, params),
    "pump_Y_mu0_2": spectrum_above("pump", "Y", omega, 2.0, params),
    "below_mu_0p5": spectrum_below(omega, 0.5, params),
})
gap = np.abs(spectrum_below(omega, 1.0, params) - spectrum_above("signal", "Y", omega, 1.0, params)).max()
print(f"largest gap between the two formulas at threshold: {gap:.1e}")

# gaussian pump: the LO decides which parts of the pulse are weighed
pump = PumpProfile.gaussian(2.0, 0.1)
for width in (0.005, 0.05, 0.2):
    lo = LOProfile("gaussian", peak_flux=1.0, duration=width)
    print(f"gaussian LO of width {width:5.3f} T_R: S(0) = {spectrum_general('signal', 0.0, pump, lo, params):.4f}")
print("wrote spectra.csv")
