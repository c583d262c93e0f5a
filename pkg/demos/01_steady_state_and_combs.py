"""Bright steady state and inter-pulse correlation combs above threshold.

Sets up an oscillator with kappa_s T_R = 0.01 and a pump ten times more
lossy than the signal, then walks through the threshold flux, the
clamped pump, and the comb coefficients of every output quadrature.
"""

import numpy as np

from spopo import (
    OscillatorParams,
    cross_comb,
    effective_rates,
    quadrature_comb,
    steady_state,
    threshold_flux,
    watts_to_flux,
)

# 10 ns round trip, 1 MHz-scale signal decay
params = OscillatorParams.from_threshold(
    roundtrip_time=1e-8, loss_rate_signal=1e6, loss_rate_pump=1e7, threshold=watts_to_flux(50.0, 0.4e-6)
)
print(f"threshold flux   N_th = {threshold_flux(params):.4e} photons/s")

for mu0 in (1.1, 1.5, 2.0, 3.0):
    ss = steady_state(params, mu0)
    r = effective_rates(params, mu0)
    print(f"mu0 = {mu0:3.1f}: N_p/N_th = {ss.pump_flux / params.threshold:.3f}  "
          f"N_s/N_th = {ss.signal_flux / params.threshold:7.3f}  "
          f"kappa_x = {r.kappa_x:.3e}  kappa_y = {r.kappa_y:.3e}")

# The pump flux stays at threshold however hard we pump; the excess goes to the signal.

mu0 = 1.5
print(f"\ncombs at mu0 = {mu0} (coefficient c, sign s, decay rate gamma)")
for field in ("pump", "signal"):
    for quad in "XY":
        c = quadrature_comb(field, quad, params, mu0)
        print(f"  {field:6s} {quad}: c = {c.coefficient:.4e}  s = {c.sign:+d}  gamma = {c.decay_rate:.3e}")
for quad in "XY":
    c = cross_comb(quad, params, mu0)
    print(f"  cross  {quad}: c = {c.coefficient:.4e}  s = {c.sign:+d}  gamma = {c.decay_rate:.3e}")

# A comb only lives on t - t' = n T_R; anywhere else the covariance is exactly zero.
comb = quadrature_comb("signal", "Y", params, mu0)
dn = np.arange(4)
print("\nsignal Y weights on the comb:", comb.delta_weight(dn, dn * params.roundtrip_time, params.roundtrip_time))
print("and half a round trip off it:  ", comb.delta_weight(dn, (dn + 0.5) * params.roundtrip_time, params.roundtrip_time))
