"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -v`` or as a script
with ``python3 tests/test_acceptance.py``.
"""

import math
import sys
import warnings
from pathlib import Path

import mpmath
import numpy as np
import pytest
from scipy import optimize, stats

sys.path.insert(0, str(Path(__file__).parent))

from oracles import mean_field  # noqa: E402

from spopo import (  # noqa: E402
    FitQualityWarning,
    LOProfile,
    OscillatorParams,
    PumpProfile,
    SimConfig,
    SpectrumSeries,
    bin_covariance,
    compare_spectra,
    cross_comb,
    effective_rates,
    estimate_all_combs,
    fig4_scan,
    photocurrent_spectrum,
    predict_for_series,
    quadrature_comb,
    resonance_value,
    simulate,
    spectrum_above,
    spectrum_below,
    steady_state,
    synthesize_photocurrent,
    threshold_flux,
    validity_margin,
    watts_to_flux,
)

RESULTS = {}


def report(number, ok, detail):
    line = f"ACCEPTANCE {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    RESULTS[number] = line
    print(line)
    assert ok, line


# ------------------------------------------------------------------ 1


def test_criterion_1_exact_formulas():
    mpmath.mp.dps = 40
    oracle = mean_field()
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(100):
        tr = 10 ** rng.uniform(-12, -6)
        ks = 10 ** rng.uniform(-4, -1) / tr
        kp = ks * 10 ** rng.uniform(0.5, 3)
        g = 10 ** rng.uniform(-4, 2)
        mu0 = 1 + 10 ** rng.uniform(-3, 1)
        p = OscillatorParams(tr, ks, kp, g)
        args = [mpmath.mpf(v) for v in (ks, kp, g)]
        nth_ref = oracle["threshold"](*args, 0)
        n0 = (mpmath.mpf(mu0) ** 2) * nth_ref
        ss = steady_state(p, mu0)
        rates = effective_rates(p, mu0, warn=False)
        pairs = [
            (threshold_flux(p), nth_ref),
            (ss.pump_flux, oracle["pump_flux"](*args, n0)),
            (ss.signal_flux, oracle["signal_flux"](*args, n0)),
            (rates.kappa_x, oracle["kappa_x"](*args, n0)),
            (rates.kappa_y, oracle["kappa_y"](*args, n0)),
        ]
        for got, ref in pairs:
            worst = max(worst, abs(got / float(ref) - 1))
    report(1, worst <= 1e-12, f"max relative deviation over 100 random sets = {worst:.2e} (tol 1e-12)")


# ------------------------------------------------------------------ 2


def test_criterion_2_pump_noise_floor():
    p = OscillatorParams(1.0, 0.01, 1.0, 1.0)
    grid = np.linspace(1.01, 4.0, 30001)
    values = np.array([resonance_value("pump", "Y", m, p) for m in grid])
    i = int(np.argmin(values))
    res = optimize.minimize_scalar(lambda m: resonance_value("pump", "Y", m, p),
                                   bounds=(grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]),
                                   method="bounded", options={"xatol": 1e-10})
    ok = abs(res.x - 2.0) <= 0.01 and abs(res.fun - 0.5) <= 1e-6
    report(2, ok, f"minimum at mu0 = {res.x:.6f} with value {res.fun:.9f}")


# ------------------------------------------------------------------ 3


def test_criterion_3_threshold_squeezing():
    p = OscillatorParams(1.0, 0.01, 1.0, 1.0)
    mu0 = mpmath.mpf("1.001")
    ref = float(1 - 1 / mu0 ** 2)
    got = resonance_value("signal", "Y", 1.001, p)
    report(3, abs(got - ref) <= 1e-12, f"value {got:.15e} vs {ref:.15e} (|diff| = {abs(got - ref):.1e})")


# ------------------------------------------------------------------ 4


def test_criterion_4_continuity():
    p = OscillatorParams(1.0, 0.01, 1.0, 1.0)
    omega = np.linspace(0.0, 3 * 2 * math.pi, 10_000)
    diff = np.abs(spectrum_below(omega, 1.0, p) - spectrum_above("signal", "Y", omega, 1.0, p))
    report(4, diff.max() < 1e-12, f"max |below - above| at threshold = {diff.max():.2e} over 1e4 points")


# ------------------------------------------------------------------ 5


def test_criterion_5_monte_carlo_combs():
    p = OscillatorParams(1.0, 0.01, 1.0, 1.0)
    pump = PumpProfile.rectangular(1.5, 0.5)
    cfg = SimConfig(pulses=2000, trajectories=20_000, n_slices=1, bin_width=1e-3, seed=7)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", FitQualityWarning)
        est = estimate_all_combs(p, pump, cfg)
    parts, ok = [], True
    for (f, q), e in est.items():
        ref = cross_comb(q, p, 1.5) if f == "cross" else quadrature_comb(f, q, p, 1.5)
        tol = 0.10 if f == "cross" else 0.05
        dc = e.coefficient / ref.coefficient - 1
        dg = e.decay_rate / ref.decay_rate - 1
        good = e.detected and abs(dc) <= tol and abs(dg) <= tol and e.sign == ref.sign
        ok &= good
        parts.append(f"{f}-{q}: c {dc:+.3f} gamma {dg:+.3f} sign {e.sign:+d}")
    report(5, ok, "; ".join(parts))


# ------------------------------------------------------------------ 6


def _resonance_check(mu0, seed):
    p = OscillatorParams(1.0, 0.01, 1.0, 1.0)
    pump = PumpProfile.rectangular(mu0, 0.5)
    cfg = SimConfig(pulses=8000, trajectories=1000, n_slices=2, bin_width=1e-3, seed=seed)
    records = simulate(p, pump, cfg)
    omega = np.array([0.0, 2 * math.pi])
    out = []
    for rec in records:
        lo = LOProfile("rectangular", 100.0, 0.01, target=rec.field)
        series = synthesize_photocurrent(rec, lo)
        measured = photocurrent_spectrum(series, omega, segments=4)
        predicted = predict_for_series(series, pump, p, omega)
        z = (measured.values - predicted.values) / measured.stderr
        out.append((rec.field, mu0, measured.values, predicted.values, z))
    return out


def test_criterion_6_end_to_end_homodyne():
    rows = _resonance_check(1.5, 31) + [r for r in _resonance_check(2.0, 32) if r[0] == "pump"]
    ok = all(np.all(np.abs(r[4]) < 3.0) for r in rows)
    parts = [f"{f} mu0={m}: {np.round(v, 4).tolist()} vs {np.round(pr, 4).tolist()} z={np.round(z, 2).tolist()}"
             for f, m, v, pr, z in rows]

    p = OscillatorParams(1.0, 0.01, 1.0, 1.0)
    cfg = SimConfig(pulses=4000, trajectories=500, n_slices=2, bin_width=1e-3, seed=33, decoupled=True)
    omega = np.linspace(0.0, 4 * math.pi, 17)
    worst = 0.0
    for rec in simulate(p, PumpProfile.rectangular(1.5, 0.5), cfg):
        for phase in (0.0, 0.5 * math.pi):
            lo = LOProfile("rectangular", 100.0, 0.01, phase=phase, target=rec.field)
            m = photocurrent_spectrum(synthesize_photocurrent(rec, lo), omega)
            cmp = compare_spectra(m, SpectrumSeries(omega, np.ones_like(omega)))
            ok &= cmp.passed
            worst = max(worst, cmp.max_z)
    parts.append(f"vacuum max |z| = {worst:.2f} over 4 x 17 points")
    report(6, ok, "; ".join(parts))


# ------------------------------------------------------------------ 7


def test_criterion_7_fig4_features():
    p = OscillatorParams(1.0, 1e-3, 0.1, 1.0)
    tau = 0.1
    lo_bin = tau / 1000
    delays = np.arange(-1000, 1001) * lo_bin
    rows = fig4_scan(p, [0.5, 2.0], delays, 0.0, tau)
    low, high = rows[rows[:, 0] == 0.5, 2], rows[rows[:, 0] == 2.0, 2]
    centre = delays.size // 2
    t_zero = tau * math.sqrt(math.log(2) / 2)

    max_ok = abs(high[centre] - 0.75) <= 1e-6 and high[centre] > high[centre - 1] and high[centre] > high[centre + 1]
    right = np.argmin(np.abs(high[centre:])) + centre
    left = np.argmin(np.abs(high[: centre + 1]))
    zero_ok = abs(delays[right] - t_zero) <= lo_bin and abs(-delays[left] - t_zero) <= lo_bin
    min_ok = int(np.argmin(low)) == centre and abs(low[centre] - 1 / 9) <= 1e-6
    ok = max_ok and zero_ok and min_ok
    detail = (f"mu0=2 peak {high[centre]:.7f} at 0, zeros at {delays[left] / tau:+.4f} / {delays[right] / tau:+.4f} tau "
              f"(expected +-{t_zero / tau:.4f}); mu0=0.5 minimum {low[centre]:.7f} at 0")

    # simulated overlay on above-threshold bins
    ps = OscillatorParams(1.0, 0.01, 1.0, 1.0)
    pump = PumpProfile.gaussian(2.0, tau)
    sim_delays = (0.0, 0.02, 0.04, 0.05)
    cfg = SimConfig(pulses=8000, trajectories=300, slice_times=sim_delays, bin_width=1e-3, seed=5)
    _, sig = simulate(ps, pump, cfg)
    ref = fig4_scan(ps, [2.0], sim_delays, 0.0, tau)[:, 2]
    zs = []
    for d, r in zip(sim_delays, ref):
        m = photocurrent_spectrum(synthesize_photocurrent(sig, LOProfile("delta", 1.0, delay=d)), [0.0])
        zs.append((m.values[0] - r) / m.stderr[0])
    ok &= bool(np.all(np.abs(zs) < 3))
    report(7, ok, detail + f"; simulated overlay z = {np.round(zs, 2).tolist()}")


# ------------------------------------------------------------------ 8


def test_criterion_8_validity_margin():
    nth = watts_to_flux(50.0, 0.4e-6)
    p = OscillatorParams(1e-9, 1e6, 1e7, 1.0)
    margin = validity_margin(p, nth, 10e-15)
    decade = 10.0 ** math.ceil(math.log10(margin))
    ok = abs(margin / 3.1e-4 - 1) <= 0.05 and decade == 1e-3
    report(8, ok, f"margin = {margin:.4e} (rounds up to the {decade:.0e} decade)")


# ------------------------------------------------------------------ 9


def family_threshold(n_checks, sigma=3.0):
    """Bonferroni-corrected |z| threshold keeping the family-wise rate at 3 sigma."""
    return float(stats.norm.isf(stats.norm.sf(sigma) / n_checks))


def test_criterion_9_property_suites():
    import test_analytic as ta

    failures = []
    for prop in (ta.test_resonance_bounds, ta.test_full_spectrum_bounds, ta.test_below_threshold_bounds,
                 ta.test_resonance_uncertainty_product, ta.test_near_threshold_undershoot_is_bounded_by_the_tail):
        try:
            prop()
        except AssertionError as exc:
            failures.append(f"{prop.__name__}: {exc}")

    p = OscillatorParams(1.0, 0.01, 1.0, 1.0)
    pump = PumpProfile.rectangular(1.5, 0.5)
    comb = quadrature_comb("signal", "Y", p, 1.5)
    if comb.delta_weight(1, 1.0 + 0.25, 1.0) != 0.0:
        failures.append("analytic comb has weight off the delta train")

    cfg = SimConfig(pulses=1000, trajectories=400, n_slices=3, bin_width=1e-3, seed=44, block_size=64)
    records = simulate(p, pump, cfg)
    checks = [(rec, q, shift, lag) for rec in records for q in "XY" for shift in (1, 2) for lag in (0, 1, 10)]
    z_crit = family_threshold(len(checks))
    worst = max(abs(m) / se for m, se in (bin_covariance(r, q, s, l) for r, q, s, l in checks))
    if worst >= z_crit:
        failures.append(f"off-comb covariance |z| = {worst:.2f} >= {z_crit:.2f}")

    threaded = simulate(p, pump, cfg, threads=3)
    other_blocks = simulate(p, pump, SimConfig(**{**cfg.to_dict(), "block_size": 7}))
    for a, b, c in zip(records, threaded, other_blocks):
        if not (np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y) and np.array_equal(a.x, c.x)):
            failures.append(f"{a.field} record depends on scheduling")

    detail = (f"bounds, uncertainty product, locality (max |z| {worst:.2f} < {z_crit:.2f} over "
              f"{len(checks)} checks), slice independence, determinism")
    report(9, not failures, detail if not failures else "; ".join(failures))


if __name__ == "__main__":
    sys.exit(pytest.main(["-v", "-s", __file__]))
