"""Closed-form inter-pulse correlation combs and homodyne noise spectra.

A correlation comb is kept as a parametric object: the matched-bin
correlator of two output quadratures is

    scale * [vac * delta_nn' delta(t - t') + s c exp(-gamma T_R |n - n'|) delta(t - t' - (n - n') T_R)]

with ``scale = 1/4`` for auto-correlations and ``scale = 1`` for the
symmetrised pump/signal cross-correlation sum. Delta functions are never
sampled; consumers work with the (c, gamma, s) triple.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from dataclasses import field as dc_field
from typing import Optional, Sequence

import numpy as np

from .core import (
    BelowThresholdError,
    LOProfile,
    OscillatorParams,
    PumpProfile,
)

__all__ = [
    "CorrelationComb",
    "SpectrumSeries",
    "quadrature_comb",
    "cross_comb",
    "comb_to_spectrum",
    "default_m_max",
    "spectrum_above",
    "spectrum_below",
    "spectrum_general",
    "spectrum_series",
    "resonance_value",
    "fig4_scan",
    "lo_mean_current",
]

FIELDS = ("pump", "signal")
QUADRATURES = ("X", "Y")


@dataclass(frozen=True)
class CorrelationComb:
    has_vacuum_term: bool
    coefficient: float
    sign: int
    decay_rate: float
    fields: tuple = ("signal", "signal")
    quadrature: str = "Y"
    scale: float = 0.25

    def __post_init__(self):
        if self.coefficient < 0 or self.decay_rate < 0:
            raise ValueError("comb coefficient and decay rate must be non-negative")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    def delta_weight(self, dn, time_offset, roundtrip_time, atol=None):
        """Weight of the delta function in t - t' for pulse separation ``dn``.

        ``time_offset`` is t - t'. The comb only lives on t - t' = dn T_R,
        so every other offset returns exactly zero.
        """
        dn = np.asarray(dn)
        offset = np.asarray(time_offset, dtype=float)
        if atol is None:
            atol = 1e-9 * roundtrip_time
        on_comb = np.abs(offset - dn * roundtrip_time) <= atol
        comb = self.sign * self.coefficient * np.exp(-self.decay_rate * roundtrip_time * np.abs(dn))
        vac = np.where(dn == 0, float(self.has_vacuum_term), 0.0)
        return np.where(on_comb, self.scale * (vac + comb), 0.0)

    def binned_covariance(self, dn, bin_width, roundtrip_time):
        """Covariance of matched time bins of width ``bin_width`` (delta -> 1/bin_width)."""
        return self.delta_weight(dn, np.asarray(dn) * roundtrip_time, roundtrip_time) / bin_width


@dataclass
class SpectrumSeries:
    """Shot-noise-normalised photocurrent noise on a grid of angular frequencies."""

    omega: np.ndarray
    values: np.ndarray
    field: str = "signal"
    quadrature: str = "Y"
    stderr: Optional[np.ndarray] = None
    metadata: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        self.omega = np.atleast_1d(np.asarray(self.omega, dtype=float))
        self.values = np.atleast_1d(np.asarray(self.values, dtype=float))
        if self.stderr is not None:
            self.stderr = np.atleast_1d(np.asarray(self.stderr, dtype=float))
            if self.stderr.shape != self.values.shape:
                raise ValueError("stderr must match values")
        if self.omega.shape != self.values.shape:
            raise ValueError("omega and values must have the same shape")


def _check_field_quad(field_, quad):
    if field_ not in FIELDS:
        raise ValueError(f"field must be one of {FIELDS}, got {field_!r}")
    if quad not in QUADRATURES:
        raise ValueError(f"quadrature must be one of {QUADRATURES}, got {quad!r}")


def _check_mu(mu0, quad):
    # Y combs stay finite at threshold; X combs diverge there.
    if quad == "X" and not mu0 > 1:
        raise BelowThresholdError(f"X-quadrature correlations need mu0 > 1, got {mu0:g}")
    if quad == "Y" and not mu0 >= 1:
        raise BelowThresholdError(f"Y-quadrature correlations need mu0 >= 1, got {mu0:g}")


def quadrature_comb(field_: str, quad: str, params: OscillatorParams, mu0: float) -> CorrelationComb:
    """Inter-pulse correlation comb of one output quadrature above threshold."""
    _check_field_quad(field_, quad)
    _check_mu(mu0, quad)
    kt = params.loss_rate_signal * params.roundtrip_time
    ks = params.loss_rate_signal
    if field_ == "pump" and quad == "X":
        c, s, gamma = 2.0 * kt, 1, 2.0 * ks * (mu0 - 1.0)
    elif field_ == "pump":
        c, s, gamma = 2.0 * kt * (mu0 - 1.0) / mu0, -1, 2.0 * ks * mu0
    elif quad == "X":
        c, s, gamma = kt / (mu0 - 1.0), 1, 2.0 * ks * (mu0 - 1.0)
    else:
        c, s, gamma = kt / mu0, -1, 2.0 * ks * mu0
    return CorrelationComb(True, c, s, gamma, (field_, field_), quad, 0.25)


def cross_comb(quad: str, params: OscillatorParams, mu0: float, branch: int = 1) -> CorrelationComb:
    """Symmetrised pump/signal cross-correlation comb, <dQ_p dQ_s> + <dQ_s dQ_p>.

    The X channel is anti-correlated on the +1 branch. The Y channel carries
    the opposite sign: the signal Y variance sits below vacuum, so the
    interference of pump-injected noise with its own reflection flips the
    sign relative to X. Both signs reverse on the -1 branch.
    """
    _check_field_quad("signal", quad)
    _check_mu(mu0, quad)
    if branch not in (1, -1):
        raise ValueError("branch must be +1 or -1")
    kt = params.loss_rate_signal * params.roundtrip_time
    ks = params.loss_rate_signal
    if quad == "X":
        c = kt * math.sqrt(1.0 / (2.0 * (mu0 - 1.0)))
        s, gamma = -branch, 2.0 * ks * (mu0 - 1.0)
    else:
        c = kt * math.sqrt((mu0 - 1.0) / (2.0 * mu0 ** 2))
        s, gamma = branch, 2.0 * ks * mu0
    return CorrelationComb(False, c, s, gamma, ("pump", "signal"), quad, 1.0)


def default_m_max(omega, roundtrip_time) -> int:
    omega_max = float(np.max(np.abs(omega))) if np.size(omega) else 0.0
    return int(math.ceil(omega_max * roundtrip_time / (2.0 * math.pi))) + 10


def _detunings(omega, roundtrip_time, m_max):
    omega = np.asarray(omega, dtype=float)
    if m_max is None:
        m_max = default_m_max(omega, roundtrip_time)
    if m_max < 0:
        raise ValueError("m_max must be >= 0")
    resonances = 2.0 * math.pi * np.arange(m_max + 1) / roundtrip_time
    return omega[..., None] - resonances


def _lorentz_sum(omega, roundtrip_time, m_max, numerator, halfwidth_sq):
    det = _detunings(omega, roundtrip_time, m_max)
    return np.sum(numerator / (halfwidth_sq + det ** 2), axis=-1)


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def comb_to_spectrum(comb: CorrelationComb, omega, params: OscillatorParams, m_max=None):
    """Normalised spectrum implied by a comb (Wiener-Khinchin over the delta train)."""
    tr = params.roundtrip_time
    gamma = comb.decay_rate
    base = 1.0 if comb.has_vacuum_term else 0.0
    total = _lorentz_sum(omega, tr, m_max, 2.0 * gamma * comb.coefficient / tr, gamma ** 2)
    return _scalar(base + comb.sign * total)


def spectrum_above(field_: str, quad: str, omega, mu0: float, params: OscillatorParams, m_max=None):
    """Photocurrent noise of a bright pulse train above threshold, shot noise = 1.

    Y-quadrature spectra are the squeezing formulas; X-quadrature spectra
    follow from the X combs by the same Fourier transform and sit above 1.
    """
    _check_field_quad(field_, quad)
    _check_mu(mu0, quad)
    ks2 = params.loss_rate_signal ** 2
    tr = params.roundtrip_time
    if quad == "Y":
        numerator = 8.0 * ks2 * (mu0 - 1.0) if field_ == "pump" else 4.0 * ks2
        return _scalar(1.0 - _lorentz_sum(omega, tr, m_max, numerator, 4.0 * ks2 * mu0 ** 2))
    numerator = 8.0 * ks2 * (mu0 - 1.0) if field_ == "pump" else 4.0 * ks2
    return _scalar(1.0 + _lorentz_sum(omega, tr, m_max, numerator, 4.0 * ks2 * (mu0 - 1.0) ** 2))


def spectrum_below(omega, mu: float, params: OscillatorParams, m_max=None):
    """Squeezed-quadrature signal spectrum below threshold at pump parameter ``mu``."""
    if mu < 0:
        raise ValueError("pump parameter must be non-negative")
    ks2 = params.loss_rate_signal ** 2
    return _scalar(
        1.0 - _lorentz_sum(omega, params.roundtrip_time, m_max, 4.0 * ks2 * mu, ks2 * (1.0 + mu) ** 2)
    )


def resonance_value(field_: str, quad: str, mu0: float, params: OscillatorParams):
    """Spectrum at a cavity resonance keeping only that resonance's Lorentzian."""
    return spectrum_above(field_, quad, 0.0, mu0, params, m_max=0)


def _local_spectrum(field_, quad, omega, mu_t, params, m_max):
    """S(t, omega) for a vector of local pump parameters, shape (len(mu_t), len(omega))."""
    ks2 = params.loss_rate_signal ** 2
    tr = params.roundtrip_time
    out = np.ones((mu_t.size, omega.size))
    above = mu_t > 1.0
    if quad == "X":
        if not np.all(above):
            raise BelowThresholdError(
                "X-quadrature spectrum is only modelled where mu(t) > 1; the LO samples a below-threshold region"
            )
        mu = mu_t[:, None, None]
        numerator = 8.0 * ks2 * (mu - 1.0) if field_ == "pump" else 4.0 * ks2
        out[:] = 1.0 + _lorentz_sum(omega, tr, m_max, numerator, 4.0 * ks2 * (mu - 1.0) ** 2)
        return out
    if np.any(above):
        mu = mu_t[above][:, None, None]
        numerator = 8.0 * ks2 * (mu - 1.0) if field_ == "pump" else 4.0 * ks2
        out[above] = 1.0 - _lorentz_sum(omega, tr, m_max, numerator, 4.0 * ks2 * mu ** 2)
    below = ~above
    if field_ == "signal" and np.any(below):
        mu = mu_t[below][:, None, None]
        out[below] = 1.0 - _lorentz_sum(omega, tr, m_max, 4.0 * ks2 * mu, ks2 * (1.0 + mu) ** 2)
    # a below-threshold pump carries no depletion noise: it stays at shot noise
    return out


def spectrum_general(
    field_: str,
    omega,
    pump: PumpProfile,
    lo: LOProfile,
    params: OscillatorParams,
    m_max=None,
    rtol: float = 1e-6,
    max_points: int = 2 ** 16 + 1,
):
    """Spectrum for arbitrary pump and LO shapes, normalised to shot noise.

    Averages the local spectrum S(t, omega) over the LO intensity,
    (1/W) int N_LO(t - delay) S(t, omega) dt with W = int N_LO dt. Local
    spectra use the above-threshold formulas where mu(t) > 1 and the
    below-threshold formula elsewhere. The trapezoid grid over the LO
    support is doubled until the result changes by less than ``rtol``.
    """
    _check_field_quad(field_, lo.quadrature)
    quad = lo.quadrature
    omega_arr = np.atleast_1d(np.asarray(omega, dtype=float))
    if m_max is None:
        m_max = default_m_max(omega_arr, params.roundtrip_time)

    if lo.shape == "delta":
        if lo.peak_flux <= 0:
            raise ValueError("LO carries no photons")
        mu_t = np.atleast_1d(pump.mu(lo.delay))
        res = _local_spectrum(field_, quad, omega_arr, mu_t, params, m_max)[0]
        return _scalar(res if np.ndim(omega) else res[0])

    lo_start, lo_stop = lo.support()
    if lo.photons_per_pulse() <= 0 or lo_stop <= lo_start:
        raise ValueError("LO has zero measure")

    def integrate(n):
        t = np.linspace(lo_start, lo_stop, n)
        weight = lo.intensity(t)
        s = _local_spectrum(field_, quad, omega_arr, pump.mu(t), params, m_max)
        w_total = np.trapezoid(weight, t)
        if w_total <= 0:
            raise ValueError("LO has zero measure on the integration grid")
        return np.trapezoid(weight[:, None] * s, t, axis=0) / w_total

    n = 129
    prev = integrate(n)
    while True:
        n = 2 * n - 1
        cur = integrate(n)
        if np.all(np.abs(cur - prev) <= rtol * np.abs(cur)) or n >= max_points:
            break
        prev = cur
    return _scalar(cur if np.ndim(omega) else cur[0])


def spectrum_series(field_, quad, omega, mu0, params, m_max=None) -> SpectrumSeries:
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    if m_max is None:
        m_max = default_m_max(omega, params.roundtrip_time)
    values = np.atleast_1d(spectrum_above(field_, quad, omega, mu0, params, m_max))
    return SpectrumSeries(omega, values, field_, quad, metadata={"mu0": mu0, "m_max": m_max})


def fig4_scan(
    params: OscillatorParams,
    mu0_values: Sequence[float],
    delays,
    lo_width: float,
    pump_duration: float,
    omega: float = 0.0,
    m_max=None,
):
    """Signal Y noise versus LO delay for gaussian pump pulses.

    Returns an array with columns (mu0, delay, noise). ``lo_width`` is the
    duration of a gaussian LO; zero gives the ideal infinitely short LO.
    """
    delays = np.asarray(delays, dtype=float)
    rows = []
    for mu0 in mu0_values:
        pump = PumpProfile.gaussian(mu0, pump_duration)
        for delay in delays:
            if lo_width > 0:
                lo = LOProfile("gaussian", 1.0, lo_width, delay, 0.5 * math.pi, "signal")
            else:
                lo = LOProfile("delta", 1.0, 0.0, delay, 0.5 * math.pi, "signal")
            rows.append((mu0, delay, spectrum_general("signal", omega, pump, lo, params, m_max)))
    return np.array(rows, dtype=float).reshape(-1, 3)


def lo_mean_current(lo: LOProfile, roundtrip_time: float) -> float:
    """Mean LO photon flux <I> over one period, the shot-noise reference."""
    if roundtrip_time <= 0:
        raise ValueError("round-trip time must be positive")
    if lo.shape != "delta" and lo.duration > roundtrip_time:
        raise ValueError("LO pulse longer than the round-trip time")
    return lo.photons_per_pulse() / roundtrip_time
