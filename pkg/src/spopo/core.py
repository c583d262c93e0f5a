"""Oscillator parameters, pump profiles and the semiclassical steady state.

Everything here works in photon-flux units (photons per second). SI powers
enter only through :func:`watts_to_flux`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import constants

__all__ = [
    "AdiabaticityWarning",
    "OscillatorParams",
    "PumpProfile",
    "LOProfile",
    "SteadyState",
    "EffectiveRates",
    "BelowThresholdError",
    "threshold_flux",
    "pump_parameter",
    "steady_state",
    "effective_rates",
    "watts_to_flux",
    "validity_margin",
]

# high-finesse limits on kappa * T_R
SIGNAL_FINESSE_LIMIT = 0.1
PUMP_FINESSE_LIMIT = 0.5


class BelowThresholdError(ValueError):
    """Raised when an above-threshold quantity is requested for mu0 < 1."""


class AdiabaticityWarning(UserWarning):
    """The pump is not much faster than the signal fluctuation rates."""


@dataclass(frozen=True)
class OscillatorParams:
    """Cavity and coupling constants of the oscillator.

    Parameters
    ----------
    roundtrip_time : float
        Cavity round-trip time T_R in seconds (equal to the pump period).
    loss_rate_signal, loss_rate_pump : float
        Amplitude loss rates kappa_s, kappa_p in 1/s.
    coupling : float
        Parametric coupling g in s^-1/2, so that N_th = kappa_s^2 / (4 g^2).

    Only the signal cavity must be high finesse at construction
    (kappa_s T_R < 0.1). The pump bound kappa_p T_R < 0.5 is checked by
    :meth:`check_pump_finesse`, which the full (pump-resolving) simulation
    calls; after adiabatic elimination only the ratio kappa_x / kappa_p enters.
    """

    roundtrip_time: float
    loss_rate_signal: float
    loss_rate_pump: float
    coupling: float

    def __post_init__(self):
        for name in ("roundtrip_time", "loss_rate_signal", "loss_rate_pump", "coupling"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")
        if self.loss_rate_signal * self.roundtrip_time >= SIGNAL_FINESSE_LIMIT:
            raise ValueError(
                f"kappa_s*T_R = {self.loss_rate_signal * self.roundtrip_time:g} "
                f"violates the high-finesse bound < {SIGNAL_FINESSE_LIMIT}"
            )

    @classmethod
    def from_threshold(cls, roundtrip_time, loss_rate_signal, loss_rate_pump, threshold):
        """Build parameters whose threshold flux equals ``threshold`` (photons/s)."""
        coupling = loss_rate_signal / (2.0 * math.sqrt(threshold))
        return cls(roundtrip_time, loss_rate_signal, loss_rate_pump, coupling)

    @property
    def transmission_signal(self) -> float:
        return 2.0 * self.loss_rate_signal * self.roundtrip_time

    @property
    def transmission_pump(self) -> float:
        return 2.0 * self.loss_rate_pump * self.roundtrip_time

    @property
    def threshold(self) -> float:
        return threshold_flux(self)

    def check_pump_finesse(self):
        kpt = self.loss_rate_pump * self.roundtrip_time
        if kpt >= PUMP_FINESSE_LIMIT:
            raise ValueError(
                f"kappa_p*T_R = {kpt:g} violates the pump high-finesse bound < {PUMP_FINESSE_LIMIT}"
            )


def threshold_flux(params: OscillatorParams) -> float:
    """Continuous-wave threshold flux N_th = kappa_s^2 / (4 g^2)."""
    return params.loss_rate_signal ** 2 / (4.0 * params.coupling ** 2)


def watts_to_flux(power, wavelength):
    """Convert optical power (W) at ``wavelength`` (m) to photon flux (1/s)."""
    power = np.asarray(power, dtype=float)
    wavelength = np.asarray(wavelength, dtype=float)
    if np.any(power < 0) or np.any(wavelength <= 0):
        raise ValueError("power must be >= 0 and wavelength > 0")
    flux = power * wavelength / (constants.h * constants.c)
    return float(flux) if flux.ndim == 0 else flux


@dataclass(frozen=True)
class PumpProfile:
    """Pump pulse shape expressed through the pump parameter mu(t).

    ``shape`` is one of ``"rectangular"``, ``"gaussian"`` or ``"sampled"``.
    For the analytic shapes ``peak`` is mu0 and ``duration`` is tau_p; a
    gaussian pulse is mu(t) = mu0 exp(-2 (t/tau_p)^2). A sampled profile
    interpolates ``samples`` (mu values) linearly on ``times``.

    ``phase`` optionally gives the phase modulation phi_in(t) in radians.
    Time is measured from the pulse centre and lives in [-T_R/2, T_R/2].
    """

    shape: str
    peak: float = 0.0
    duration: float = 0.0
    times: Optional[np.ndarray] = field(default=None, compare=False)
    samples: Optional[np.ndarray] = field(default=None, compare=False)
    phase: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)

    def __post_init__(self):
        if self.shape in ("rectangular", "gaussian"):
            if self.peak < 0:
                raise ValueError("pump parameter must be non-negative")
            if not self.duration > 0:
                raise ValueError("pulse duration must be positive")
        elif self.shape == "sampled":
            if self.times is None or self.samples is None:
                raise ValueError("sampled profile needs times and samples")
            times = np.asarray(self.times, dtype=float)
            samples = np.asarray(self.samples, dtype=float)
            if times.shape != samples.shape or times.ndim != 1 or times.size < 2:
                raise ValueError("times and samples must be 1-d arrays of equal length >= 2")
            if np.any(np.diff(times) <= 0):
                raise ValueError("sample times must be strictly increasing")
            if np.any(samples < 0):
                raise ValueError("pump parameter must be non-negative")
            object.__setattr__(self, "times", times)
            object.__setattr__(self, "samples", samples)
        else:
            raise ValueError(f"unknown pump shape {self.shape!r}")

    @classmethod
    def rectangular(cls, mu0, duration, phase=None):
        return cls("rectangular", peak=float(mu0), duration=float(duration), phase=phase)

    @classmethod
    def gaussian(cls, mu0, duration, phase=None):
        return cls("gaussian", peak=float(mu0), duration=float(duration), phase=phase)

    @classmethod
    def sampled(cls, times, mu, phase=None):
        return cls("sampled", times=times, samples=mu, phase=phase)

    @classmethod
    def from_flux(cls, times, flux, params: OscillatorParams, phase=None):
        """Sampled profile from the intracavity pump flux N0(t): mu = sqrt(N0/N_th)."""
        flux = np.asarray(flux, dtype=float)
        if np.any(flux < 0):
            raise ValueError("pump flux must be non-negative")
        return cls.sampled(times, np.sqrt(flux / threshold_flux(params)), phase=phase)

    @property
    def peak_value(self) -> float:
        if self.shape == "sampled":
            return float(self.samples.max())
        return self.peak

    def mu(self, t):
        """Pump parameter at fast time ``t`` (no range checking)."""
        t = np.asarray(t, dtype=float)
        if self.shape == "rectangular":
            return np.where(np.abs(t) <= 0.5 * self.duration, self.peak, 0.0)
        if self.shape == "gaussian":
            return self.peak * np.exp(-2.0 * (t / self.duration) ** 2)
        return np.interp(t, self.times, self.samples, left=0.0, right=0.0)

    def phase_at(self, t):
        t = np.asarray(t, dtype=float)
        if self.phase is None:
            return np.zeros_like(t)
        return np.asarray(self.phase(t), dtype=float)


def pump_parameter(profile: PumpProfile, params: OscillatorParams, t):
    """Pump parameter mu(t) on the fast-time window [-T_R/2, T_R/2]."""
    half = 0.5 * params.roundtrip_time
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t) > half * (1 + 1e-12)):
        raise ValueError(f"t outside the round-trip window [-{half:g}, {half:g}] s")
    if profile.shape != "sampled" and profile.duration > params.roundtrip_time:
        raise ValueError("pulse duration exceeds the round-trip time")
    mu = profile.mu(t)
    return float(mu) if mu.ndim == 0 else mu


@dataclass(frozen=True)
class SteadyState:
    pump_flux: float
    signal_flux: float
    branch: int = 1
    phase_modulation: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)

    def pump_phase(self, t):
        t = np.asarray(t, dtype=float)
        return np.zeros_like(t) if self.phase_modulation is None else np.asarray(self.phase_modulation(t))

    def signal_phase(self, t):
        offset = 0.0 if self.branch == 1 else math.pi
        return 0.5 * self.pump_phase(t) + offset

    def pump_amplitude(self, t):
        return math.sqrt(self.pump_flux) * np.exp(1j * self.pump_phase(t))

    def signal_amplitude(self, t):
        return self.branch * math.sqrt(self.signal_flux) * np.exp(0.5j * self.pump_phase(t))


def steady_state(params: OscillatorParams, mu0: float, branch: int = 1, phase=None) -> SteadyState:
    """Bright stationary solution above threshold.

    The intracavity pump is clamped at N_th whatever mu0; the signal flux
    grows linearly, N_s = (2 kappa_p / kappa_s)(mu0 - 1) N_th.
    """
    if branch not in (1, -1):
        raise ValueError("branch must be +1 or -1")
    if mu0 < 1:
        raise BelowThresholdError(
            f"mu0 = {mu0:g} < 1: no bright steady state, use the below-threshold spectrum"
        )
    nth = threshold_flux(params)
    ns = 2.0 * params.loss_rate_pump / params.loss_rate_signal * (mu0 - 1.0) * nth
    return SteadyState(pump_flux=nth, signal_flux=ns, branch=branch, phase_modulation=phase)


@dataclass(frozen=True)
class EffectiveRates:
    kappa_x: float
    kappa_y: float
    adiabatic_warning: bool = False


def effective_rates(params: OscillatorParams, mu0: float, warn: bool = True) -> EffectiveRates:
    """Damping rates of the X and Y signal fluctuations after eliminating the pump.

    The flag is raised once mu0 reaches a tenth of kappa_p/kappa_s, where the
    adiabatic condition mu0 << kappa_p/kappa_s stops being comfortable.
    """
    if mu0 < 1:
        raise BelowThresholdError(f"effective rates need mu0 >= 1, got {mu0:g}")
    ks = params.loss_rate_signal
    flag = mu0 >= 0.1 * params.loss_rate_pump / ks
    if flag and warn:
        warnings.warn(
            f"mu0 = {mu0:g} is not << kappa_p/kappa_s = {params.loss_rate_pump / ks:g}",
            AdiabaticityWarning,
            stacklevel=2,
        )
    return EffectiveRates(2.0 * ks * (mu0 - 1.0), 2.0 * ks * mu0, flag)


def validity_margin(params: OscillatorParams, threshold: float, averaging_time: float) -> float:
    """Lower bound that mu0 - 1 must greatly exceed for the linearisation to hold.

    Compares the X-quadrature variance of the intracavity signal, averaged
    over ``averaging_time``, with the mean signal flux.
    """
    if threshold <= 0 or averaging_time <= 0:
        raise ValueError("threshold flux and averaging time must be positive")
    ratio = params.loss_rate_signal / params.loss_rate_pump
    return math.sqrt(ratio / (threshold * averaging_time))


@dataclass(frozen=True)
class LOProfile:
    """Local-oscillator pulse train used by the balanced homodyne detector.

    ``shape`` is ``"rectangular"``, ``"gaussian"``, ``"sampled"`` or
    ``"delta"``. ``peak_flux`` is N_LO at the pulse centre (photons/s); for a
    delta pulse it is instead the number of photons per pulse. A gaussian
    LO has N_LO(t) = peak_flux exp(-4 (t/duration)^2), the same convention
    as the pump intensity. ``delay`` shifts the envelope relative to the
    analysed pulses, and ``phase`` (0 or pi/2) selects the X or Y quadrature.
    """

    shape: str
    peak_flux: float = 1.0
    duration: float = 0.0
    delay: float = 0.0
    phase: float = 0.5 * math.pi
    target: str = "signal"
    times: Optional[np.ndarray] = field(default=None, compare=False)
    samples: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        if self.target not in ("pump", "signal"):
            raise ValueError(f"LO target must be 'pump' or 'signal', got {self.target!r}")
        if not (math.isclose(self.phase, 0.0, abs_tol=1e-12) or math.isclose(self.phase, 0.5 * math.pi)):
            raise ValueError("LO phase must be 0 (X quadrature) or pi/2 (Y quadrature)")
        if self.peak_flux < 0:
            raise ValueError("LO flux must be non-negative")
        if self.shape in ("rectangular", "gaussian"):
            if not self.duration > 0:
                raise ValueError("LO duration must be positive")
        elif self.shape == "sampled":
            if self.times is None or self.samples is None:
                raise ValueError("sampled LO needs times and samples")
            times = np.asarray(self.times, dtype=float)
            samples = np.asarray(self.samples, dtype=float)
            if times.shape != samples.shape or times.ndim != 1 or times.size < 2:
                raise ValueError("times and samples must be 1-d arrays of equal length >= 2")
            if np.any(np.diff(times) <= 0) or np.any(samples < 0):
                raise ValueError("sampled LO needs increasing times and non-negative flux")
            object.__setattr__(self, "times", times)
            object.__setattr__(self, "samples", samples)
            object.__setattr__(self, "duration", float(times[-1] - times[0]))
        elif self.shape != "delta":
            raise ValueError(f"unknown LO shape {self.shape!r}")

    @property
    def quadrature(self) -> str:
        return "X" if math.isclose(self.phase, 0.0, abs_tol=1e-12) else "Y"

    def with_delay(self, delay) -> "LOProfile":
        return LOProfile(self.shape, self.peak_flux, self.duration, float(delay), self.phase,
                         self.target, self.times, self.samples)

    def scaled(self, factor) -> "LOProfile":
        samples = None if self.samples is None else self.samples * factor
        return LOProfile(self.shape, self.peak_flux * factor, self.duration, self.delay, self.phase,
                         self.target, self.times, samples)

    def intensity(self, t):
        """N_LO(t - delay) in photons/s; zero for the delta shape."""
        u = np.asarray(t, dtype=float) - self.delay
        if self.shape == "rectangular":
            return np.where(np.abs(u) <= 0.5 * self.duration, self.peak_flux, 0.0)
        if self.shape == "gaussian":
            return self.peak_flux * np.exp(-4.0 * (u / self.duration) ** 2)
        if self.shape == "sampled":
            return np.interp(u, self.times, self.samples, left=0.0, right=0.0)
        return np.zeros_like(u)

    def support(self):
        """Interval outside which the envelope is negligible (< 1e-15 of peak)."""
        if self.shape == "rectangular":
            half = 0.5 * self.duration
        elif self.shape == "gaussian":
            half = 3.0 * self.duration
        elif self.shape == "sampled":
            return self.delay + self.times[0], self.delay + self.times[-1]
        else:
            half = 0.0
        return self.delay - half, self.delay + half

    def photons_per_pulse(self) -> float:
        """Integral of N_LO over one pulse."""
        if self.shape == "rectangular":
            return self.peak_flux * self.duration
        if self.shape == "gaussian":
            return self.peak_flux * self.duration * math.sqrt(math.pi) / 2.0
        if self.shape == "sampled":
            return float(np.trapezoid(self.samples, self.times))
        return self.peak_flux

    def carrier_phase(self, t, pump: Optional[PumpProfile] = None):
        """Phase modulation matched to the analysed field, plus the quadrature phase."""
        phi = np.zeros_like(np.asarray(t, dtype=float)) if pump is None else pump.phase_at(t)
        if self.target == "signal":
            phi = 0.5 * phi
        return phi + self.phase
