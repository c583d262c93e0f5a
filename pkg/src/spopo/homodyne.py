"""Virtual balanced homodyne detection of simulated pulse trains.

The difference photocurrent of a bin centred at t_j in pulse n is
2 sqrt(N_LO(t_j - delay)) Q_out[j, n], with Q = X for LO phase 0 and
Q = Y for LO phase pi/2. Its noise spectrum is estimated with a
rectangular-window, segment-averaged periodogram and normalised by the
mean LO current, so vacuum input gives exactly 1 on average.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from .analytic import SpectrumSeries, default_m_max, _local_spectrum
from .core import LOProfile, OscillatorParams, PumpProfile
from .io import write_csv, write_json
from .langevin import PulseTrainRecord

__all__ = [
    "LOProfile",
    "PhotocurrentSeries",
    "ComparisonReport",
    "lo_weights",
    "synthesize_photocurrent",
    "photocurrent_spectrum",
    "predict_for_series",
    "compare_spectra",
    "required_segment_pulses",
    "write_spectrum",
]


@dataclass
class PhotocurrentSeries:
    """Photocurrent fluctuations, shape (trajectories, slices, pulses).

    Sample (k, j, n) belongs to time slice_times[j] + n T_R of run k.
    """

    samples: np.ndarray
    slice_times: np.ndarray
    weights: np.ndarray
    bin_width: float
    roundtrip_time: float
    mean_current: float
    field: str
    quadrature: str
    lo: Optional[LOProfile] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.samples.ndim != 3 or self.samples.shape[1] != self.slice_times.size:
            raise ValueError("samples must be (trajectories, slices, pulses)")
        if not self.mean_current > 0:
            raise ValueError("mean LO current must be positive")

    @property
    def pulses(self) -> int:
        return self.samples.shape[-1]


def lo_weights(lo: LOProfile, slice_times, bin_width: float) -> np.ndarray:
    """LO flux on each recorded bin.

    Extended envelopes are shifted by a whole number of bins; a delta LO
    lands on the bin nearest to its delay.
    """
    slice_times = np.asarray(slice_times, dtype=float)
    if lo.shape == "delta":
        w = np.zeros(slice_times.size)
        gap = np.abs(slice_times - lo.delay)
        j = int(np.argmin(gap)) if gap.size else 0
        if gap.size and gap[j] <= 0.5 * bin_width * (1 + 1e-9):
            w[j] = lo.peak_flux / bin_width
        return w
    shift = round(lo.delay / bin_width) * bin_width
    return lo.with_delay(shift).intensity(slice_times)


def synthesize_photocurrent(record: PulseTrainRecord, lo: LOProfile) -> PhotocurrentSeries:
    """Build difference-photocurrent fluctuations from one field's output record."""
    if lo.target != record.field:
        raise ValueError(f"LO targets the {lo.target} field but the record holds the {record.field} field")
    if lo.shape in ("rectangular", "gaussian", "sampled") and lo.duration > record.roundtrip_time:
        raise ValueError("LO pulse longer than the round-trip time")
    if lo.shape != "delta" and lo.duration < record.bin_width and lo.shape != "sampled":
        raise ValueError("LO pulse is narrower than one record bin; use the delta shape")
    weights = lo_weights(lo, record.slice_times, record.bin_width)
    if lo.peak_flux > 0 and not np.any(weights > 0):
        raise ValueError("LO support lies entirely off the recorded slices")
    quad = lo.quadrature
    q = record.quadrature(quad)
    samples = 2.0 * np.sqrt(weights)[None, :, None] * q
    mean_current = float(np.sum(weights) * record.bin_width / record.roundtrip_time)
    if mean_current <= 0:
        # a dark LO gives an identically zero current; keep the unit normalisation
        mean_current = math.inf
    return PhotocurrentSeries(
        samples, np.asarray(record.slice_times, dtype=float), weights, record.bin_width,
        record.roundtrip_time, mean_current, record.field, quad, lo,
        {"seed": record.seed, "config_hash": record.config_hash},
    )


def required_segment_pulses(params: OscillatorParams, mu0: float) -> int:
    """Shortest segment (in pulses) that resolves the narrowest Lorentzian, 8/(kappa_x T_R)."""
    kx = 2.0 * params.loss_rate_signal * (mu0 - 1.0)
    return int(math.ceil(8.0 / (kx * params.roundtrip_time)))


def photocurrent_spectrum(
    series: PhotocurrentSeries,
    omega,
    segments: int = 4,
    min_segment_pulses: int = 1,
) -> SpectrumSeries:
    """Segment-averaged periodogram of the photocurrent, normalised to shot noise.

    Each run is cut into ``segments`` pieces of equal length; for every
    piece the finite-time version of the spectrum,
    |sum_t di(t) dt e^{i omega t}|^2 / T_segment, is divided by the mean LO
    current. Values are averaged over runs and segments; the standard
    error comes from their scatter.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    if segments < 4:
        raise ValueError("need at least 4 segments")
    seg_len = series.pulses // segments
    if seg_len < max(min_segment_pulses, 1):
        raise ValueError(f"record too short: {seg_len} pulses per segment < {min_segment_pulses}")
    nyquist = math.pi / series.bin_width
    if np.any(np.abs(omega) > nyquist):
        raise ValueError(f"frequency beyond the bin Nyquist limit {nyquist:g} rad/s")

    tr = series.roundtrip_time
    dt = series.bin_width
    k, j, _ = series.samples.shape
    data = series.samples[..., : segments * seg_len].reshape(k, j, segments, seg_len)
    n = np.arange(seg_len)
    # rows: (run, segment); phases separate into pulse index and slice time
    phase_n = np.outer(omega, n * tr)
    cos_n, sin_n = np.cos(phase_n), np.sin(phase_n)
    re_n = data @ cos_n.T
    im_n = data @ sin_n.T
    phase_t = np.outer(series.slice_times, omega)
    cos_t, sin_t = np.cos(phase_t), np.sin(phase_t)
    # (re_n + i im_n) * (cos_t + i sin_t), summed over slices
    re = np.einsum("kjsf,jf->ksf", re_n, cos_t) - np.einsum("kjsf,jf->ksf", im_n, sin_t)
    im = np.einsum("kjsf,jf->ksf", re_n, sin_t) + np.einsum("kjsf,jf->ksf", im_n, cos_t)
    power = (re ** 2 + im ** 2) * dt ** 2 / (seg_len * tr) / series.mean_current
    power = power.reshape(-1, omega.size)
    values = power.mean(axis=0)
    stderr = power.std(axis=0, ddof=1) / math.sqrt(power.shape[0])
    return SpectrumSeries(
        omega, values, series.field, series.quadrature, stderr,
        {"segments": segments, "segment_pulses": seg_len, "averages": power.shape[0], **series.metadata},
    )


def predict_for_series(
    series: PhotocurrentSeries, pump: PumpProfile, params: OscillatorParams, omega, m_max=None
) -> SpectrumSeries:
    """Analytic spectrum averaged with the same LO weights over the same bins."""
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    if m_max is None:
        m_max = default_m_max(omega, params.roundtrip_time)
    mu = np.atleast_1d(pump.mu(series.slice_times))
    local = _local_spectrum(series.field, series.quadrature, omega, mu, params, m_max)
    w = series.weights
    if not np.sum(w) > 0:
        raise ValueError("LO carries no weight on the recorded bins")
    values = (w[:, None] * local).sum(axis=0) / w.sum()
    return SpectrumSeries(omega, values, series.field, series.quadrature, metadata={"m_max": m_max})


@dataclass
class ComparisonReport:
    omega: np.ndarray
    z: np.ndarray
    max_z: float
    z_critical: float
    passed: bool
    worst_omega: float
    failing_omega: np.ndarray

    def to_dict(self) -> dict:
        return {
            "max_z": self.max_z,
            "z_critical": self.z_critical,
            "pass": self.passed,
            "worst_omega_rad_s": self.worst_omega,
            "failing_omega_rad_s": self.failing_omega.tolist(),
        }

    def write(self, stem):
        """Write ``<stem>.csv`` (per-point z-scores) and ``<stem>.json`` (summary)."""
        write_csv(f"{stem}.csv", {"omega_rad_s": self.omega, "z_score": self.z})
        write_json(f"{stem}.json", self.to_dict())


def compare_spectra(measured: SpectrumSeries, predicted: SpectrumSeries, sigma: float = 3.0) -> ComparisonReport:
    """Per-point z-scores of measured against predicted values.

    The family-wise threshold is ``sigma`` with a Bonferroni correction for
    the number of frequency points.
    """
    if measured.omega.shape != predicted.omega.shape or not np.array_equal(measured.omega, predicted.omega):
        raise ValueError("measured and predicted spectra must share the same frequency grid")
    if measured.stderr is None:
        raise ValueError("measured spectrum has no standard errors")
    diff = measured.values - predicted.values
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(diff == 0, 0.0, diff / measured.stderr)
    alpha = 2.0 * stats.norm.sf(sigma)
    z_crit = float(stats.norm.isf(alpha / (2.0 * z.size)))
    absz = np.abs(z)
    worst = int(np.argmax(absz))
    failing = measured.omega[absz > z_crit]
    return ComparisonReport(
        measured.omega, z, float(absz[worst]), z_crit, bool(failing.size == 0),
        float(measured.omega[worst]), failing,
    )


def write_spectrum(series: SpectrumSeries, path):
    stderr = series.stderr if series.stderr is not None else np.zeros_like(series.values)
    return write_csv(path, {"omega_rad_s": series.omega, "value": series.values, "stderr": stderr},
                     header_units={"omega_rad_s": "rad/s", "value": "shot noise", "stderr": "shot noise"})
