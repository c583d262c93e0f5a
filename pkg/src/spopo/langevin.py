"""Monte Carlo integration of the linearised quadrature Langevin equations.

Every fast-time slice t_j of the pulse evolves in slow time T on its own,
driven by its own vacuum noise. For one slice and one quadrature the
fluctuations obey (upper sign: branch +1, a = sqrt(kappa_p kappa_x))

    dP/dT = -kappa_p P - b a S + F_p
    dS/dT = -sigma S   + b a P + F_s        sigma_X = 0, sigma_Y = 2 kappa_s

or, with the pump adiabatically eliminated, a single Ornstein-Uhlenbeck
process with rate kappa_x (X) or kappa_y (Y). Both are stepped with
Euler-Maruyama using ``substeps`` steps per round trip.

Output samples follow the mirror relation Q_out = sqrt(T_r) Q_cav - Q_in,
where Q_in is built from exactly the deviates that drove the cavity
during that round trip and Q_cav is read half way through the round trip.
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Iterator, Optional

import numpy as np
from scipy import signal

from .analytic import CorrelationComb
from .core import OscillatorParams, PumpProfile, effective_rates

__all__ = [
    "SimConfig",
    "NoiseStream",
    "PulseTrainRecord",
    "SimBlock",
    "CombEstimate",
    "FitQualityWarning",
    "langevin_increment",
    "simulate",
    "simulate_blocks",
    "LagAccumulator",
    "estimate_comb",
    "estimate_cross",
    "estimate_all_combs",
    "estimate_from_accumulator",
    "bin_covariance",
    "save_record",
    "load_record",
]

CHANNELS = ("signal_x", "signal_y", "pump_x", "pump_y")


class FitQualityWarning(UserWarning):
    """The comb fit is poorly constrained (few usable lags or non-monotonic decay)."""


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo settings.

    ``substeps`` Euler steps make up one round trip (even, so the cavity
    can be read at mid round trip). Slices are ``n_slices`` bins of width
    ``bin_width`` centred on ``slice_center`` unless ``slice_times`` is given.
    """

    pulses: int
    trajectories: int
    n_slices: int = 1
    bin_width: float = 1e-13
    mode: str = "adiabatic"
    substeps: int = 2
    warmup: Optional[int] = None
    seed: int = 0
    branch: int = 1
    slice_center: float = 0.0
    slice_times: Optional[tuple] = None
    block_size: int = 256
    decoupled: bool = False
    record_intracavity: bool = False

    def __post_init__(self):
        if self.mode not in ("adiabatic", "full"):
            raise ValueError(f"mode must be 'adiabatic' or 'full', got {self.mode!r}")
        if self.substeps < 2 or self.substeps % 2:
            raise ValueError("substeps must be an even integer >= 2")
        if self.pulses < 1 or self.trajectories < 1 or self.n_slices < 1:
            raise ValueError("pulses, trajectories and n_slices must be positive")
        if not self.bin_width > 0:
            raise ValueError("bin_width must be positive")
        if self.branch not in (1, -1):
            raise ValueError("branch must be +1 or -1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 bits")
        if self.slice_times is not None:
            object.__setattr__(self, "slice_times", tuple(float(t) for t in self.slice_times))
            object.__setattr__(self, "n_slices", len(self.slice_times))

    def times(self) -> np.ndarray:
        if self.slice_times is not None:
            return np.asarray(self.slice_times)
        j = np.arange(self.n_slices) - 0.5 * (self.n_slices - 1)
        return self.slice_center + j * self.bin_width

    def step(self, params: OscillatorParams) -> float:
        return params.roundtrip_time / self.substeps

    def validate(self, params: OscillatorParams, mu_active: np.ndarray) -> int:
        """Check the stability and warm-up contract; return warm-up round trips."""
        dT = self.step(params)
        ks = params.loss_rate_signal
        if self.decoupled:
            fastest, slowest = ks, ks
        else:
            mu_max = float(np.max(mu_active))
            mu_min = float(np.min(mu_active))
            slowest = 2 * ks * (mu_min - 1.0)
            fastest = 2 * ks * mu_max
        if self.mode == "full":
            params.check_pump_finesse()
            fastest = max(fastest, params.loss_rate_pump)
        if fastest * dT > 0.1:
            raise ValueError(
                f"step {dT:g} s too coarse: rate*step = {fastest * dT:g} > 0.1 "
                f"(use more substeps per round trip)"
            )
        needed = int(math.ceil(5.0 / (slowest * params.roundtrip_time)))
        if self.warmup is None:
            return needed
        if self.warmup < needed:
            raise ValueError(f"warmup {self.warmup} round trips < required {needed} (5/kappa_x)")
        return self.warmup

    def to_dict(self) -> dict:
        return asdict(self)


def config_hash(params: OscillatorParams, pump: PumpProfile, config: SimConfig) -> str:
    payload = {
        "params": asdict(params),
        "pump": _pump_descriptor(pump),
        "config": config.to_dict(),
    }
    text = json.dumps(payload, sort_keys=True, default=float)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _pump_descriptor(pump: PumpProfile) -> dict:
    desc = {"shape": pump.shape, "peak": pump.peak, "duration": pump.duration}
    if pump.shape == "sampled":
        desc["times"] = pump.times.tolist()
        desc["samples"] = pump.samples.tolist()
    return desc


class NoiseStream:
    """Counter-based standard normal deviates for each (trajectory, slice).

    Every stream is a Philox generator keyed by the master seed and the
    (trajectory, slice) pair, so draws never depend on execution order.
    Each step yields four deviates in the order of ``CHANNELS``.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)

    def generator(self, trajectory: int, slice_index: int) -> np.random.Generator:
        seq = np.random.SeedSequence(self.seed, spawn_key=(int(trajectory), int(slice_index)))
        return np.random.Generator(np.random.Philox(seq))

    def deviates(self, trajectory: int, slice_index: int, n_steps: int) -> np.ndarray:
        return self.generator(trajectory, slice_index).standard_normal((n_steps, len(CHANNELS)))


def langevin_increment(deviates, rate: float, step: float, bin_width: float):
    """Integrated Langevin force over one Euler step for one quadrature.

    Quadrature forces are delta-correlated with strength rate/2 in both
    times; on a bin of width ``bin_width`` and a step ``step`` the
    increment therefore has variance rate * step / (2 * bin_width).
    """
    return np.sqrt(rate * step / (2.0 * bin_width)) * np.asarray(deviates)


@dataclass
class PulseTrainRecord:
    """Output quadrature samples of one field, shape (trajectories, slices, pulses)."""

    field: str
    x: np.ndarray
    y: np.ndarray
    bin_width: float
    slice_times: np.ndarray
    roundtrip_time: float
    seed: int = 0
    config_hash: str = ""
    skipped_times: np.ndarray = field(default_factory=lambda: np.empty(0))
    intracavity_x: Optional[np.ndarray] = None
    intracavity_y: Optional[np.ndarray] = None

    @property
    def pulses(self) -> int:
        return self.x.shape[-1]

    def quadrature(self, quad: str) -> np.ndarray:
        if quad == "X":
            return self.x
        if quad == "Y":
            return self.y
        raise ValueError(f"quadrature must be 'X' or 'Y', got {quad!r}")


@dataclass
class SimBlock:
    """Output of one block of trajectories for a single slice."""

    slice_index: int
    trajectories: slice
    pump: dict
    signal: dict


def _lfilter_ar1(rho, w):
    # y[n] = state after n steps: y[n] = rho*y[n-1] + w[n-1], y[0] = 0
    return signal.lfilter([0.0, 1.0], [1.0, -rho], w, axis=-1)


def _lfilter_2x2(a, w_p, w_s):
    """Exact Euler recursion x[n] = A x[n-1] + w[n-1] for the (pump, signal) pair."""
    tr = a[0, 0] + a[1, 1]
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    den = [1.0, -tr, det]
    p = signal.lfilter([0.0, 1.0, -a[1, 1]], den, w_p, axis=-1)
    p += signal.lfilter([0.0, 0.0, a[0, 1]], den, w_s, axis=-1)
    s = signal.lfilter([0.0, 0.0, a[1, 0]], den, w_p, axis=-1)
    s += signal.lfilter([0.0, 1.0, -a[0, 0]], den, w_s, axis=-1)
    return p, s


def _run_block(params, config, mu, slice_index, traj_start, traj_stop, warmup, noise):
    L = config.substeps
    M = config.pulses
    rounds = warmup + M
    n_steps = rounds * L
    dT = config.step(params)
    dt = config.bin_width
    tr = params.roundtrip_time
    ks = params.loss_rate_signal
    kp = params.loss_rate_pump
    b = config.branch
    vac_sd = math.sqrt(1.0 / (4.0 * dt))

    xi = np.stack([noise.deviates(k, slice_index, n_steps) for k in range(traj_start, traj_stop)])
    # xi: (B, n_steps, 4) -> per channel (B, n_steps)
    xi = np.moveaxis(xi, -1, 0)

    if config.decoupled:
        kx = ky = 0.0
        coupling_on = 0.0
    else:
        rates = effective_rates(params, mu, warn=False)
        kx, ky = rates.kappa_x, rates.kappa_y
        coupling_on = 1.0

    # reflected input: the same deviates, averaged over the round trip
    def reflected(ch):
        sums = xi[ch].reshape(xi.shape[1], rounds, L).sum(axis=-1) / math.sqrt(L)
        return vac_sd * sums[:, warmup:]

    def midpoint(states):
        # states[:, n] is the state after n steps; round trip r is read after r*L + L/2 steps
        idx = np.arange(warmup, rounds) * L + L // 2
        return states[:, idx]

    out = {"pump": {}, "signal": {}}
    cav = {}
    ts = params.transmission_signal
    for quad, ch_s, ch_p in (("X", 0, 2), ("Y", 1, 3)):
        w_s = langevin_increment(xi[ch_s], ks, dT, dt)
        w_p = langevin_increment(xi[ch_p], kp, dT, dt)
        pad = np.zeros((w_s.shape[0], 1))
        if config.mode == "adiabatic":
            if config.decoupled:
                rate = ks
            else:
                rate = kx if quad == "X" else ky
            # eliminated pump: its noise reaches the signal scaled by sqrt(kappa_x/kappa_p)
            drive = w_s + coupling_on * b * math.sqrt(kx / kp) * w_p
            s_states = _lfilter_ar1(1.0 - rate * dT, np.concatenate([drive, pad], axis=1))
            s_mid = midpoint(s_states)
            p_out = -b * math.sqrt(2.0 * kx * tr) * s_mid + reflected(ch_p)
        else:
            a = coupling_on * math.sqrt(kp * kx)
            sigma = ks if config.decoupled else (0.0 if quad == "X" else 2.0 * ks)
            mat = np.array([[1.0 - kp * dT, -b * a * dT], [b * a * dT, 1.0 - sigma * dT]])
            p_states, s_states = _lfilter_2x2(
                mat, np.concatenate([w_p, pad], axis=1), np.concatenate([w_s, pad], axis=1)
            )
            s_mid = midpoint(s_states)
            p_out = math.sqrt(params.transmission_pump) * midpoint(p_states) - reflected(ch_p)
        s_out = math.sqrt(ts) * s_mid - reflected(ch_s)
        out["pump"][quad] = p_out
        out["signal"][quad] = s_out
        cav[quad] = s_mid
    if config.record_intracavity:
        out["signal"]["cavity_X"] = cav["X"]
        out["signal"]["cavity_Y"] = cav["Y"]
    return SimBlock(slice_index, slice(traj_start, traj_stop), out["pump"], out["signal"])


def _plan(params, pump, config):
    times = config.times()
    half = 0.5 * params.roundtrip_time
    if np.any(np.abs(times) > half):
        raise ValueError("slice times fall outside the round-trip window")
    mu = np.atleast_1d(pump.mu(times))
    active = np.ones(times.size, bool) if config.decoupled else mu > 1.0
    if not np.any(active):
        raise ValueError("no simulated slice is above threshold (mu(t) <= 1 everywhere)")
    if np.any(~active):
        warnings.warn(
            f"{int(np.sum(~active))} slice(s) with mu(t) <= 1 skipped; use the analytic below-threshold spectrum",
            stacklevel=3,
        )
    warmup = config.validate(params, mu[active])
    return times, mu, active, warmup


def simulate_blocks(
    params: OscillatorParams, pump: PumpProfile, config: SimConfig, threads: int = 1
) -> Iterator[SimBlock]:
    """Yield simulated blocks (one slice, a run of trajectories) in a fixed order.

    Blocks are computed by a pool of ``threads`` workers but always yielded
    in (slice, trajectory) order, and their content depends only on the
    seed, so results are identical for any thread count.
    """
    times, mu, active, warmup = _plan(params, pump, config)
    noise = NoiseStream(config.seed)
    jobs = []
    for j in np.flatnonzero(active):
        for start in range(0, config.trajectories, config.block_size):
            stop = min(start + config.block_size, config.trajectories)
            jobs.append((float(mu[j]), int(j), start, stop))

    def work(job):
        m, j, start, stop = job
        return _run_block(params, config, m, j, start, stop, warmup, noise)

    if threads <= 1:
        for job in jobs:
            yield work(job)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        # bounded look-ahead keeps memory flat
        pending = []
        for job in jobs:
            pending.append(pool.submit(work, job))
            if len(pending) > 2 * threads:
                yield pending.pop(0).result()
        for fut in pending:
            yield fut.result()


def simulate(params: OscillatorParams, pump: PumpProfile, config: SimConfig, threads: int = 1):
    """Run the whole ensemble and return (pump_record, signal_record)."""
    times, mu, active, _ = _plan(params, pump, config)
    active_idx = np.flatnonzero(active)
    position = {int(j): i for i, j in enumerate(active_idx)}
    shape = (config.trajectories, active_idx.size, config.pulses)
    arrays = {key: np.empty(shape) for key in ("pX", "pY", "sX", "sY")}
    if config.record_intracavity:
        arrays["cX"] = np.empty(shape)
        arrays["cY"] = np.empty(shape)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for block in simulate_blocks(params, pump, config, threads):
            i = position[block.slice_index]
            arrays["pX"][block.trajectories, i] = block.pump["X"]
            arrays["pY"][block.trajectories, i] = block.pump["Y"]
            arrays["sX"][block.trajectories, i] = block.signal["X"]
            arrays["sY"][block.trajectories, i] = block.signal["Y"]
            if config.record_intracavity:
                arrays["cX"][block.trajectories, i] = block.signal["cavity_X"]
                arrays["cY"][block.trajectories, i] = block.signal["cavity_Y"]
    digest = config_hash(params, pump, config)
    common = dict(
        bin_width=config.bin_width,
        slice_times=times[active],
        roundtrip_time=params.roundtrip_time,
        seed=config.seed,
        config_hash=digest,
        skipped_times=times[~active],
    )
    pump_rec = PulseTrainRecord("pump", arrays["pX"], arrays["pY"], **common)
    sig_rec = PulseTrainRecord(
        "signal", arrays["sX"], arrays["sY"], **common,
        intracavity_x=arrays.get("cX"), intracavity_y=arrays.get("cY"),
    )
    return pump_rec, sig_rec


# ---------------------------------------------------------------- estimation


def _lag_products(a, b, max_lag):
    """Per-row mean of a[n] * b[n + k] for k = 0..max_lag (FFT correlation)."""
    m = a.shape[-1]
    nfft = 1 << int(math.ceil(math.log2(2 * m)))
    fa = np.fft.rfft(a, nfft, axis=-1)
    fb = fa if b is a else np.fft.rfft(b, nfft, axis=-1)
    corr = np.fft.irfft(np.conj(fa) * fb, nfft, axis=-1)[..., : max_lag + 1]
    return corr / (m - np.arange(max_lag + 1))


class LagAccumulator:
    """Collects per-stream matched-bin lag covariances block by block.

    Streams are stored by index, so the final statistics do not depend on
    the order in which blocks arrive.
    """

    def __init__(self, max_lag: int, symmetric_cross: bool = False):
        self.max_lag = int(max_lag)
        self.symmetric_cross = symmetric_cross
        self._rows = {}

    def add(self, key, a, b=None):
        """Add rows of samples; ``key`` orders the rows (e.g. (slice, first trajectory))."""
        a = np.asarray(a, dtype=float)
        a = a.reshape(-1, a.shape[-1])
        if a.shape[-1] <= self.max_lag + 1:
            raise ValueError("record too short for the requested lags")
        if b is None:
            rows = _lag_products(a, a, self.max_lag)
        else:
            b = np.asarray(b, dtype=float).reshape(a.shape)
            rows = _lag_products(a, b, self.max_lag)
            if self.symmetric_cross:
                rows = rows + _lag_products(b, a, self.max_lag)
        self._rows[key] = rows

    def matrix(self) -> np.ndarray:
        if not self._rows:
            raise ValueError("no samples accumulated")
        return np.concatenate([self._rows[k] for k in sorted(self._rows)], axis=0)


@dataclass
class CombEstimate:
    """Comb parameters recovered from simulated output samples."""

    coefficient: float
    coefficient_se: float
    decay_rate: float
    decay_rate_se: float
    sign: int
    vacuum_level: float
    vacuum_level_se: float
    lags: np.ndarray
    covariance: np.ndarray
    covariance_se: np.ndarray
    usable_lags: int
    detected: bool
    quadrature: str = "Y"
    fields: tuple = ("signal", "signal")
    scale: float = 0.25
    roundtrip_time: float = 1.0

    @property
    def relative_se(self) -> float:
        return self.coefficient_se / self.coefficient if self.coefficient > 0 else math.inf

    def as_comb(self) -> CorrelationComb:
        gamma = self.decay_rate if np.isfinite(self.decay_rate) else 0.0
        return CorrelationComb(
            self.scale == 0.25, abs(self.coefficient), self.sign, max(gamma, 0.0),
            self.fields, self.quadrature, self.scale,
        )


def _fit_log_linear(lags, values):
    slope, intercept = np.polyfit(lags, np.log(np.abs(values)), 1)
    return math.exp(intercept), -slope


def _fit_matrix(matrix, bin_width, roundtrip_time, scale, quad, fields, groups=20):
    n_streams = matrix.shape[0]
    if n_streams < 2:
        raise ValueError("need at least two independent streams for standard errors")
    mean = matrix.mean(axis=0)
    se = matrix.std(axis=0, ddof=1) / math.sqrt(n_streams)
    to_comb = bin_width / scale
    lags = np.arange(matrix.shape[1])

    first_sign = np.sign(mean[1]) if mean.size > 1 else 0.0
    usable = []
    for k in lags[1:]:
        if abs(mean[k]) > 3.0 * se[k] and np.sign(mean[k]) == first_sign:
            usable.append(k)
        else:
            break
    usable = np.asarray(usable, dtype=int)

    vac = mean[0] * 4.0 * bin_width
    vac_se = se[0] * 4.0 * bin_width
    sign = int(first_sign) if first_sign != 0 else 1

    if usable.size < 3:
        warnings.warn(
            f"only {usable.size} lag(s) exceed 3 standard errors; comb not resolved",
            FitQualityWarning,
            stacklevel=3,
        )
        c = abs(mean[1]) * to_comb
        return CombEstimate(
            c, se[1] * to_comb, math.nan, math.nan, sign, vac, vac_se, lags, mean, se,
            int(usable.size), False, quad, fields, scale, roundtrip_time,
        )

    amp, rate = _fit_log_linear(usable, mean[usable])
    c = amp * to_comb
    gamma = rate / roundtrip_time

    # delete-one-group jackknife on the fixed lag set
    g = min(groups, n_streams)
    edges = np.linspace(0, n_streams, g + 1).astype(int)
    sums = np.add.reduceat(matrix, edges[:-1], axis=0)
    counts = np.diff(edges)[:, None]
    total = matrix.sum(axis=0)
    cs, gs = [], []
    for i in range(g):
        leave = (total - sums[i]) / (n_streams - counts[i])
        vals = leave[usable]
        if np.any(np.sign(vals) != first_sign):
            continue
        a_i, r_i = _fit_log_linear(usable, vals)
        cs.append(a_i * to_comb)
        gs.append(r_i / roundtrip_time)
    factor = math.sqrt((len(cs) - 1) / len(cs)) if len(cs) > 1 else math.nan
    c_se = factor * math.sqrt(np.sum((np.asarray(cs) - np.mean(cs)) ** 2)) if cs else math.nan
    g_se = factor * math.sqrt(np.sum((np.asarray(gs) - np.mean(gs)) ** 2)) if gs else math.nan

    mags = np.abs(mean[usable])
    if np.any(np.diff(mags) > 3.0 * se[usable][1:]):
        warnings.warn("lag covariance is not monotonically decaying", FitQualityWarning, stacklevel=3)

    return CombEstimate(
        c, c_se, gamma, g_se, sign, vac, vac_se, lags, mean, se,
        int(usable.size), True, quad, fields, scale, roundtrip_time,
    )


def _as_blocks(records):
    if isinstance(records, PulseTrainRecord):
        return [records]
    return list(records)


def estimate_comb(record, quad: str, max_lag: int = 200) -> CombEstimate:
    """Fit the inter-pulse comb of one output quadrature.

    ``record`` is a :class:`PulseTrainRecord` or a :class:`LagAccumulator`
    already filled from streamed blocks.
    """
    if isinstance(record, LagAccumulator):
        raise TypeError("pass the accumulator to estimate_from_accumulator")
    if record.pulses < 100:
        raise ValueError("need at least 100 recorded pulses")
    data = record.quadrature(quad)
    if data.shape[0] * data.shape[1] < 2:
        raise ValueError("need at least two slice-trajectories")
    max_lag = min(max_lag, record.pulses - 2)
    acc = LagAccumulator(max_lag)
    acc.add(0, data)
    return estimate_from_accumulator(
        acc, record.bin_width, record.roundtrip_time, quad, (record.field, record.field)
    )


def estimate_cross(pump_record: PulseTrainRecord, signal_record: PulseTrainRecord, quad: str,
                   max_lag: int = 200) -> CombEstimate:
    """Fit the symmetrised pump/signal cross comb <Q_p Q_s> + <Q_s Q_p>."""
    if pump_record.x.shape != signal_record.x.shape:
        raise ValueError("pump and signal records must come from the same run layout")
    if pump_record.pulses < 100:
        raise ValueError("need at least 100 recorded pulses")
    max_lag = min(max_lag, pump_record.pulses - 2)
    acc = LagAccumulator(max_lag, symmetric_cross=True)
    acc.add(0, pump_record.quadrature(quad), signal_record.quadrature(quad))
    return estimate_from_accumulator(
        acc, pump_record.bin_width, pump_record.roundtrip_time, quad, ("pump", "signal")
    )


def estimate_from_accumulator(acc: LagAccumulator, bin_width, roundtrip_time, quad, fields) -> CombEstimate:
    scale = 1.0 if fields[0] != fields[1] else 0.25
    return _fit_matrix(acc.matrix(), bin_width, roundtrip_time, scale, quad, fields)


def estimate_all_combs(params: OscillatorParams, pump: PumpProfile, config: SimConfig,
                       max_lag: int = 200, threads: int = 1) -> dict:
    """Stream a simulation into lag accumulators and fit every comb.

    Memory stays bounded by one block, so ensembles far larger than a
    full :class:`PulseTrainRecord` are practical. Keys are
    ``("pump", "X")`` ... ``("signal", "Y")`` and ``("cross", "X")``,
    ``("cross", "Y")``.
    """
    max_lag = min(max_lag, config.pulses - 2)
    accs = {(f, q): LagAccumulator(max_lag) for f in ("pump", "signal") for q in "XY"}
    accs.update({("cross", q): LagAccumulator(max_lag, symmetric_cross=True) for q in "XY"})
    for block in simulate_blocks(params, pump, config, threads):
        key = (block.slice_index, block.trajectories.start)
        for q in "XY":
            accs[("pump", q)].add(key, block.pump[q])
            accs[("signal", q)].add(key, block.signal[q])
            accs[("cross", q)].add(key, block.pump[q], block.signal[q])
    out = {}
    for (f, q), acc in accs.items():
        fields = ("pump", "signal") if f == "cross" else (f, f)
        out[(f, q)] = estimate_from_accumulator(acc, config.bin_width, params.roundtrip_time, q, fields)
    return out


def bin_covariance(record: PulseTrainRecord, quad: str, slice_shift: int, pulse_lag: int):
    """Covariance of Q[j, n] with Q[j + slice_shift, n + pulse_lag].

    Returns (mean, standard error) in units of the vacuum variance 1/(4 dt).
    Bins with t - t' not a multiple of T_R (``slice_shift`` != 0) should
    be uncorrelated.
    """
    data = record.quadrature(quad)
    n_sl = data.shape[1]
    if abs(slice_shift) >= n_sl or not 0 <= pulse_lag < data.shape[-1]:
        raise ValueError("slice_shift or pulse_lag out of range")
    a = data[:, : n_sl - slice_shift] if slice_shift >= 0 else data[:, -slice_shift:]
    b = data[:, slice_shift:] if slice_shift >= 0 else data[:, : n_sl + slice_shift]
    m = data.shape[-1]
    prod = a[..., : m - pulse_lag] * b[..., pulse_lag:]
    per_stream = prod.mean(axis=-1).reshape(-1)
    vac = 1.0 / (4.0 * record.bin_width)
    return per_stream.mean() / vac, per_stream.std(ddof=1) / math.sqrt(per_stream.size) / vac


# ---------------------------------------------------------------- dumps


def save_record(record: PulseTrainRecord, path):
    """Write a record as ``.npz`` (binary) or ``.csv`` (slice-major rows)."""
    path = str(path)
    meta = {
        "field": record.field,
        "seed": record.seed,
        "config_hash": record.config_hash,
        "bin_width": record.bin_width,
        "pulses": record.pulses,
        "roundtrip_time": record.roundtrip_time,
    }
    if path.endswith(".npz"):
        np.savez(
            path, x=record.x, y=record.y, slice_times=record.slice_times,
            skipped_times=record.skipped_times, meta=json.dumps(meta),
        )
        return
    k, j, m = record.x.shape
    traj, sl, pulse = np.meshgrid(np.arange(k), np.arange(j), np.arange(m), indexing="ij")
    # slice-major: slice, then trajectory, then pulse
    order = np.transpose(np.arange(k * j * m).reshape(k, j, m), (1, 0, 2)).ravel()
    rows = np.column_stack([
        sl.ravel()[order], traj.ravel()[order], pulse.ravel()[order],
        np.repeat(record.slice_times[None, :, None], k, 0).repeat(m, 2).ravel()[order],
        record.x.ravel()[order], record.y.ravel()[order],
    ])
    header_meta = " ".join(f"{key}={value}" for key, value in meta.items())
    header = f"{header_meta}\nslice,trajectory,pulse,t_s,x_out,y_out"
    np.savetxt(path, rows, delimiter=",", header=header, fmt=["%d", "%d", "%d", "%.17g", "%.17g", "%.17g"])


def load_record(path) -> PulseTrainRecord:
    path = str(path)
    if path.endswith(".npz"):
        with np.load(path) as data:
            meta = json.loads(str(data["meta"]))
            return PulseTrainRecord(
                meta["field"], data["x"], data["y"], meta["bin_width"], data["slice_times"],
                meta["roundtrip_time"], meta["seed"], meta["config_hash"], data["skipped_times"],
            )
    with open(path) as fh:
        first = fh.readline().lstrip("# ").strip()
    meta = dict(item.split("=", 1) for item in first.split())
    rows = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    sl = rows[:, 0].astype(int)
    traj = rows[:, 1].astype(int)
    pulse = rows[:, 2].astype(int)
    shape = (traj.max() + 1, sl.max() + 1, pulse.max() + 1)
    x = np.empty(shape)
    y = np.empty(shape)
    x[traj, sl, pulse] = rows[:, 4]
    y[traj, sl, pulse] = rows[:, 5]
    times = np.empty(shape[1])
    times[sl] = rows[:, 3]
    return PulseTrainRecord(
        meta["field"], x, y, float(meta["bin_width"]), times, float(meta["roundtrip_time"]),
        int(meta["seed"]), meta["config_hash"],
    )
