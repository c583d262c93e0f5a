"""JSON run configuration with an explicit units block.

Values are given in the units declared under ``"units"`` and converted to
SI (seconds, photons/s) when the physics objects are built. Unknown keys
are rejected and every error names the offending path.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .core import LOProfile, OscillatorParams, PumpProfile, watts_to_flux
from .langevin import SimConfig

TIME_UNITS = {"s": 1.0, "ns": 1e-9, "ps": 1e-12, "fs": 1e-15}
TASKS = ("steady-state", "combs", "spectrum", "simulate", "homodyne", "fig4", "validity")


class ConfigError(ValueError):
    """Schema or cross-field violation in a run configuration."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class Units(_Strict):
    time: Literal["s", "ns", "ps", "fs"] = "s"
    power: Literal["photons/s", "W"] = "photons/s"
    wavelength: Literal["m", "um", "nm"] = "m"


class OscillatorSection(_Strict):
    """Rates are in 1/(time unit). Give exactly one of coupling or threshold."""

    roundtrip_time: float = Field(gt=0)
    loss_rate_signal: float = Field(gt=0)
    loss_rate_pump: float = Field(gt=0)
    coupling: Optional[float] = Field(default=None, gt=0)
    threshold: Optional[float] = Field(default=None, gt=0)
    wavelength: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _one_of(self):
        if (self.coupling is None) == (self.threshold is None):
            raise ValueError("give exactly one of 'coupling' and 'threshold'")
        return self


class PumpSection(_Strict):
    shape: Literal["rectangular", "gaussian", "sampled"] = "rectangular"
    mu0: Optional[float] = Field(default=None, ge=0)
    peak: Optional[float] = Field(default=None, ge=0)
    duration: Optional[float] = Field(default=None, gt=0)
    times: Optional[list[float]] = None
    mu: Optional[list[float]] = None

    @model_validator(mode="after")
    def _shape_fields(self):
        if self.shape == "sampled":
            if self.times is None or self.mu is None:
                raise ValueError("sampled pump needs 'times' and 'mu'")
        else:
            if (self.mu0 is None) == (self.peak is None):
                raise ValueError("give exactly one of 'mu0' and 'peak'")
            if self.duration is None:
                raise ValueError("'duration' is required")
        return self


class LOSection(_Strict):
    shape: Literal["rectangular", "gaussian", "delta"] = "rectangular"
    peak_flux: float = Field(default=1.0, ge=0)
    duration: float = Field(default=0.0, ge=0)
    delay: float = 0.0
    quadrature: Literal["X", "Y"] = "Y"
    target: Literal["pump", "signal"] = "signal"


class SimulationSection(_Strict):
    pulses: int = Field(gt=0)
    trajectories: int = Field(gt=0)
    n_slices: int = Field(default=1, gt=0)
    bin_width: float = Field(gt=0)
    mode: Literal["adiabatic", "full"] = "adiabatic"
    substeps: int = Field(default=2, gt=0)
    warmup: Optional[int] = Field(default=None, ge=0)
    branch: Literal[1, -1] = 1
    slice_center: float = 0.0
    format: Literal["npz", "csv"] = "npz"


class SpectrumSection(_Strict):
    field: Literal["pump", "signal"] = "signal"
    omega_min: float = 0.0
    omega_max: float
    points: int = Field(default=201, ge=1)
    m_max: Optional[int] = Field(default=None, ge=0)


class CombsSection(_Strict):
    estimate: bool = False
    max_lag: int = Field(default=200, gt=1)


class HomodyneSection(_Strict):
    segments: int = Field(default=4, ge=4)
    omega: Optional[list[float]] = None


class Fig4Section(_Strict):
    mu0_values: list[float] = [0.5, 1.0, 2.0]
    delay_min: float
    delay_max: float
    delay_points: int = Field(default=101, ge=1)
    lo_width: float = Field(default=0.0, ge=0)
    omega: float = 0.0


class ValiditySection(_Strict):
    averaging_time: float = Field(gt=0)


class RunConfig(_Strict):
    units: Units = Units()
    oscillator: OscillatorSection
    pump: Optional[PumpSection] = None
    lo: Optional[LOSection] = None
    simulation: Optional[SimulationSection] = None
    spectrum: Optional[SpectrumSection] = None
    combs: CombsSection = CombsSection()
    homodyne: HomodyneSection = HomodyneSection()
    fig4: Optional[Fig4Section] = None
    validity: Optional[ValiditySection] = None
    task: Optional[Literal[TASKS]] = None
    output_dir: str = "out"
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    threads: Optional[int] = Field(default=None, gt=0)

    # ---------------------------------------------------------- conversions

    @property
    def time_scale(self) -> float:
        return TIME_UNITS[self.units.time]

    def _flux(self, value: float) -> float:
        if self.units.power == "photons/s":
            return value
        wl = self.oscillator.wavelength
        if wl is None:
            raise ConfigError("oscillator.wavelength: required when units.power is 'W'")
        wl *= {"m": 1.0, "um": 1e-6, "nm": 1e-9}[self.units.wavelength]
        return float(watts_to_flux(value, wl))

    def oscillator_params(self) -> OscillatorParams:
        o, ts = self.oscillator, self.time_scale
        args = (o.roundtrip_time * ts, o.loss_rate_signal / ts, o.loss_rate_pump / ts)
        if o.coupling is not None:
            return OscillatorParams(*args, o.coupling / math.sqrt(ts))
        return OscillatorParams.from_threshold(*args, self._flux(o.threshold))

    def pump_profile(self) -> PumpProfile:
        p, ts = self.pump, self.time_scale
        if p.shape == "sampled":
            return PumpProfile.sampled(np.asarray(p.times) * ts, np.asarray(p.mu))
        if p.mu0 is not None:
            mu0 = p.mu0
        else:
            mu0 = math.sqrt(self._flux(p.peak) / self.oscillator_params().threshold)
        return PumpProfile(p.shape, peak=mu0, duration=p.duration * ts)

    def lo_profile(self) -> LOProfile:
        lo, ts = self.lo, self.time_scale
        phase = 0.0 if lo.quadrature == "X" else 0.5 * math.pi
        # photons/s (per-pulse photon count for delta) are unit-independent here
        return LOProfile(lo.shape, lo.peak_flux, lo.duration * ts, lo.delay * ts, phase, lo.target)

    def sim_config(self, seed: Optional[int] = None) -> SimConfig:
        s, ts = self.simulation, self.time_scale
        return SimConfig(
            pulses=s.pulses, trajectories=s.trajectories, n_slices=s.n_slices,
            bin_width=s.bin_width * ts, mode=s.mode, substeps=s.substeps, warmup=s.warmup,
            seed=self.seed if seed is None else seed, branch=s.branch, slice_center=s.slice_center * ts,
        )

    def omega_grid(self) -> np.ndarray:
        s = self.spectrum
        return np.linspace(s.omega_min, s.omega_max, s.points) / self.time_scale

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True)

    def digest(self) -> str:
        canon = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def _format_errors(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        path = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{path}: {e['msg']}")
    return "; ".join(lines)


def parse_config(data) -> RunConfig:
    """Validate a mapping (or JSON text) and re-check the physics constraints."""
    if isinstance(data, (str, bytes)):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"<root>: invalid JSON ({exc})") from None
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc)) from None
    _check_physics(cfg)
    return cfg


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text)


def _check_physics(cfg: RunConfig):
    checks = [("oscillator", cfg.oscillator_params)]
    if cfg.pump is not None:
        checks.append(("pump", cfg.pump_profile))
    if cfg.lo is not None:
        checks.append(("lo", cfg.lo_profile))
    if cfg.simulation is not None:
        checks.append(("simulation", cfg.sim_config))
    for path, build in checks:
        try:
            build()
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    if cfg.lo is not None and cfg.lo.shape != "delta" and cfg.lo.duration <= 0:
        raise ConfigError("lo.duration: must be positive for a non-delta LO")
