"""Command-line front end: ``spopo <task> --config run.json``.

Every run writes its outputs plus ``manifest.json`` into the output
directory. Exit codes: 0 success, 2 configuration error, 3 physics
precondition error, 4 failed spectrum comparison.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import math
import os
import sys
import warnings
from importlib import metadata
from pathlib import Path

import numpy as np

from . import analytic, homodyne, langevin
from .config import TASKS, ConfigError, RunConfig, load_config
from .core import effective_rates, steady_state, threshold_flux, validity_margin
from .io import write_csv, write_json

THREADS_ENV = "SPOPO_THREADS"
EXIT_OK, EXIT_CONFIG, EXIT_PHYSICS, EXIT_COMPARISON = 0, 2, 3, 4


class ComparisonFailed(RuntimeError):
    pass


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


class _Run:
    """Tracks files written by a task so a failure can remove them."""

    def __init__(self, cfg: RunConfig, out: Path, seed: int, threads: int):
        self.cfg, self.out, self.seed, self.threads = cfg, out, seed, threads
        self.files: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.out / name
        self.files.append(p)
        return p

    def cleanup(self):
        for p in self.files:
            if p.exists():
                p.unlink()


def _require(cfg: RunConfig, *sections: str):
    for name in sections:
        if getattr(cfg, name) is None:
            raise ConfigError(f"{name}: section required by task {cfg.task!r}")


def _peak_mu0(cfg: RunConfig) -> float:
    return float(cfg.pump_profile().peak_value)


# ------------------------------------------------------------------ tasks


def task_steady_state(run: _Run):
    _require(run.cfg, "pump")
    params = run.cfg.oscillator_params()
    mu0 = _peak_mu0(run.cfg)
    ss = steady_state(params, mu0)
    rates = effective_rates(params, mu0)
    write_csv(run.path("steady_state.csv"), {
        "mu0": [mu0],
        "threshold_flux_photons_s": [threshold_flux(params)],
        "pump_flux_photons_s": [ss.pump_flux],
        "signal_flux_photons_s": [ss.signal_flux],
        "kappa_x_1_s": [rates.kappa_x],
        "kappa_y_1_s": [rates.kappa_y],
    })


def task_combs(run: _Run):
    _require(run.cfg, "pump")
    params = run.cfg.oscillator_params()
    mu0 = _peak_mu0(run.cfg)
    combs = {}
    for f in ("pump", "signal"):
        for q in "XY":
            combs[(f, q)] = analytic.quadrature_comb(f, q, params, mu0)
    for q in "XY":
        combs[("cross", q)] = analytic.cross_comb(q, params, mu0, run.cfg.simulation.branch
                                                  if run.cfg.simulation else 1)
    estimates = {}
    if run.cfg.combs.estimate:
        _require(run.cfg, "simulation")
        estimates = langevin.estimate_all_combs(
            params, run.cfg.pump_profile(), run.cfg.sim_config(run.seed),
            max_lag=run.cfg.combs.max_lag, threads=run.threads,
        )
    cols = {k: [] for k in ("comb", "quadrature", "coefficient", "sign", "decay_rate_1_s",
                            "estimated_coefficient", "estimated_coefficient_se", "estimated_sign",
                            "estimated_decay_rate_1_s", "estimated_decay_rate_se_1_s")}
    for key, comb in combs.items():
        est = estimates.get(key)
        cols["comb"].append(key[0])
        cols["quadrature"].append(key[1])
        cols["coefficient"].append(comb.coefficient)
        cols["sign"].append(comb.sign)
        cols["decay_rate_1_s"].append(comb.decay_rate)
        cols["estimated_coefficient"].append(est.coefficient if est else math.nan)
        cols["estimated_coefficient_se"].append(est.coefficient_se if est else math.nan)
        cols["estimated_sign"].append(est.sign if est else math.nan)
        cols["estimated_decay_rate_1_s"].append(est.decay_rate if est else math.nan)
        cols["estimated_decay_rate_se_1_s"].append(est.decay_rate_se if est else math.nan)
    write_csv(run.path("combs.csv"), cols)


def task_spectrum(run: _Run):
    _require(run.cfg, "pump", "spectrum")
    params = run.cfg.oscillator_params()
    omega = run.cfg.omega_grid()
    field = run.cfg.spectrum.field
    lo = run.cfg.lo_profile() if run.cfg.lo is not None else None
    if lo is None:
        # ideal LO matched to the pump pulse centre
        lo = homodyne.LOProfile("delta", 1.0, 0.0, 0.0, 0.5 * math.pi, field)
    if lo.target != field:
        raise ConfigError("lo.target: must match spectrum.field")
    values = np.atleast_1d(analytic.spectrum_general(
        field, omega, run.cfg.pump_profile(), lo, params, run.cfg.spectrum.m_max))
    series = analytic.SpectrumSeries(omega, values, field, lo.quadrature)
    homodyne.write_spectrum(series, run.path(f"spectrum_{field}_{lo.quadrature}.csv"))


def task_simulate(run: _Run):
    _require(run.cfg, "pump", "simulation")
    pump_rec, sig_rec = langevin.simulate(
        run.cfg.oscillator_params(), run.cfg.pump_profile(), run.cfg.sim_config(run.seed), run.threads)
    ext = run.cfg.simulation.format
    for rec in (pump_rec, sig_rec):
        langevin.save_record(rec, run.path(f"{rec.field}_record.{ext}"))


def task_homodyne(run: _Run):
    _require(run.cfg, "pump", "simulation", "lo")
    params = run.cfg.oscillator_params()
    pump = run.cfg.pump_profile()
    lo = run.cfg.lo_profile()
    pump_rec, sig_rec = langevin.simulate(params, pump, run.cfg.sim_config(run.seed), run.threads)
    record = sig_rec if lo.target == "signal" else pump_rec
    series = homodyne.synthesize_photocurrent(record, lo)
    if run.cfg.homodyne.omega is not None:
        omega = np.asarray(run.cfg.homodyne.omega) / run.cfg.time_scale
    elif run.cfg.spectrum is not None:
        omega = run.cfg.omega_grid()
    else:
        omega = np.array([0.0, 2.0 * math.pi / params.roundtrip_time])
    measured = homodyne.photocurrent_spectrum(series, omega, run.cfg.homodyne.segments)
    predicted = homodyne.predict_for_series(series, pump, params, omega)
    report = homodyne.compare_spectra(measured, predicted)
    tag = f"{lo.target}_{lo.quadrature}"
    homodyne.write_spectrum(measured, run.path(f"measured_{tag}.csv"))
    homodyne.write_spectrum(predicted, run.path(f"predicted_{tag}.csv"))
    run.path(f"comparison_{tag}.csv")
    run.path(f"comparison_{tag}.json")
    report.write(run.out / f"comparison_{tag}")
    if not report.passed:
        raise ComparisonFailed(
            f"max |z| = {report.max_z:.3g} exceeds {report.z_critical:.3g} at omega = {report.worst_omega:.6g} rad/s")


def task_fig4(run: _Run):
    _require(run.cfg, "fig4", "pump")
    f = run.cfg.fig4
    ts = run.cfg.time_scale
    pump = run.cfg.pump_profile()
    if pump.shape != "gaussian":
        raise ConfigError("pump.shape: the delay scan needs a gaussian pump")
    delays = np.linspace(f.delay_min, f.delay_max, f.delay_points) * ts
    table = analytic.fig4_scan(run.cfg.oscillator_params(), f.mu0_values, delays, f.lo_width * ts,
                               pump.duration, omega=f.omega / ts)
    write_csv(run.path("fig4.csv"), {"mu0": table[:, 0], "delay_s": table[:, 1], "noise": table[:, 2]},
              header_units={"mu0": "1", "delay_s": "s", "noise": "shot noise"})


def _validity_report(cfg: RunConfig):
    if cfg.validity is None or cfg.pump is None:
        return None
    params = cfg.oscillator_params()
    margin = validity_margin(params, params.threshold, cfg.validity.averaging_time * cfg.time_scale)
    mu0 = _peak_mu0(cfg)
    excess = mu0 - 1.0
    # "much greater" is taken as a factor of ten
    verdict = "PASS" if excess >= 10.0 * margin else "WARN"
    return {"margin": margin, "mu0": mu0, "mu0_minus_1": excess, "verdict": verdict}


def task_validity(run: _Run):
    _require(run.cfg, "validity", "pump")
    report = _validity_report(run.cfg)
    write_json(run.path("validity.json"), report)


TASK_FUNCS = {
    "steady-state": task_steady_state,
    "combs": task_combs,
    "spectrum": task_spectrum,
    "simulate": task_simulate,
    "homodyne": task_homodyne,
    "fig4": task_fig4,
    "validity": task_validity,
}


# ------------------------------------------------------------------ driver


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def execute(cfg: RunConfig, task: str, out: Path, seed: int, threads: int) -> dict:
    """Run one task and write the manifest; returns the manifest payload."""
    cfg = cfg.model_copy(update={"task": task, "seed": seed, "output_dir": str(out)})
    out.mkdir(parents=True, exist_ok=True)
    run = _Run(cfg, out, seed, threads)
    started = _dt.datetime.now(_dt.timezone.utc).isoformat()
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            TASK_FUNCS[task](run)
        config_path = run.path("config.json")
        config_path.write_text(cfg.to_json() + "\n")
        manifest = {
            "task": task,
            "config_hash": cfg.digest(),
            "version": _version(),
            "seed": seed,
            "threads": threads,
            "started": started,
            "finished": _dt.datetime.now(_dt.timezone.utc).isoformat(),
            "outputs": {p.name: _sha256(p) for p in run.files if p.exists()},
            "validity": _validity_report(cfg),
            "config": cfg.model_dump(mode="json"),
            "warnings": sorted({str(w.message) for w in caught}),
        }
        write_json(out / "manifest.json", manifest)
        return manifest
    except ComparisonFailed:
        # keep the evidence; the manifest records the failure
        manifest = {
            "task": task, "config_hash": cfg.digest(), "version": _version(), "seed": seed,
            "started": started, "finished": _dt.datetime.now(_dt.timezone.utc).isoformat(),
            "outputs": {p.name: _sha256(p) for p in run.files if p.exists()},
            "validity": _validity_report(cfg), "comparison": "FAIL",
        }
        write_json(out / "manifest.json", manifest)
        raise
    except BaseException:
        run.cleanup()
        raise


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spopo", description="Pulsed OPO quantum-noise lab")
    ap.add_argument("task", nargs="?", choices=TASKS, help="task to run (overrides --task and the config)")
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--task", dest="task_flag", choices=TASKS)
    ap.add_argument("--seed", type=int, help="RNG seed (overrides the config)")
    ap.add_argument("--out", help="output directory (overrides the config)")
    ap.add_argument("--threads", type=int, help=f"worker threads (default: ${THREADS_ENV} or 1)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        task = args.task or args.task_flag or cfg.task
        if task is None:
            raise ConfigError("task: no task given on the command line or in the config")
        seed = cfg.seed if args.seed is None else args.seed
        if not 0 <= seed < 2 ** 64:
            raise ConfigError("seed: must fit in 64 bits")
        threads = args.threads or cfg.threads or int(os.environ.get(THREADS_ENV, "1") or 1)
        if threads < 1:
            raise ConfigError("threads: must be positive")
        out = Path(args.out or cfg.output_dir)
        execute(cfg, task, out, seed, threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ComparisonFailed as exc:
        print(f"comparison failed: {exc}", file=sys.stderr)
        return EXIT_COMPARISON
    except (ValueError, ArithmeticError) as exc:
        print(f"physics error: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
