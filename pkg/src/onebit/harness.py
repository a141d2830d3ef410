"""Experiment runner: sample-size sweeps, scale sweeps, CSV persistence.

Every trial derives its own random stream from (base_seed, m, trial), so
records are identical whether trials run sequentially or on a process
pool, and reruns of the same spec are byte-identical on disk.
"""

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import estimate, measure, sets
from .errors import SpecValidationError

RECORD_FIELDS = ("m", "trial", "seed", "error", "objective", "wall_time_ms")


@dataclass(frozen=True)
class ExperimentSpec:
    n: int
    s: int
    set_descriptor: dict
    quantizer: measure.Quantizer
    m_grid: tuple = ()
    trials_per_m: int = 1
    mu_grid: tuple | None = None
    solver: estimate.SolverConfig = field(default_factory=estimate.SolverConfig)
    base_seed: int = 0
    signal_kind: str = "exact_sparse"
    signal_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1 or not (1 <= self.s <= self.n):
            raise SpecValidationError("need 1 <= s <= n")
        if self.trials_per_m < 1:
            raise SpecValidationError("trials_per_m must be at least 1")
        m_grid = tuple(int(m) for m in self.m_grid)
        if any(b <= a for a, b in zip(m_grid, m_grid[1:])):
            raise SpecValidationError("m_grid must be strictly increasing")
        if any(m < 1 for m in m_grid):
            raise SpecValidationError("sample counts must be positive")
        object.__setattr__(self, "m_grid", m_grid)
        if self.mu_grid is not None:
            mu_grid = tuple(float(v) for v in self.mu_grid)
            if any(v <= 0 for v in mu_grid):
                raise SpecValidationError("mu values must be positive")
            object.__setattr__(self, "mu_grid", mu_grid)
        sets.set_from_descriptor(self.set_descriptor)  # validates


@dataclass(frozen=True)
class SweepResult:
    records: tuple
    summary: tuple
    fitted_slope: float
    slope_ci: tuple
    spec: ExperimentSpec
    sweep_key: str = "m"

    def __post_init__(self):
        for r in self.records:
            if not (0.0 <= r["error"] <= 2.0):
                raise ValueError("record error outside [0, 2]")


def _trial_seed_sequences(base_seed, m, trial):
    root = np.random.SeedSequence((base_seed, int(m), int(trial)))
    return root.spawn(2)


def run_trial(spec, m, trial_index, mu=None):
    """One (m, trial) cell: fresh x0, fresh dataset, one solve.

    Deterministic given (spec.base_seed, m, trial_index).
    """
    sig_ss, data_ss = _trial_seed_sequences(spec.base_seed, m, trial_index)
    x0 = sets.sample_signal(spec.signal_kind, spec.n, sig_ss,
                            s=spec.s, **spec.signal_params)
    data_seed = int(data_ss.generate_state(1, np.uint64)[0])
    ds = measure.generate_dataset(x0, m, spec.quantizer, data_seed)
    cfg = spec.solver if mu is None else replace(spec.solver, mu=float(mu))
    set_ = sets.set_from_descriptor(spec.set_descriptor)
    t0 = time.perf_counter()
    est = estimate.solve_hinge(ds, set_, cfg)
    wall_ms = (time.perf_counter() - t0) * 1000.0
    err, _ = estimate.normalized_error_flagged(x0, est.x_hat)
    return {
        "m": int(m),
        "trial": int(trial_index),
        "seed": data_seed,
        "error": err,
        "objective": est.objective,
        "wall_time_ms": wall_ms,
    }


def _worker(args):
    spec, m, trial, mu = args
    return (mu, run_trial(spec, m, trial, mu=mu))


def _pool_size(workers):
    if workers is None:
        cap = os.environ.get("ONEBIT_THREADS")
        workers = int(cap) if cap else 1
    return max(1, int(workers))


def _run_cells(spec, cells, workers):
    """cells: list of (m, trial, mu) triples; returns records in cell order."""
    tasks = [(spec, m, t, mu) for (m, t, mu) in cells]
    nw = _pool_size(workers)
    if nw == 1:
        results = [_worker(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=nw) as pool:
            results = list(pool.map(_worker, tasks, chunksize=8))
    return results


def _summarize(records, key):
    out = []
    for val in sorted({r[key] for r in records}):
        errs = np.array([r["error"] for r in records if r[key] == val])
        out.append({
            key: val,
            "median_error": float(np.median(errs)),
            "q25": float(np.percentile(errs, 25)),
            "q75": float(np.percentile(errs, 75)),
            "trials": int(errs.size),
        })
    return tuple(out)


def _fit_slope(xs, ys):
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.maximum(np.asarray(ys, dtype=float), 1e-12))
    slope, _ = np.polyfit(lx, ly, 1)
    return float(slope)


def _bootstrap_slope_ci(records, key, base_seed, resamples=1000):
    vals = sorted({r[key] for r in records})
    groups = [np.array([r["error"] for r in records if r[key] == v])
              for v in vals]
    rng = np.random.Generator(np.random.Philox(
        np.random.SeedSequence((base_seed, 0xB007))))
    slopes = np.empty(resamples)
    for b in range(resamples):
        meds = [np.median(rng.choice(g, size=g.size, replace=True))
                for g in groups]
        slopes[b] = _fit_slope(vals, meds)
    return (float(np.percentile(slopes, 2.5)),
            float(np.percentile(slopes, 97.5)))


def run_sweep(spec, workers=None):
    """All (m, trial) records, per-m medians, and the log-log error slope."""
    if not spec.m_grid:
        raise SpecValidationError("sweep requires a non-empty m_grid")
    cells = [(m, t, None) for m in spec.m_grid
             for t in range(spec.trials_per_m)]
    results = _run_cells(spec, cells, workers)
    records = tuple(sorted((rec for _, rec in results),
                           key=lambda r: (r["m"], r["trial"])))
    summary = _summarize(records, "m")
    slope = _fit_slope([s["m"] for s in summary],
                       [s["median_error"] for s in summary])
    ci = _bootstrap_slope_ci(records, "m", spec.base_seed)
    return SweepResult(records=records, summary=summary, fitted_slope=slope,
                       slope_ci=ci, spec=spec, sweep_key="m")


def mu_sample_count(mu, s, n, c=2.0):
    """m = ceil(c * mu^4 * s * log n) for the scaled-constraint sweeps."""
    return int(math.ceil(c * mu ** 4 * s * math.log(n)))


def run_mu_sweep(spec, c=2.0, workers=None):
    """Scaled-constraint sweep: per mu, m = ceil(c mu^4 s log n).

    Records carry a "mu" column in addition to the usual fields; the
    fitted slope is log(median error) against log(mu).
    """
    if not spec.mu_grid:
        raise SpecValidationError("mu sweep requires a non-empty mu_grid")
    cells = []
    for mu in spec.mu_grid:
        m = mu_sample_count(mu, spec.s, spec.n, c)
        cells.extend((m, t, mu) for t in range(spec.trials_per_m))
    results = _run_cells(spec, cells, workers)
    records = []
    for mu, rec in results:
        rec = dict(rec)
        rec["mu"] = float(mu)
        records.append(rec)
    records = tuple(sorted(records, key=lambda r: (r["mu"], r["trial"])))
    summary = _summarize(records, "mu")
    slope = _fit_slope([s["mu"] for s in summary],
                       [s["median_error"] for s in summary])
    ci = _bootstrap_slope_ci(records, "mu", spec.base_seed)
    return SweepResult(records=records, summary=summary, fitted_slope=slope,
                       slope_ci=ci, spec=spec, sweep_key="mu")


# ---------------------------------------------------------------------------
# persistence

def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def spec_to_descriptor(spec):
    return {
        "n": spec.n,
        "s": spec.s,
        "set": spec.set_descriptor,
        "quantizer": measure.quantizer_to_descriptor(spec.quantizer),
        "m_grid": list(spec.m_grid),
        "trials_per_m": spec.trials_per_m,
        "mu_grid": list(spec.mu_grid) if spec.mu_grid else None,
        "solver": {
            "max_iters": spec.solver.max_iters,
            "step0": spec.solver.step0,
            "tol": spec.solver.tol,
            "window": spec.solver.window,
            "mu": spec.solver.mu,
        },
        "base_seed": spec.base_seed,
        "signal": {"kind": spec.signal_kind, **spec.signal_params},
    }


def spec_from_descriptor(d):
    try:
        signal = dict(d.get("signal", {"kind": "exact_sparse"}))
        kind = signal.pop("kind")
        solver = estimate.SolverConfig(**d.get("solver", {}))
        return ExperimentSpec(
            n=int(d["n"]),
            s=int(d["s"]),
            set_descriptor=d["set"],
            quantizer=measure.quantizer_from_descriptor(d["quantizer"]),
            m_grid=tuple(d.get("m_grid") or ()),
            trials_per_m=int(d.get("trials_per_m", 1)),
            mu_grid=tuple(d["mu_grid"]) if d.get("mu_grid") else None,
            solver=solver,
            base_seed=int(d.get("base_seed", 0)),
            signal_kind=kind,
            signal_params=signal,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecValidationError("invalid experiment spec: %s" % exc) from exc


def emit(result, outdir, measured_timing=False):
    """Write records.csv, summary.csv, and spec.json under outdir.

    The wall_time_ms column is zeroed unless measured_timing is set:
    rerunning an identical spec must produce byte-identical files, and
    measured timings are the one volatile field.  The in-memory records
    always carry the real measurements.
    """
    os.makedirs(outdir, exist_ok=True)
    key = result.sweep_key
    fields = (("mu",) if key == "mu" else ()) + RECORD_FIELDS
    with open(os.path.join(outdir, "records.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(fields)
        for r in result.records:
            row = dict(r)
            if not measured_timing:
                row["wall_time_ms"] = 0
            w.writerow([_fmt(row[f]) for f in fields])
    with open(os.path.join(outdir, "summary.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        cols = (key, "median_error", "q25", "q75", "trials")
        w.writerow(cols)
        for s in result.summary:
            w.writerow([_fmt(s[c]) for c in cols])
    with open(os.path.join(outdir, "spec.json"), "w") as fh:
        json.dump({
            "spec": spec_to_descriptor(result.spec),
            "sweep_key": key,
            "fitted_slope": result.fitted_slope,
            "slope_ci": list(result.slope_ci),
        }, fh, indent=2)
        fh.write("\n")


def load_sweep(outdir):
    """Rebuild a SweepResult from an emit() directory."""
    with open(os.path.join(outdir, "spec.json")) as fh:
        meta = json.load(fh)
    spec = spec_from_descriptor(meta["spec"])
    key = meta.get("sweep_key", "m")
    records = []
    with open(os.path.join(outdir, "records.csv"), newline="") as fh:
        for row in csv.DictReader(fh):
            rec = {
                "m": int(row["m"]),
                "trial": int(row["trial"]),
                "seed": int(row["seed"]),
                "error": float(row["error"]),
                "objective": float(row["objective"]),
                "wall_time_ms": float(row["wall_time_ms"]),
            }
            if key == "mu":
                rec["mu"] = float(row["mu"])
            records.append(rec)
    records = tuple(records)
    summary = _summarize(records, key)
    slope = _fit_slope([s[key] for s in summary],
                       [s["median_error"] for s in summary])
    ci = _bootstrap_slope_ci(records, key, spec.base_seed)
    return SweepResult(records=records, summary=summary, fitted_slope=slope,
                       slope_ci=ci, spec=spec, sweep_key=key)
