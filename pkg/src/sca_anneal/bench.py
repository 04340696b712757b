"""Multi-trial benchmarks: seeded trials, histograms, success rates, output files."""
from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dynamics import KIND_CODES, EngineKind, EngineSpec, TrialRecord, anneal_many
from .errors import ConfigurationError, InvalidInputError
from .model import IsingModel
from .problems import InstanceArtifact, decode_tour
from .schedules import AnnealingSchedule
from .theory import brute_force_ground_states

__all__ = [
    "EnergyHistogram",
    "BenchmarkResult",
    "SweepResult",
    "derive_trial_seed",
    "run_trials",
    "run_benchmark",
    "success_rate",
    "format_rate",
    "default_tolerance",
    "build_histogram",
    "epsilon_sweep",
    "emit_outputs",
    "AUTO_ORACLE_MAX_N",
]

AUTO_ORACLE_MAX_N = 20
DEFAULT_BINS = 50


def derive_trial_seed(master_seed: int, kind: EngineKind, trial: int) -> int:
    """Seed for one trial, a pure function of (master seed, engine kind, trial index)."""
    ss = np.random.SeedSequence([int(master_seed), KIND_CODES[EngineKind(kind)], int(trial)])
    return int(ss.generate_state(1, np.uint64)[0])


def _run_block(args):
    model, spec, schedule, steps, seeds, sweeps = args
    return anneal_many(model, spec, schedule, steps, seeds, sweeps_per_step=sweeps)


def run_trials(
    model: IsingModel,
    spec: EngineSpec,
    schedule: AnnealingSchedule,
    trials: int,
    steps: int,
    seed: int,
    *,
    workers: int | None = None,
    sweeps_per_step: int = 1,
) -> list[TrialRecord]:
    """``trials`` independent anneals of one engine, returned in trial order.

    Work is split into contiguous trial blocks across processes; since each
    trial's seed depends only on its index, the split never changes results.
    """
    seeds = [derive_trial_seed(seed, spec.kind, i) for i in range(trials)]
    if workers is None:
        workers = os.cpu_count() or 1
    workers = max(1, min(workers, trials))
    if workers == 1:
        return anneal_many(model, spec, schedule, steps, seeds, sweeps_per_step=sweeps_per_step)
    bounds = np.linspace(0, trials, workers + 1).astype(int)
    jobs = [(model, spec, schedule, steps, seeds[a:b], sweeps_per_step) for a, b in zip(bounds[:-1], bounds[1:])]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        blocks = list(pool.map(_run_block, jobs))
    return [rec for block in blocks for rec in block]


def success_rate(records, reference_min: float, tolerance: float = 0.0) -> float:
    """Fraction of trials whose minimum energy is within ``tolerance`` of the reference."""
    if tolerance < 0:
        raise InvalidInputError(f"tolerance must be >= 0, got {tolerance}")
    E = np.array([r.min_energy if isinstance(r, TrialRecord) else float(r) for r in records])
    if E.size == 0:
        raise InvalidInputError("success rate of an empty record list is undefined")
    return float(np.count_nonzero(E <= reference_min + tolerance)) / E.size


def format_rate(rate: float | None) -> str:
    """Success rate as a one-decimal percentage, e.g. 0.895 -> '89.5%'."""
    return "n/a" if rate is None else f"{100 * rate:.1f}%"


def default_tolerance(model: IsingModel, reference: float) -> float:
    """Exact match when energies are exactly representable, else 1e-6 relative."""
    if model.is_dyadic:
        return 0.0
    return 1e-6 * max(1.0, abs(reference))


@dataclass
class EnergyHistogram:
    edges: np.ndarray
    counts: dict[str, np.ndarray]
    trials: dict[str, int]
    success: dict[str, float | None] = field(default_factory=dict)


def build_histogram(records: dict[str, list[TrialRecord]], bins=DEFAULT_BINS, value_range=None) -> EnergyHistogram:
    """Histogram of per-trial minimum energies, bins shared across engines.

    ``bins`` is a bin count (uniform over the pooled range or ``value_range``)
    or an explicit array of edges.
    """
    pooled = np.array([r.min_energy for recs in records.values() for r in recs])
    if np.ndim(bins) == 0:
        if value_range is not None:
            lo, hi = value_range
        elif pooled.size:
            lo, hi = float(pooled.min()), float(pooled.max())
        else:
            lo, hi = 0.0, 1.0
        if lo == hi:
            lo, hi = lo - 0.5, hi + 0.5
        edges = np.linspace(lo, hi, int(bins) + 1)
    else:
        edges = np.asarray(bins, dtype=float)
    counts, trials = {}, {}
    for label, recs in records.items():
        E = np.array([r.min_energy for r in recs])
        # values exactly on the outer edges are included, like numpy.histogram
        counts[label] = np.histogram(E, bins=edges)[0] if E.size else np.zeros(len(edges) - 1, dtype=int)
        trials[label] = len(recs)
    return EnergyHistogram(edges, counts, trials)


@dataclass
class BenchmarkResult:
    metadata: dict
    engines: list[EngineSpec]
    schedule: AnnealingSchedule
    trials: int
    steps: int
    seed: int
    sweeps_per_step: int
    records: dict[str, list[TrialRecord]]
    histogram: EnergyHistogram
    reference: float | None
    reference_source: str
    tolerance: float | None
    tsp: object = None

    def success(self, label: str) -> float | None:
        return self.histogram.success.get(label)


def _resolve_reference(model, records, reference):
    """Returns (value, source)."""
    if reference is None or reference == "none":
        return None, "none"
    if reference == "auto":
        reference = "oracle" if model.num_vertices <= AUTO_ORACLE_MAX_N else "empirical"
    if reference == "oracle":
        return brute_force_ground_states(model).min_energy, "oracle"
    if reference == "empirical":
        pooled = [r.min_energy for recs in records.values() for r in recs]
        return (min(pooled), "empirical") if pooled else (None, "none")
    try:
        return float(reference), "supplied"
    except (TypeError, ValueError):
        raise ConfigurationError(f"unknown reference {reference!r}") from None


def run_benchmark(
    instance,
    engines: list[EngineSpec],
    schedule: AnnealingSchedule,
    trials: int,
    steps: int,
    seed: int,
    *,
    reference="auto",
    tolerance: float | None = None,
    bins=DEFAULT_BINS,
    workers: int | None = None,
    sweeps_per_step: int = 1,
) -> BenchmarkResult:
    """Run every engine ``trials`` times on one fixed instance.

    ``reference`` is a number, ``"oracle"`` (brute force), ``"empirical"``
    (best energy seen by any engine), ``"auto"`` (oracle for small N,
    empirical otherwise) or ``None``.
    """
    if trials < 1 or steps < 1:
        raise InvalidInputError(f"trials and steps must be >= 1, got {trials}, {steps}")
    if isinstance(instance, InstanceArtifact):
        model, metadata, tsp = instance.model, dict(instance.metadata), instance.tsp
    else:
        model, metadata, tsp = instance, {"family": "custom"}, None
    if not engines:
        raise ConfigurationError("at least one engine is required")
    labels = [e.label for e in engines]
    if len(set(labels)) != len(labels):
        raise ConfigurationError(f"duplicate engines: {labels}")
    for e in engines:
        try:
            e.validate(model)
        except ConfigurationError as exc:
            raise ConfigurationError(f"engine {e.label} incompatible with instance: {exc}") from None

    records = {
        e.label: run_trials(model, e, schedule, trials, steps, seed, workers=workers, sweeps_per_step=sweeps_per_step)
        for e in engines
    }
    ref, source = _resolve_reference(model, records, reference)
    hist = build_histogram(records, bins)
    tol = None
    if ref is not None:
        tol = default_tolerance(model, ref) if tolerance is None else float(tolerance)
        hist.success = {label: success_rate(recs, ref, tol) for label, recs in records.items()}
    else:
        hist.success = {label: None for label in records}
    metadata["num_vertices"] = model.num_vertices
    metadata["num_edges"] = model.num_edges
    return BenchmarkResult(
        metadata, list(engines), schedule, trials, steps, seed, sweeps_per_step, records, hist, ref, source, tol, tsp
    )


@dataclass
class SweepResult:
    result: BenchmarkResult
    rates: list[tuple[float, float | None]]

    @property
    def best_epsilon(self) -> float:
        """Epsilon with the highest success rate; ties go to the smallest epsilon."""
        return max(self.rates, key=lambda er: (er[1] if er[1] is not None else -1.0, -er[0]))[0]


def epsilon_sweep(instance, epsilons, schedule, trials, steps, seed, **kwargs) -> SweepResult:
    """Success rate of epsilon-SCA for each epsilon.

    All epsilons share trial seeds (common random numbers) and one reference
    minimum, so an empirical reference is pooled across the whole sweep.
    """
    epsilons = [float(e) for e in epsilons]
    for e in epsilons:
        if not 0 < e <= 1:
            raise ConfigurationError(f"epsilon must lie in (0, 1], got {e}")
    engines = [EngineSpec.epsilon_sca(e) for e in epsilons]
    result = run_benchmark(instance, engines, schedule, trials, steps, seed, **kwargs)
    return SweepResult(result, [(e.epsilon, result.success(e.label)) for e in engines])


# -- outputs ---------------------------------------------------------------------


def _fmt(x) -> str:
    return repr(float(x))


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def trials_csv(result: BenchmarkResult) -> str:
    rows = [
        (label, i, r.seed, _fmt(r.min_energy), r.best_step)
        for label, recs in result.records.items()
        for i, r in enumerate(recs)
    ]
    return _csv_text(["engine", "trial", "seed", "min_energy", "best_step"], rows)


def histogram_csv(result: BenchmarkResult) -> str:
    hist = result.histogram
    labels = list(hist.counts)
    rows = [
        [_fmt(hist.edges[i]), _fmt(hist.edges[i + 1])] + [int(hist.counts[l][i]) for l in labels]
        for i in range(len(hist.edges) - 1)
    ]
    return _csv_text(["bin_lo", "bin_hi"] + labels, rows)


def summary(result: BenchmarkResult, sweep: SweepResult | None = None) -> dict:
    per_engine = {}
    for spec in result.engines:
        recs = result.records[spec.label]
        E = np.array([r.min_energy for r in recs])
        entry = {
            "engine": spec.describe(),
            "trials": len(recs),
            "min_energy": float(E.min()) if E.size else None,
            "mean_energy": float(E.mean()) if E.size else None,
            "success_rate": result.success(spec.label),
        }
        if result.tsp is not None and recs:
            best = recs[int(np.argmin(E))]
            dec = decode_tour(result.tsp, best.best_config)
            entry["best_tour"] = list(dec.tour) if dec.valid else None
            entry["best_tour_length"] = dec.length
        per_engine[spec.label] = entry
    out = {
        "instance": {k: v for k, v in result.metadata.items()},
        "parameters": {
            "schedule": result.schedule.describe(),
            "trials": result.trials,
            "steps": result.steps,
            "seed": result.seed,
            "sweeps_per_step": result.sweeps_per_step,
            "instance_policy": "one fixed instance shared by all trials",
        },
        "reference": {"value": result.reference, "source": result.reference_source, "tolerance": result.tolerance},
        "engines": per_engine,
    }
    if sweep is not None:
        out["sweep"] = [{"epsilon": e, "success_rate": r} for e, r in sweep.rates]
    return out


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc


def emit_outputs(result: BenchmarkResult, out_dir, formats=("csv", "json"), sweep: SweepResult | None = None) -> list[Path]:
    """Write trials.csv / histogram.csv (csv) and summary.json (json); returns paths written.

    Output bytes depend only on the inputs (no timings, stable ordering).
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot create output directory {out}: {exc.strerror}") from exc
    written = []
    if "csv" in formats:
        _write(out / "trials.csv", trials_csv(result))
        _write(out / "histogram.csv", histogram_csv(result))
        written += [out / "trials.csv", out / "histogram.csv"]
        if sweep is not None:
            rows = [(_fmt(e), "" if r is None else _fmt(r)) for e, r in sweep.rates]
            _write(out / "sweep.csv", _csv_text(["epsilon", "success_rate"], rows))
            written.append(out / "sweep.csv")
    if "json" in formats:
        _write(out / "summary.json", json.dumps(summary(result, sweep), indent=2, sort_keys=True) + "\n")
        written.append(out / "summary.json")
    return written
