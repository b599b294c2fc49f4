"""Experiment drivers: the PAV pipeline, simulation studies, real-data
evaluation (in-sample and leave-one-out) and report serialization."""

import csv
import json
import math
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .calibration import MODES, PavSelection, select_batch, select_tuning, warmup
from .cv import cv_select, make_folds
from .datagen import RegressionProblem, SimConfig, generate_semisynthetic, generate_synthetic, load_matrix
from .exceptions import InvalidParameter
from .linalg import TuningGrid, as_matrix, count_factorizations, ridge_path, ridge_solve, svd
from .mapping import EdrPath, build_edr_path


CSV_HEADER = ["method", "mean_error", "sd_error", "seconds", "scaled_runtime"]
DEFAULT_METHODS = ("pav", "cv5", "cv10")


def parse_methods(methods):
    """Normalize a method list such as ``"pav,cv5"``; ``cvK`` means K-fold CV."""
    if isinstance(methods, str):
        methods = [m for m in methods.split(",") if m.strip()]
    out = []
    for m in methods:
        m = m.strip().lower()
        if m != "pav" and not re.fullmatch(r"cv\d+", m):
            raise InvalidParameter(f"unknown method {m!r}; use 'pav' or 'cv<K>'")
        if m.startswith("cv") and int(m[2:]) < 2:
            raise InvalidParameter(f"{m}: CV needs at least 2 folds")
        if m not in out:
            out.append(m)
    if not out:
        raise InvalidParameter("no methods given")
    return out


def _folds_of(method):
    return int(method[2:])


@dataclass
class PipelineResult:
    """Per-subject PAV output for one fitted problem."""

    path: EdrPath
    subjects: np.ndarray
    index: np.ndarray  # chosen position on the edr path, per subject
    chosen_r: np.ndarray
    chosen_t: np.ndarray
    predictions: np.ndarray
    bounds: np.ndarray
    seconds: float
    factorizations: int
    mode: str = "algorithm1"

    def selection(self, k) -> PavSelection:
        """Full selection record (schedule, flags) for subject ``k``."""
        return select_tuning(self.path, self.subjects[k], mode=self.mode)

    def selections(self):
        return [self.selection(k) for k in range(len(self.subjects))]


def run_pipeline(problem, grid, subjects, mode="algorithm1"):
    """Fit one ridge path, map it to the edr scale and calibrate every subject.

    ``mode="algorithm1"`` uses the vectorized scan; ``"definition2"``
    evaluates the full pairwise admissible set per subject.
    """
    if mode not in MODES:
        raise InvalidParameter(f"unknown PAV mode {mode!r}")
    if not isinstance(grid, TuningGrid):
        grid = TuningGrid(grid)
    Z = np.atleast_2d(np.asarray(subjects, dtype=float))
    with count_factorizations() as tally:
        start = time.perf_counter()
        path = build_edr_path(ridge_path(svd(problem.X), problem.y, grid), problem)
        if mode == "algorithm1":
            idx, preds, bounds = select_batch(path, Z)
        else:
            sels = [select_tuning(path, z, mode=mode) for z in Z]
            idx = np.array([s.index for s in sels])
            preds = np.array([s.prediction for s in sels])
            bounds = np.array([s.bound for s in sels])
        seconds = time.perf_counter() - start
    return PipelineResult(
        path=path,
        subjects=Z,
        index=idx,
        chosen_r=path.edr_grid[idx],
        chosen_t=path.ridge_grid[idx],
        predictions=preds,
        bounds=bounds,
        seconds=seconds,
        factorizations=tally.count,
        mode=mode,
    )


def run_cv(problem, grid, K, rng):
    """K-fold CV fit; returns (t_cv, coefficients, seconds, factorizations).

    The final fit at the selected t is a direct solve, so the only SVDs are
    the K fold factorizations.
    """
    with count_factorizations() as tally:
        start = time.perf_counter()
        plan = make_folds(problem.n, K, rng=rng)
        t_cv, _ = cv_select(problem, grid, plan)
        beta = ridge_solve(problem.X, problem.y, t_cv)
        seconds = time.perf_counter() - start
    return t_cv, beta, seconds, tally.count


@dataclass
class MethodRecord:
    method: str
    mean_error: float
    sd_error: float
    seconds: float = None
    scaled_runtime: float = None
    factorizations: int = None


@dataclass
class ExperimentReport:
    records: list
    errors: dict  # method -> per-subject errors
    metadata: dict
    predictions: dict = field(default_factory=dict)

    def record(self, method):
        for rec in self.records:
            if rec.method == method:
                return rec
        raise KeyError(method)

    def to_dict(self):
        return {
            "records": [vars(r) for r in self.records],
            "errors": {k: [float(x) for x in v] for k, v in self.errors.items()},
            "predictions": {k: [float(x) for x in v] for k, v in self.predictions.items()},
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            records=[MethodRecord(**r) for r in d["records"]],
            errors={k: np.asarray(v, dtype=float) for k, v in d["errors"].items()},
            metadata=d["metadata"],
            predictions={k: np.asarray(v, dtype=float) for k, v in d.get("predictions", {}).items()},
        )


def _summarize(methods, errors, seconds, factorizations, timing):
    base = seconds.get("pav", seconds[methods[0]]) if timing else None
    records = []
    for m in methods:
        e = np.asarray(errors[m], dtype=float)
        sd = float(np.std(e, ddof=1)) if e.size > 1 else 0.0
        rec = MethodRecord(m, float(np.mean(e)), sd, factorizations=factorizations[m])
        if timing:
            rec.seconds = seconds[m]
            rec.scaled_runtime = seconds[m] / base if base > 0 else math.nan
        records.append(rec)
    return records


def _simulation_rep(config, methods, rep, mode, design=None):
    rng = np.random.default_rng([config.seed, rep])
    if design is None:
        problem, Z, grid = generate_synthetic(config, rng=rng)
    else:
        problem = generate_semisynthetic(design, config.snr, rng=rng)
        Z = rng.uniform(-1.0, 1.0, size=(config.n_test_subjects, problem.p))
        grid = config.grid()
    beta_star = problem.truth.beta
    out = {}
    for m in methods:
        if m == "pav":
            res = run_pipeline(problem, grid, Z, mode=mode)
            est = res.path.estimates[:, res.index]
            err = np.abs(np.einsum("ij,ji->i", Z, beta_star[:, None] - est))
            out[m] = (err, res.seconds, res.factorizations)
        else:
            K = _folds_of(m)
            _, beta, secs, nf = run_cv(problem, grid, K, np.random.default_rng([config.seed, rep, K]))
            out[m] = (np.abs(Z @ (beta_star - beta)), secs, nf)
    return out


def run_simulation_study(config, methods=DEFAULT_METHODS, replications=100, mode="algorithm1",
                         threads=1, timing=True, design=None):
    """Compare PAV and K-fold CV on simulated replications.

    The personalized error is ``|z^T (beta* - beta_hat)|`` for every test
    subject of every replication.  CV applies its single selected t to all
    subjects.  With ``design`` given, the covariates are fixed and only
    coefficients, noise and subjects are simulated.

    Returns
    -------
    ExperimentReport
    """
    methods = parse_methods(methods)
    if replications < 1:
        raise InvalidParameter("replications must be at least 1")
    if mode not in MODES:
        raise InvalidParameter(f"unknown PAV mode {mode!r}")
    threads = max(1, int(threads))
    warmup()

    start = time.perf_counter()
    with threadpool_limits(limits=threads):
        if threads == 1:
            reps = [_simulation_rep(config, methods, r, mode, design) for r in range(replications)]
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                reps = list(pool.map(lambda r: _simulation_rep(config, methods, r, mode, design), range(replications)))
    wall = time.perf_counter() - start

    errors = {m: np.concatenate([rep[m][0] for rep in reps]) for m in methods}
    seconds = {m: float(sum(rep[m][1] for rep in reps)) for m in methods}
    facts = {m: int(round(np.mean([rep[m][2] for rep in reps]))) for m in methods}
    metadata = {
        "kind": "simulation" if design is None else "semisynthetic",
        "config": config.to_dict(),
        "methods": methods,
        "replications": replications,
        "mode": mode,
        "threads": threads,
        "timing": timing,
        "grid": {"count": config.grid_count, "min_log10": config.grid_min_log10, "max_log10": config.grid_max_log10},
        "seeds": {"base": config.seed, "replication_streams": "default_rng([seed, rep])",
                  "fold_streams": "default_rng([seed, rep, K])"},
    }
    if design is not None:
        metadata["design_shape"] = list(as_matrix(design).shape)
    if timing:
        metadata["timing_mode"] = "single-threaded" if threads == 1 else "parallel"
        metadata["wall_seconds"] = wall
    return ExperimentReport(_summarize(methods, errors, seconds, facts, timing), errors, metadata)


def _real_trial(train, x, methods, grid, mode, seed, trial):
    out = {}
    for m in methods:
        if m == "pav":
            res = run_pipeline(train, grid, x[None, :], mode=mode)
            out[m] = (float(res.predictions[0]), res.seconds, res.factorizations)
        else:
            K = _folds_of(m)
            if K > train.n:
                raise InvalidParameter(f"{m} needs at least {K} training samples, have {train.n}")
            _, beta, secs, nf = run_cv(train, grid, K, np.random.default_rng([seed, trial, K]))
            out[m] = (float(x @ beta), secs, nf)
    return out


def run_real_data(problem, mode="in_sample", methods=DEFAULT_METHODS, grid=None, seed=0,
                  pav_mode="algorithm1", threads=1, timing=True):
    """Evaluate ``|y_i - x_i^T beta_hat|`` on data without a known truth.

    ``mode="in_sample"`` fits once on all samples, PAV calibrating each
    subject with ``z = x_i``.  ``mode="leave_one_out"`` refits everything
    (path, mapping, calibration, CV folds) without sample i and predicts y_i.
    """
    methods = parse_methods(methods)
    grid = TuningGrid.logspace() if grid is None else grid
    if not isinstance(grid, TuningGrid):
        grid = TuningGrid(grid)
    X = as_matrix(problem.X)
    y = problem.y
    threads = max(1, int(threads))
    warmup()
    preds = {m: np.empty(problem.n) for m in methods}
    seconds = {m: 0.0 for m in methods}
    facts = {}

    with threadpool_limits(limits=threads):
        if mode == "in_sample":
            for m in methods:
                if m == "pav":
                    res = run_pipeline(problem, grid, X, mode=pav_mode)
                    preds[m][:] = res.predictions
                    seconds[m], facts[m] = res.seconds, res.factorizations
                else:
                    K = _folds_of(m)
                    if K > problem.n:
                        raise InvalidParameter(f"{m} needs at least {K} samples, have {problem.n}")
                    _, beta, secs, nf = run_cv(problem, grid, K, np.random.default_rng([seed, 0, K]))
                    preds[m][:] = X @ beta
                    seconds[m], facts[m] = secs, nf
        elif mode == "leave_one_out":
            if problem.n < 3:
                raise InvalidParameter("leave-one-out needs at least 3 samples")
            jobs = [(problem.drop_row(i), X[i], i) for i in range(problem.n)]

            def trial(job):
                return _real_trial(job[0], job[1], methods, grid, pav_mode, seed, job[2])

            if threads == 1:
                trials = [trial(j) for j in jobs]
            else:
                with ThreadPoolExecutor(max_workers=threads) as pool:
                    trials = list(pool.map(trial, jobs))
            for i, res in enumerate(trials):
                for m in methods:
                    preds[m][i] = res[m][0]
                    seconds[m] += res[m][1]
            facts = {m: int(round(np.mean([res[m][2] for res in trials]))) for m in methods}
        else:
            raise InvalidParameter(f"unknown evaluation mode {mode!r}")

    errors = {m: np.abs(y - preds[m]) for m in methods}
    metadata = {
        "kind": "real_data",
        "mode": mode,
        "methods": methods,
        "pav_mode": pav_mode,
        "seed": seed,
        "threads": threads,
        "timing": timing,
        "n": problem.n,
        "p": problem.p,
        "grid": {"count": len(grid), "min": float(grid.values[0]), "max": float(grid.values[-1])},
        "grid_values": [float(v) for v in grid.values],
    }
    return ExperimentReport(_summarize(methods, errors, seconds, facts, timing), errors, metadata, preds)


def _fmt(v):
    if v is None:
        return ""
    return repr(float(v))


def emit_report(report, path, fmt=None):
    """Write ``report`` as CSV (one row per method) or JSON (everything)."""
    path = Path(path)
    fmt = (fmt or ("json" if path.suffix.lower() == ".json" else "csv")).lower()
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for r in report.records:
                w.writerow([r.method, _fmt(r.mean_error), _fmt(r.sd_error), _fmt(r.seconds), _fmt(r.scaled_runtime)])
    elif fmt == "json":
        with open(path, "w") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        raise InvalidParameter(f"unknown report format {fmt!r}")
    return path


def read_report(path):
    """Inverse of :func:`emit_report`.  CSV reports carry only the summary rows."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        return ExperimentReport.from_dict(json.loads(path.read_text()))
    records = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            records.append(MethodRecord(
                row["method"],
                float(row["mean_error"]),
                float(row["sd_error"]),
                float(row["seconds"]) if row["seconds"] else None,
                float(row["scaled_runtime"]) if row["scaled_runtime"] else None,
            ))
    return ExperimentReport(records, {}, {})


def replay_report(path):
    """Rerun the experiment recorded in a JSON report."""
    meta = ExperimentReport.from_dict(json.loads(Path(path).read_text())).metadata
    kind = meta.get("kind")
    if kind == "simulation":
        return run_simulation_study(
            SimConfig.from_dict(meta["config"]), meta["methods"], meta["replications"],
            mode=meta["mode"], threads=meta["threads"], timing=meta["timing"],
        )
    if kind == "real_data" and "data" in meta:
        X, y, _ = load_matrix(meta["data"], response=meta["response"], normalize=True)
        grid = TuningGrid(meta["grid_values"])
        return run_real_data(
            RegressionProblem(X, y), meta["mode"], meta["methods"], grid=grid, seed=meta["seed"],
            pav_mode=meta["pav_mode"], threads=meta["threads"], timing=meta["timing"],
        )
    raise InvalidParameter(f"report of kind {kind!r} cannot be replayed from metadata alone")
