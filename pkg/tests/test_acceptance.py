"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Tolerances are the stated ones.  Accuracy-direction criteria are asserted as
written even where the faithful protocol does not reach them.
"""

import subprocess
import sys
import time

import numpy as np
import pytest

from edr_pav.calibration import gaussian_bound, oracle_tuning, select_tuning, sort_schedule
from edr_pav.datagen import SimConfig, _draw_design, generate_synthetic
from edr_pav.exceptions import NoAdmissiblePoint
from edr_pav.experiments import run_cv, run_pipeline, run_simulation_study
from edr_pav.linalg import TuningGrid, count_factorizations, normalize_columns, ridge_path, ridge_solve, svd
from edr_pav.mapping import build_edr_path, kkt_residuals

from conftest import ACCEPTANCE_LINES, orthonormal_problem, random_problem
from reference import pav_algorithm1, pav_definition2


def verdict(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def _random_problems(seed=101, count=20):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n, p = int(rng.integers(5, 61)), int(rng.integers(2, 121))
        yield random_problem(rng, n, p)


GRID50 = TuningGrid.logspace(50)


def test_criterion_01_ridge_path_correctness():
    start = time.perf_counter()
    worst = 0.0
    for prob in _random_problems():
        path = ridge_path(svd(prob.X), prob.y, GRID50)
        for i, t in enumerate(GRID50.values):
            direct = ridge_solve(prob.X, prob.y, t)
            worst = max(worst, np.linalg.norm(path.estimates[:, i] - direct) / np.linalg.norm(direct))
    secs = time.perf_counter() - start
    verdict(1, worst <= 1e-8 and secs < 10, f"max relative error {worst:.2e} (<= 1e-8), {secs:.2f}s (< 10s)")


def test_criterion_02_bijection_and_kkt():
    worst_kkt = worst_phi = 0.0
    for prob in _random_problems():
        rp = ridge_path(svd(prob.X), prob.y, GRID50)
        path = build_edr_path(rp, prob)
        assert len(path) == len(GRID50)
        worst_kkt = max(worst_kkt, float(np.max(kkt_residuals(path, prob) / path.edr_grid)))
        phi = 2 * path.ridge_grid * np.linalg.norm(path.estimates, axis=0)
        worst_phi = max(worst_phi, float(np.max(np.abs(path.edr_grid - phi) / phi)))
    verdict(2, worst_kkt <= 1e-6 and worst_phi <= 1e-8,
            f"KKT residual / r {worst_kkt:.2e} (<= 1e-6), phi mismatch {worst_phi:.2e} (<= 1e-8)")


def _orthonormal_trials(trials=100, n=30, seed=303):
    rng = np.random.default_rng(seed)
    grid = TuningGrid.logspace()
    for _ in range(trials):
        prob = orthonormal_problem(rng, n)
        path = build_edr_path(ridge_path(svd(prob.X), prob.y, grid), prob)
        yield prob, path, rng.uniform(-1, 1, n)


@pytest.fixture(scope="module")
def orthonormal_trials():
    return list(_orthonormal_trials())


def test_criterion_03_oracle_inequality(orthonormal_trials):
    violations = checked = 0
    for prob, path, z in orthonormal_trials:
        nz = np.linalg.norm(z)
        w = abs(float((prob.X.values @ z) @ prob.truth.u))
        sched = sort_schedule(path, z)
        cr = np.empty(len(path))
        cr[sched.order] = sched.cr
        admissible = cr * nz >= 2 * w
        err = np.abs(z @ (prob.truth.beta[:, None] - path.estimates))
        checked += int(admissible.sum())
        violations += int(np.sum(err[admissible] > cr[admissible] * nz + 1e-10))
    verdict(3, violations == 0 and checked > 0, f"{violations} violations over {checked} admissible grid points")


def test_criterion_04_optimality_factor(orthonormal_trials):
    violations = evaluated = 0
    worst = 0.0
    for prob, path, z in orthonormal_trials:
        try:
            d = oracle_tuning(path, z, prob)
        except NoAdmissiblePoint:
            continue
        evaluated += 1
        worst = max(worst, d.optimality_ratio)
        violations += d.selected_error > 3 * d.oracle_bound
    verdict(4, violations == 0 and evaluated > 0,
            f"{violations} violations in {evaluated} trials with a nonempty oracle set, worst ratio {worst:.3f} (<= 3)")


def test_criterion_05_brute_force_equivalence():
    rng = np.random.default_rng(505)
    mismatches = 0
    for _ in range(200):
        n, p, m = int(rng.integers(4, 30)), int(rng.integers(2, 50)), int(rng.integers(1, 51))
        prob = random_problem(rng, n, p)
        path = build_edr_path(ridge_path(svd(prob.X), prob.y, TuningGrid.logspace(m)), prob)
        z = rng.uniform(-1, 1, p)
        mismatches += select_tuning(path, z, "algorithm1").index != pav_algorithm1(path, z)
        mismatches += select_tuning(path, z, "definition2").index != pav_definition2(path, z)
    verdict(5, mismatches == 0, f"{mismatches} mismatches in 200 instances x 2 modes")


def test_criterion_06_gaussian_coverage():
    rng = np.random.default_rng(606)
    n, sigma, delta, trials = 30, 1.0, 0.1, 500
    grid = TuningGrid.logspace()
    covered = 0
    for _ in range(trials):
        prob = orthonormal_problem(rng, n, sigma)
        path = build_edr_path(ridge_path(svd(prob.X), prob.y, grid), prob)
        z = rng.uniform(-1, 1, n)
        sel = select_tuning(path, z)
        err = abs(float(z @ (prob.truth.beta - path.estimates[:, sel.index])))
        covered += err <= gaussian_bound(sigma, n, delta, np.linalg.norm(z))
    rate = covered / trials
    verdict(6, rate >= 0.86, f"coverage {rate:.3f} over {trials} trials (>= 0.86)")


@pytest.fixture(scope="module")
def table1():
    start = time.perf_counter()
    rep = run_simulation_study(SimConfig(n=50, p=100, seed=0), ("pav", "cv5", "cv10"), 100, timing=True, threads=1)
    return rep, time.perf_counter() - start


def test_criterion_07_table1_direction(table1):
    rep, secs = table1
    e = {m: rep.record(m).mean_error for m in ("pav", "cv5", "cv10")}
    t = {m: rep.record(m).seconds for m in ("pav", "cv5", "cv10")}
    accuracy = e["pav"] < e["cv5"] and e["pav"] < e["cv10"]
    speed = t["pav"] < t["cv5"] and t["pav"] < t["cv10"]
    verdict(7, accuracy and speed and secs < 300,
            f"mean error pav {e['pav']:.4f} cv5 {e['cv5']:.4f} cv10 {e['cv10']:.4f} "
            f"[{'ok' if accuracy else 'pav not lowest'}]; "
            f"seconds pav {t['pav']:.3f} cv5 {t['cv5']:.3f} cv10 {t['cv10']:.3f} "
            f"[{'ok' if speed else 'pav not fastest'}]; total {secs:.1f}s (< 300s)")


def test_criterion_08_factorization_counting(table1):
    rep, _ = table1
    prob, Z, grid = generate_synthetic(SimConfig(seed=8))
    counts = {"pav": run_pipeline(prob, grid, Z).factorizations}
    for K in (5, 10):
        with count_factorizations() as tally:
            run_cv(prob, grid, K, np.random.default_rng(K))
        counts[f"cv{K}"] = tally.count
    reported = {m: rep.record(m).factorizations for m in ("pav", "cv5", "cv10")}
    ok = counts == reported == {"pav": 1, "cv5": 5, "cv10": 10}
    verdict(8, ok, f"instrumented {counts}, per-replication report {reported}")


def test_criterion_09_determinism(tmp_path):
    outs = []
    for name in ("a.csv", "b.csv"):
        path = tmp_path / name
        subprocess.run([sys.executable, "-m", "edr_pav.cli", "simulate", "--seed", "17", "--reps", "20",
                        "--out", str(path)], check=True, capture_output=True)
        outs.append(path.read_bytes())
    verdict(9, outs[0] == outs[1] and len(outs[0]) > 0, f"{len(outs[0])}-byte CSV reports identical: {outs[0] == outs[1]}")


def test_criterion_10_semisynthetic_direction():
    rng = np.random.default_rng(1010)
    design = normalize_columns(_draw_design(rng, 26, 1936, 10.0, False))
    cfg = SimConfig(n=26, p=1936, seed=10)
    rep = run_simulation_study(cfg, ("pav", "cv5", "cv10"), 100, timing=False, design=design)
    e = {m: rep.record(m).mean_error for m in ("pav", "cv5", "cv10")}
    verdict(10, e["pav"] < e["cv5"] and e["pav"] < e["cv10"],
            f"mean error pav {e['pav']:.4f} cv5 {e['cv5']:.4f} cv10 {e['cv10']:.4f} over 100 replications")
