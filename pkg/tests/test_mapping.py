import warnings

import numpy as np
import pytest

from edr_pav.datagen import RegressionProblem
from edr_pav.exceptions import EmptyPath, ZeroEstimate
from edr_pav.linalg import TuningGrid, ridge_path, svd
from edr_pav.mapping import build_edr_path, edr_objective, kkt_residuals, map_tuning

from conftest import random_problem


def _edr(prob, grid):
    return build_edr_path(ridge_path(svd(prob.X), prob.y, grid), prob)


def test_map_tuning_orthonormal_closed_form(rng):
    Q, _ = np.linalg.qr(rng.normal(size=(6, 6)))
    y = rng.normal(size=6)
    prob = RegressionProblem(Q, y)
    t = 3.0
    beta = Q.T @ y / (1 + t)
    expected = 2 * t * np.linalg.norm(Q.T @ y) / (1 + t)
    assert map_tuning(t, beta, prob) == pytest.approx(expected, rel=1e-12)


def test_two_formulas_agree(rng):
    prob = random_problem(rng, 25, 50)
    grid = TuningGrid.logspace(40, -4, 4)
    path = ridge_path(svd(prob.X), prob.y, grid)
    for i, t in enumerate(grid.values):
        r = map_tuning(t, path.estimates[:, i], prob)
        assert r == pytest.approx(2 * t * np.linalg.norm(path.estimates[:, i]), rel=1e-8)


def test_zero_response_gives_zero_estimate(rng):
    prob = random_problem(rng, 6, 4)
    zero = RegressionProblem(prob.X, np.zeros(6))
    path = ridge_path(svd(zero.X), zero.y, [1.0])
    with pytest.raises(ZeroEstimate):
        map_tuning(1.0, path.estimates[:, 0], zero)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        with pytest.raises(EmptyPath):
            build_edr_path(path, zero)


def test_edr_path_ascending_and_complete(rng):
    prob = random_problem(rng, 20, 40)
    path = _edr(prob, TuningGrid.logspace(60, -3, 3))
    assert len(path) == 60 and not path.dropped
    assert np.all(np.diff(path.edr_grid) > 0)
    assert np.all(np.diff(path.ridge_grid) > 0)


def test_kkt_certificate(rng):
    prob = random_problem(rng, 30, 70)
    path = _edr(prob, TuningGrid.logspace(80))
    assert np.all(kkt_residuals(path, prob) <= 1e-6 * path.edr_grid)


def test_estimate_minimizes_edr_objective(rng):
    prob = random_problem(rng, 15, 25)
    path = _edr(prob, TuningGrid.logspace(10, -2, 2))
    for i in range(len(path)):
        b, r = path.estimates[:, i], path.edr_grid[i]
        f0 = edr_objective(b, r, prob)
        for _ in range(20):
            d = rng.normal(size=b.size)
            d *= 1e-3 * np.linalg.norm(b) / np.linalg.norm(d)
            assert edr_objective(b + d, r, prob) >= f0 - 1e-12 * abs(f0)


def test_duplicate_r_keeps_smallest_t(rng):
    prob = random_problem(rng, 10, 5)
    grid = TuningGrid([1.0, 1.0, 2.0])
    with pytest.warns(RuntimeWarning, match="dropped"):
        path = _edr(prob, grid)
    assert len(path) == 2
    assert path.ridge_grid.tolist() == [1.0, 2.0]
    assert any("duplicate" in d for d in path.dropped)


def test_ridge_for_roundtrip(rng):
    prob = random_problem(rng, 10, 20)
    path = _edr(prob, TuningGrid.logspace(5, -1, 1))
    for r, t in zip(path.edr_grid, path.ridge_grid):
        assert path.ridge_for(r) == t
