"""K-fold cross-validation baseline for the ridge tuning parameter."""

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidParameter
from .linalg import TuningGrid, as_matrix, ridge_coefficients, svd


@dataclass(frozen=True)
class FoldPlan:
    """Balanced partition of ``n`` samples; ``assignments[i]`` is the fold (0..K-1) of sample i."""

    K: int
    assignments: np.ndarray
    seed: int = None

    def __post_init__(self):
        a = np.asarray(self.assignments, dtype=int)
        if self.K < 2:
            raise InvalidParameter("K-fold CV needs K >= 2")
        sizes = np.bincount(a, minlength=self.K)
        if a.min() < 0 or sizes.size != self.K or sizes.min() < 1:
            raise InvalidParameter("every fold must be nonempty and labels must lie in 0..K-1")
        a.flags.writeable = False
        object.__setattr__(self, "assignments", a)

    @property
    def n(self):
        return self.assignments.size

    def fold_sizes(self):
        return np.bincount(self.assignments, minlength=self.K)

    def split(self, k):
        """(train indices, held-out indices) for fold ``k``."""
        held = self.assignments == k
        return np.flatnonzero(~held), np.flatnonzero(held)


def make_folds(n, K, seed=None, rng=None):
    if not 2 <= K:
        raise InvalidParameter(f"K must be at least 2, got {K}")
    if K > n:
        raise InvalidParameter(f"cannot split {n} samples into {K} folds")
    rng = np.random.default_rng(seed) if rng is None else rng
    labels = np.arange(n) % K
    return FoldPlan(K, rng.permutation(labels), seed)


def fold_errors(problem, grid, plan):
    """Held-out mean squared error, shape (K, m): one row per fold.

    Each fold factorizes its training design once and reuses it for the grid.
    """
    if not isinstance(grid, TuningGrid):
        grid = TuningGrid(grid)
    X = as_matrix(problem.X)
    y = np.asarray(problem.y, dtype=float)
    if plan.n != X.shape[0]:
        raise InvalidParameter("fold plan size does not match the number of samples")
    errs = np.empty((plan.K, len(grid)))
    for k in range(plan.K):
        train, held = plan.split(k)
        if train.size < 1 or held.size < 1:
            raise InvalidParameter(f"fold {k} leaves an empty training or validation set")
        B = ridge_coefficients(svd(X[train]), y[train], grid.values)
        resid = y[held, None] - X[held] @ B
        errs[k] = np.mean(resid**2, axis=0)
    return errs


def cv_select(problem, grid, plan):
    """Ridge tuning parameter with the lowest fold-averaged held-out MSE.

    Returns
    -------
    t_cv : float
        Ties go to the smaller t.
    mean_errors : ndarray of shape (m,)
    """
    if not isinstance(grid, TuningGrid):
        grid = TuningGrid(grid)
    mean_errors = fold_errors(problem, grid, plan).mean(axis=0)
    return float(grid.values[np.argmin(mean_errors)]), mean_errors
