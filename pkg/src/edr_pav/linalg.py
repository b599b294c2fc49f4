"""Dense linear algebra: column normalization, SVD and ridge solution paths.

The ridge path is computed from a single SVD of the design,

    beta(t) = V diag(d / (d**2 + t)) U^T y,

so every grid point after the first costs one small matrix product.
"""

import threading
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    EmptyGrid,
    InvalidParameter,
    NonpositiveTuning,
    NumericalFailure,
    ZeroColumn,
)

ZERO_COLUMN_TOL = 1e-14
# relative cut-off below which singular values are treated as exact zeros
RANK_RTOL = 1e-12

_counter_lock = threading.Lock()
_factorizations = 0


def factorization_count():
    """Total number of design-matrix SVDs performed in this process."""
    return _factorizations


class _FactorizationTally:
    def __init__(self):
        self._start = factorization_count()
        self._stop = None

    @property
    def count(self):
        stop = factorization_count() if self._stop is None else self._stop
        return stop - self._start


@contextmanager
def count_factorizations():
    """Count the SVDs performed inside a ``with`` block.

    >>> with count_factorizations() as tally:
    ...     _ = svd(np.eye(3))
    >>> tally.count
    1
    """
    tally = _FactorizationTally()
    try:
        yield tally
    finally:
        tally._stop = factorization_count()


def _readonly(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


def as_matrix(X):
    """Return the raw 2-d float array behind ``X`` (array-like or DesignMatrix)."""
    if isinstance(X, DesignMatrix):
        return X.values
    return np.asarray(X, dtype=float)


@dataclass(frozen=True)
class DesignMatrix:
    """Design matrix (n samples x p covariates) plus original column norms."""

    values: np.ndarray
    column_norms: np.ndarray

    def __post_init__(self):
        values = _readonly(self.values)
        norms = _readonly(self.column_norms)
        if values.ndim != 2 or min(values.shape) < 1:
            raise InvalidParameter(f"design must be a nonempty 2-d array, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InvalidParameter("design contains non-finite entries")
        if norms.shape != (values.shape[1],):
            raise InvalidParameter("column_norms must have one entry per column")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "column_norms", norms)

    @property
    def shape(self):
        return self.values.shape

    @classmethod
    def unnormalized(cls, X):
        X = np.asarray(X, dtype=float)
        return cls(X, np.ones(X.shape[1]) if X.ndim == 2 else np.ones(0))

    def take_rows(self, rows):
        """Row subset; columns are not renormalized."""
        return DesignMatrix(self.values[rows], self.column_norms)


def normalize_columns(X):
    """Scale every column of ``X`` to unit Euclidean norm.

    Raises
    ------
    ZeroColumn
        If some column has norm below 1e-14.
    """
    X = np.asarray(as_matrix(X), dtype=float)
    if X.ndim != 2 or min(X.shape) < 1:
        raise InvalidParameter(f"expected a nonempty 2-d array, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InvalidParameter("design contains non-finite entries")
    norms = np.linalg.norm(X, axis=0)
    bad = np.flatnonzero(norms < ZERO_COLUMN_TOL)
    if bad.size:
        raise ZeroColumn(f"column(s) {bad.tolist()} have zero norm; cannot normalize")
    return DesignMatrix(X / norms, norms)


@dataclass(frozen=True)
class TuningGrid:
    """Candidate tuning parameters, stored ascending.

    ``scale`` records whether the values are ridge (``"ridge"``, t) or
    euclidean-distance-ridge (``"edr"``, r) parameters.
    """

    values: np.ndarray
    scale: str = "ridge"

    def __post_init__(self):
        values = np.sort(np.asarray(self.values, dtype=float).ravel())
        if values.size == 0:
            raise EmptyGrid("tuning grid is empty")
        if not np.all(np.isfinite(values)):
            raise InvalidParameter("tuning grid contains non-finite values")
        if self.scale not in ("ridge", "edr"):
            raise InvalidParameter(f"unknown grid scale {self.scale!r}")
        object.__setattr__(self, "values", _readonly(values))

    def __len__(self):
        return self.values.size

    @classmethod
    def logspace(cls, count=300, min_log10=-5.0, max_log10=5.0):
        """``count`` log-equispaced ridge parameters from 10**min_log10 to 10**max_log10."""
        if count < 1:
            raise EmptyGrid("grid count must be positive")
        if count == 1:
            return cls(np.array([10.0**min_log10]))
        return cls(np.logspace(min_log10, max_log10, count))


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD ``X = U diag(d) V^T`` with d nonincreasing."""

    U: np.ndarray
    singular_values: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        for name in ("U", "singular_values", "V"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))

    @property
    def rank(self):
        d = self.singular_values
        if d.size == 0 or d[0] == 0:
            return 0
        return int(np.count_nonzero(d > RANK_RTOL * d[0]))

    def reconstruct(self):
        return (self.U * self.singular_values) @ self.V.T


def svd(X):
    """Thin singular value decomposition of the design.

    Every call increments the process-wide factorization counter.
    """
    global _factorizations
    A = as_matrix(X)
    if A.ndim != 2 or min(A.shape) < 1 or not np.all(np.isfinite(A)):
        raise InvalidParameter("svd needs a nonempty finite 2-d array")
    try:
        U, d, Vt = np.linalg.svd(A, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}") from exc
    with _counter_lock:
        _factorizations += 1
    return SvdFactors(U, d, Vt.T)


@dataclass(frozen=True)
class RidgePath:
    """Ridge estimates for every grid value; column ``i`` is beta(t_i)."""

    factors: SvdFactors
    grid: TuningGrid
    estimates: np.ndarray
    y: np.ndarray = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "estimates", _readonly(self.estimates))
        if self.y is not None:
            object.__setattr__(self, "y", _readonly(self.y))

    def __len__(self):
        return len(self.grid)

    @property
    def t(self):
        return self.grid.values


def ridge_coefficients(factors, y, t):
    """Ridge estimates for an array of tuning values without building a RidgePath.

    Returns a ``(p, len(t))`` array.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    k = factors.rank
    d = factors.singular_values[:k]
    Uty = factors.U[:, :k].T @ y
    shrink = d[:, None] / (d[:, None] ** 2 + t[None, :])
    return factors.V[:, :k] @ (shrink * Uty[:, None])


def ridge_path(factors, y, grid):
    """Ridge solution path over ``grid`` reusing one factorization.

    Parameters
    ----------
    factors : SvdFactors
        Factorization of the (already normalized) design.
    y : array of shape (n,)
    grid : TuningGrid or array-like of positive ridge parameters

    Returns
    -------
    RidgePath
    """
    if not isinstance(grid, TuningGrid):
        grid = TuningGrid(grid)
    if grid.scale != "ridge":
        raise InvalidParameter("ridge_path expects a ridge-scale grid")
    if np.any(grid.values <= 0):
        raise NonpositiveTuning("ridge tuning parameters must be strictly positive")
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] != factors.U.shape[0]:
        raise InvalidParameter(f"response has {y.shape[0]} entries, design has {factors.U.shape[0]} rows")
    estimates = ridge_coefficients(factors, y, grid.values)
    if not np.all(np.isfinite(estimates)):
        raise NumericalFailure("ridge path produced non-finite estimates")
    return RidgePath(factors, grid, estimates, y)


def normal_equation_residuals(X, y, path):
    """Relative residuals ||(X^T X + t I) beta(t) - X^T y|| / ||X^T y|| per grid point."""
    A = as_matrix(X)
    Xty = A.T @ y
    B = path.estimates
    R = A.T @ (A @ B) + B * path.t[None, :] - Xty[:, None]
    return np.linalg.norm(R, axis=0) / np.linalg.norm(Xty)


def ridge_solve(X, y, t):
    """Ridge estimate for a single ``t`` by a direct linear solve (no SVD).

    Uses the n x n dual system when p > n.
    """
    if not t > 0:
        raise NonpositiveTuning("ridge tuning must be positive")
    A = as_matrix(X)
    y = np.asarray(y, dtype=float)
    n, p = A.shape
    try:
        if p > n:
            G = A @ A.T
            G[np.diag_indices(n)] += t
            return A.T @ np.linalg.solve(G, y)
        G = A.T @ A
        G[np.diag_indices(p)] += t
        return np.linalg.solve(G, A.T @ y)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"ridge solve failed: {exc}") from exc
