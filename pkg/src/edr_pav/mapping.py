"""Euclidean-distance ridge (edr) through the ridge/edr tuning bijection.

The edr estimator minimizes ``||y - X b||^2 + r ||b||_2``.  Every ridge
estimate beta(t) is also an edr estimate for

    r = phi(t) = || 2 X^T (y - X beta(t)) ||_2  (= 2 t ||beta(t)||_2),

so the edr path is read off a ridge path without any extra optimization.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import EmptyPath, InvalidParameter, ZeroEstimate
from .linalg import RidgePath, as_matrix

ZERO_ESTIMATE_TOL = 1e-14


@dataclass(frozen=True)
class EdrPath:
    """Edr solution path.

    ``estimates[:, i]`` solves the edr program at ``edr_grid[i]`` and the ridge
    program at ``ridge_grid[i]``.  Both grids are ascending.
    """

    ridge_grid: np.ndarray
    edr_grid: np.ndarray
    estimates: np.ndarray
    dropped: tuple = field(default=())

    def __len__(self):
        return self.edr_grid.size

    def ridge_for(self, r):
        """Ridge counterpart of an edr tuning value on this path."""
        idx = np.flatnonzero(self.edr_grid == r)
        if idx.size == 0:
            raise InvalidParameter(f"r={r!r} is not on the edr grid")
        return float(self.ridge_grid[idx[0]])


def _problem_arrays(problem):
    return as_matrix(problem.X), np.asarray(problem.y, dtype=float)


def map_tuning(t, ridge_estimate, problem):
    """Edr tuning parameter that reproduces the ridge estimate at ``t``.

    Parameters
    ----------
    t : float
        Ridge tuning parameter (> 0).
    ridge_estimate : array of shape (p,)
        ``beta_ridge(t)`` for the problem's data.
    problem : object with ``X`` and ``y``

    Raises
    ------
    ZeroEstimate
        If the estimate is numerically zero (the mapping degenerates).
    """
    if not t > 0:
        raise InvalidParameter("ridge tuning must be positive")
    beta = np.asarray(ridge_estimate, dtype=float)
    if np.linalg.norm(beta) < ZERO_ESTIMATE_TOL:
        raise ZeroEstimate(f"ridge estimate at t={t!r} is zero; edr tuning undefined")
    X, y = _problem_arrays(problem)
    return float(np.linalg.norm(2.0 * X.T @ (y - X @ beta)))


def build_edr_path(path: RidgePath, problem) -> EdrPath:
    """Map every point of a ridge path to the edr scale.

    Zero estimates are dropped (with a warning, recorded in ``dropped``), and
    of several ridge values mapping to the same r only the smallest t is kept.
    """
    X, y = _problem_arrays(problem)
    B = path.estimates
    t = path.t
    r = np.linalg.norm(2.0 * X.T @ (y[:, None] - X @ B), axis=0)
    norms = np.linalg.norm(B, axis=0)

    keep = norms >= ZERO_ESTIMATE_TOL
    dropped = [f"t={ti!r}: zero estimate" for ti in t[~keep]]
    # grid is ascending in t, so the first occurrence of an r value has the smallest t
    _, first = np.unique(r[keep], return_index=True)
    idx = np.flatnonzero(keep)
    retained = np.sort(idx[first])
    for i in np.setdiff1d(idx, retained):
        dropped.append(f"t={t[i]!r}: duplicate r={r[i]!r}")
    if dropped:
        warnings.warn(f"{len(dropped)} grid point(s) dropped from edr path", RuntimeWarning, stacklevel=2)
    if retained.size == 0:
        raise EmptyPath("every grid point was dropped while mapping to the edr scale")
    estimates = B if retained.size == B.shape[1] else B[:, retained]
    return EdrPath(
        ridge_grid=t[retained],
        edr_grid=r[retained],
        estimates=estimates,
        dropped=tuple(dropped),
    )


def edr_objective(beta, r, problem):
    """Value of ``||y - X beta||^2 + r ||beta||_2``."""
    if r < 0:
        raise InvalidParameter("edr tuning must be nonnegative")
    X, y = _problem_arrays(problem)
    beta = np.asarray(beta, dtype=float)
    resid = y - X @ beta
    return float(resid @ resid + r * np.linalg.norm(beta))


def kkt_residuals(edr_path, problem):
    """Edr stationarity residual ``||2X^T(y - X b) - r b/||b|| ||`` per grid point."""
    X, y = _problem_arrays(problem)
    B = edr_path.estimates
    grad = 2.0 * X.T @ (y[:, None] - X @ B)
    sub = edr_path.edr_grid[None, :] * B / np.linalg.norm(B, axis=0)[None, :]
    return np.linalg.norm(grad - sub, axis=0)
