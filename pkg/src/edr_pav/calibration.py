"""Personalized adaptive validation (PAV) for the edr estimator.

For a subject with covariates ``z`` every point of an edr path gets the
bound ``c_z(r) * r * ||z||``, where ``c_z(r)`` is the absolute cosine between
``z`` and the estimate.  Points are ordered by that bound and a point is
accepted when its prediction stays within the summed bounds of every point
above it in the ordering.  The selected tuning parameter is the lowest
accepted point reached by scanning down from the top.
"""

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .exceptions import EmptyPath, InvalidParameter, NoAdmissiblePoint, ZeroEstimate
from .linalg import as_matrix
from .mapping import ZERO_ESTIMATE_TOL, EdrPath

MODES = ("algorithm1", "definition2")


@dataclass(frozen=True)
class SubjectQuery:
    z: np.ndarray
    norm_z: float

    @classmethod
    def from_array(cls, z):
        if isinstance(z, SubjectQuery):
            return z
        z = np.asarray(z, dtype=float).ravel()
        if z.size == 0 or not np.all(np.isfinite(z)):
            raise InvalidParameter("subject vector must be nonempty and finite")
        norm_z = float(np.linalg.norm(z))
        if norm_z <= 1e-14:
            raise InvalidParameter("subject vector has zero norm")
        return cls(z, norm_z)


def correlation_factor(z, estimate):
    """Absolute cosine ``|z^T b| / (||z|| ||b||)``, clamped to [0, 1]."""
    q = SubjectQuery.from_array(z)
    b = np.asarray(estimate, dtype=float)
    nb = np.linalg.norm(b)
    if nb < ZERO_ESTIMATE_TOL:
        raise ZeroEstimate("correlation factor undefined for a zero estimate")
    return float(min(1.0, abs(q.z @ b) / (q.norm_z * nb)))


@dataclass(frozen=True)
class Schedule:
    """Path points for one subject, sorted ascending by ``c_z(r) * r``.

    All arrays are in schedule order; ``order[k]`` is the path index of the
    k-th scheduled point.
    """

    order: np.ndarray
    r: np.ndarray
    c: np.ndarray
    cr: np.ndarray
    proj: np.ndarray  # z^T beta(r)
    norm_z: float

    def __len__(self):
        return self.order.size

    def test(self, i, j):
        """Pairwise test between schedule positions ``i`` and ``j`` (1 = pass)."""
        stat = abs(self.proj[i] - self.proj[j]) - (self.cr[i] + self.cr[j]) * self.norm_z
        return int(stat <= 0)

    def pass_matrix(self):
        """All pairwise tests at once; entry (i, j) equals ``test(i, j)``."""
        a, cr = self.proj, self.cr
        stat = np.abs(a[:, None] - a[None, :]) - (cr[:, None] + cr[None, :]) * self.norm_z
        return stat <= 0

    def as_table(self):
        """``(m, 3)`` array of rows ``(r, c_z(r), c_z(r) * r)``."""
        return np.column_stack([self.r, self.c, self.cr])


def _factors(path, q):
    proj = q.z @ path.estimates
    norms = np.linalg.norm(path.estimates, axis=0)
    c = np.minimum(1.0, np.abs(proj) / (q.norm_z * norms))
    return proj, c


def sort_schedule(path: EdrPath, z) -> Schedule:
    """Order path points by ``c_z(r) * r``; ties go to the smaller r."""
    if len(path) == 0:
        raise EmptyPath("edr path is empty")
    q = SubjectQuery.from_array(z)
    if q.z.size != path.estimates.shape[0]:
        raise InvalidParameter(f"subject has {q.z.size} covariates, path has {path.estimates.shape[0]}")
    proj, c = _factors(path, q)
    cr = c * path.edr_grid
    # edr_grid is ascending, so a stable sort breaks ties by smaller r
    order = np.argsort(cr, kind="stable")
    return Schedule(order, path.edr_grid[order], c[order], cr[order], proj[order], q.norm_z)


def pairwise_test(i, j, path, z):
    """Pairwise admissibility test between schedule positions ``i`` and ``j``."""
    sched = z if isinstance(z, Schedule) else sort_schedule(path, z)
    return sched.test(i, j)


@dataclass(frozen=True)
class PavSelection:
    chosen_r: float
    chosen_t: float
    index: int  # position on the edr path
    position: int  # position in the schedule
    schedule: np.ndarray  # rows (r, c_z(r), c_z(r) * r), ascending in the last column
    order: np.ndarray
    admissible_flags: np.ndarray
    prediction: float
    bound: float
    mode: str = "algorithm1"


def _scan(s_hat):
    """Lowest position reached scanning down from the top while tests pass."""
    i = s_hat.size - 1
    while i > 0 and s_hat[i]:
        i -= 1
    # stopped on a failing position: the last passing one is just above it
    return i if s_hat[i] else i + 1


def select_tuning(path: EdrPath, z, mode="algorithm1") -> PavSelection:
    """Select a personalized edr tuning parameter for subject ``z``.

    Parameters
    ----------
    path : EdrPath
    z : array of shape (p,) or SubjectQuery
    mode : {"algorithm1", "definition2"}
        ``"algorithm1"`` scans the per-point flags ``s_i`` (all tests between
        position i and positions above it) from the top and stops at the first
        failure.  ``"definition2"`` builds the admissible set from all pairs
        above each point and takes the minimizer of the bound over it.  Both
        return the same point; the second one is kept for validation.
    """
    if mode not in MODES:
        raise InvalidParameter(f"unknown PAV mode {mode!r}; expected one of {MODES}")
    sched = sort_schedule(path, z)
    m = len(sched)
    P = sched.pass_matrix()
    upper = np.triu(np.ones((m, m), dtype=bool))
    s_hat = np.all(P | ~upper, axis=1)
    if mode == "algorithm1":
        pos = _scan(s_hat)
    else:
        # admissible iff every pair among positions >= i passes
        admissible = np.zeros(m, dtype=bool)
        ok = True
        for i in range(m - 1, -1, -1):
            ok = ok and bool(s_hat[i])
            admissible[i] = ok
        candidates = np.flatnonzero(admissible)
        pos = int(candidates[np.argmin(sched.cr[candidates])])
    idx = int(sched.order[pos])
    return PavSelection(
        chosen_r=float(path.edr_grid[idx]),
        chosen_t=float(path.ridge_grid[idx]),
        index=idx,
        position=pos,
        schedule=sched.as_table(),
        order=sched.order,
        admissible_flags=s_hat.astype(np.int8),
        prediction=float(sched.proj[pos]),
        bound=float(sched.cr[pos] * sched.norm_z),
        mode=mode,
    )


@njit(cache=True)
def _scan_subjects(A, norm_z, scale, r):
    S, m = A.shape
    chosen = np.empty(S, np.int64)
    bound = np.empty(S)
    cr = np.empty(m)
    for s in range(S):
        nz = norm_z[s]
        for i in range(m):
            c = abs(A[s, i]) / (nz * scale[i])
            cr[i] = min(c, 1.0) * r[i]
        order = np.argsort(cr, kind="mergesort")
        j = order[m - 1]
        b = cr[j] * nz
        min_hi = A[s, j] + b
        max_lo = A[s, j] - b
        pos = 0
        for k in range(m - 2, -1, -1):
            j = order[k]
            b = cr[j] * nz
            a = A[s, j]
            if a - b > min_hi or a + b < max_lo:
                pos = k + 1
                break
            min_hi = min(min_hi, a + b)
            max_lo = max(max_lo, a - b)
        chosen[s] = order[pos]
        bound[s] = cr[order[pos]] * nz
    return chosen, bound


def select_batch(path: EdrPath, Z):
    """PAV selection for many subjects at once (rows of ``Z``).

    Position i fails iff ``a_i - b_i`` exceeds ``min(a_j + b_j)`` or
    ``a_i + b_i`` falls below ``max(a_j - b_j)`` over positions j above it
    (``a = z^T beta``, ``b = c_z(r) r ||z||``), so running extremes make the
    downward scan O(m) per subject.

    Returns
    -------
    index : ndarray of int
        Chosen position on the edr path for each subject.
    prediction : ndarray
        ``z^T beta(r_hat)``.
    bound : ndarray
        ``c_z(r_hat) r_hat ||z||``.
    """
    if len(path) == 0:
        raise EmptyPath("edr path is empty")
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if Z.shape[1] != path.estimates.shape[0]:
        raise InvalidParameter(f"subjects have {Z.shape[1]} covariates, path has {path.estimates.shape[0]}")
    norm_z = np.linalg.norm(Z, axis=1)
    if np.any(norm_z <= 1e-14):
        raise InvalidParameter("subject vectors must have nonzero norm")
    A = Z @ path.estimates
    idx, bound = _scan_subjects(A, norm_z, np.linalg.norm(path.estimates, axis=0), np.asarray(path.edr_grid))
    return idx, A[np.arange(len(Z)), idx], bound


def warmup():
    """Compile the batch kernel ahead of timed runs."""
    _scan_subjects(np.ones((1, 2)), np.ones(1), np.ones(2), np.array([1.0, 2.0]))


@dataclass(frozen=True)
class OracleDiagnostics:
    r_oracle: float
    t_oracle: float
    index: int
    lower_bound_rhs: np.ndarray  # per path point, path order
    admissible: np.ndarray
    oracle_bound: float  # c_z(r_o) * r_o * ||z||
    selected_error: float
    optimality_ratio: float


def oracle_tuning(path: EdrPath, z, problem, selection=None) -> OracleDiagnostics:
    """Oracle tuning parameter for ``z`` using the problem's true noise.

    A path point is admissible when ``r >= 2|(Xz)^T u| / (c_z(r) ||z||)``;
    the oracle minimizes ``c_z(r) * r`` over admissible points (ties to the
    smaller r).  ``selection`` (default: a fresh PAV selection) is scored
    against the oracle bound.
    """
    truth = getattr(problem, "truth", None)
    if truth is None:
        raise InvalidParameter("oracle diagnostics need a problem with known truth")
    q = SubjectQuery.from_array(z)
    X = as_matrix(problem.X)
    w = abs(float((X @ q.z) @ truth.u))
    proj, c = _factors(path, q)
    r = path.edr_grid
    with np.errstate(divide="ignore", invalid="ignore"):
        rhs = np.where(w == 0, 0.0, 2.0 * w / (c * q.norm_z))
    # multiplied form keeps c = 0 well defined
    admissible = c * r * q.norm_z >= 2.0 * w
    if not admissible.any():
        raise NoAdmissiblePoint("no grid point satisfies the oracle lower bound; extend the grid")
    cand = np.flatnonzero(admissible)
    cr = c[cand] * r[cand]
    best = cand[np.flatnonzero(cr == cr.min())[0]]  # r ascending: first is smallest
    if selection is None:
        selection = select_tuning(path, q)
    err = abs(float(q.z @ (truth.beta - path.estimates[:, selection.index])))
    oracle_bound = float(c[best] * r[best] * q.norm_z)
    ratio = err / oracle_bound if oracle_bound > 0 else (0.0 if err == 0 else math.inf)
    return OracleDiagnostics(
        r_oracle=float(r[best]),
        t_oracle=float(path.ridge_grid[best]),
        index=int(best),
        lower_bound_rhs=rhs,
        admissible=admissible,
        oracle_bound=oracle_bound,
        selected_error=err,
        optimality_ratio=ratio,
    )


def gaussian_bound(sigma, n, delta, norm_z):
    """High-probability PAV error bound ``3 sigma sqrt(8 log(2/delta) / n) ||z||``
    under orthonormal design and noise N(0, sigma^2 I / n)."""
    if not 0 < delta < 1:
        raise InvalidParameter("delta must lie in (0, 1)")
    if not sigma > 0 or n < 1:
        raise InvalidParameter("need sigma > 0 and n >= 1")
    return 3.0 * sigma * math.sqrt(8.0 * math.log(2.0 / delta) / n) * norm_z
