"""Synthetic problems and delimited-text matrix ingestion.

Simulation recipe: design entries i.i.d. N(mu, 1) with mu ~ N(0, 10), unit
columns, beta* ~ N(0, I) projected onto the row space of X, noise
N(0, sigma^2) with sigma^2 = Var(X beta*) / snr, and test subjects uniform on
[-1, 1]^p.
"""

import csv
import io
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from .exceptions import InvalidParameter, NonNumericCell, ParseError, RaggedRows
from .linalg import DesignMatrix, TuningGrid, as_matrix, normalize_columns, svd


@dataclass(frozen=True)
class SimConfig:
    n: int = 50
    p: int = 100
    snr: float = 0.5
    mu_variance: float = 10.0
    mu_per_column: bool = False
    grid_count: int = 300
    grid_min_log10: float = -5.0
    grid_max_log10: float = 5.0
    n_test_subjects: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.n < 2 or self.p < 1:
            raise InvalidParameter(f"need n >= 2 and p >= 1, got n={self.n}, p={self.p}")
        if not self.snr > 0:
            raise InvalidParameter("snr must be positive")
        if self.mu_variance < 0:
            raise InvalidParameter("mu_variance must be nonnegative")
        if self.grid_count < 2:
            raise InvalidParameter("grid_count must be at least 2")
        if not self.grid_min_log10 < self.grid_max_log10:
            raise InvalidParameter("grid_min_log10 must be below grid_max_log10")
        if self.n_test_subjects < 1:
            raise InvalidParameter("n_test_subjects must be positive")

    def grid(self):
        return TuningGrid.logspace(self.grid_count, self.grid_min_log10, self.grid_max_log10)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f.name: f.type for f in fields(cls)}
        unknown = set(d) - set(known)
        if unknown:
            raise InvalidParameter(f"unknown config keys: {sorted(unknown)}")
        return cls(**{k: _coerce(cls, k, v) for k, v in d.items()})

    def with_overrides(self, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **{k: _coerce(SimConfig, k, v) for k, v in kw.items()})


def _coerce(cls, key, value):
    default = getattr(cls, key)
    if isinstance(default, bool):
        if isinstance(value, str):
            return value.strip().lower() in ("1", "true", "yes", "on")
        return bool(value)
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    return value


@dataclass(frozen=True)
class Truth:
    beta: np.ndarray
    u: np.ndarray
    sigma: float


@dataclass(frozen=True)
class RegressionProblem:
    X: DesignMatrix
    y: np.ndarray
    truth: Truth = None

    def __post_init__(self):
        if not isinstance(self.X, DesignMatrix):
            object.__setattr__(self, "X", DesignMatrix.unnormalized(self.X))
        y = np.asarray(self.y, dtype=float).ravel()
        if y.shape[0] != self.X.shape[0]:
            raise InvalidParameter(f"y has {y.shape[0]} entries, X has {self.X.shape[0]} rows")
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    def drop_row(self, i):
        """Problem without sample ``i``; truth is not carried over."""
        keep = np.arange(self.n) != i
        return RegressionProblem(self.X.take_rows(keep), self.y[keep])


def project_row_space(X, beta, factors=None):
    """Orthogonal projection of ``beta`` onto the row space of ``X``."""
    if factors is None:
        # private factorization: keeps the pipeline's SVD count honest
        _, d, Vt = np.linalg.svd(as_matrix(X), full_matrices=False)
        V = Vt.T
    else:
        d, V = factors.singular_values, factors.V
    k = int(np.count_nonzero(d > 1e-12 * d[0])) if d.size and d[0] > 0 else 0
    Vk = V[:, :k]
    return Vk @ (Vk.T @ beta)


def _draw_design(rng, n, p, mu_variance, mu_per_column):
    sd = math.sqrt(mu_variance)
    mu = rng.normal(0.0, sd, size=(1, p)) if mu_per_column else rng.normal(0.0, sd)
    return rng.normal(size=(n, p)) + mu


def _draw_response(rng, X, snr):
    A = as_matrix(X)
    beta = project_row_space(A, rng.normal(size=A.shape[1]))
    signal = A @ beta
    sigma = math.sqrt(float(np.var(signal)) / snr)
    u = rng.normal(0.0, sigma, size=A.shape[0])
    return A @ beta + u, Truth(beta, u, sigma)


def generate_synthetic(config: SimConfig, rng=None):
    """Draw one simulated replication.

    Returns
    -------
    problem : RegressionProblem
    subjects : array of shape (n_test_subjects, p)
    grid : TuningGrid
    """
    rng = np.random.default_rng(config.seed) if rng is None else rng
    X = normalize_columns(_draw_design(rng, config.n, config.p, config.mu_variance, config.mu_per_column))
    y, truth = _draw_response(rng, X, config.snr)
    subjects = rng.uniform(-1.0, 1.0, size=(config.n_test_subjects, config.p))
    return RegressionProblem(X, y, truth), subjects, config.grid()


def generate_semisynthetic(X_real, snr=0.5, seed=None, rng=None):
    """Simulated coefficients and noise on a fixed (normalized) design."""
    rng = np.random.default_rng(seed) if rng is None else rng
    if not isinstance(X_real, DesignMatrix):
        X_real = DesignMatrix.unnormalized(X_real)
    if not snr > 0:
        raise InvalidParameter("snr must be positive")
    y, truth = _draw_response(rng, X_real, snr)
    return RegressionProblem(X_real, y, truth)


def load_config(path):
    """Read ``key = value`` lines (``#`` comments allowed) into a dict of strings."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError("expected 'key = value'", row=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _sniff_delimiter(text):
    first = next((ln for ln in text.splitlines() if ln.strip()), "")
    return "\t" if "\t" in first else ","


def _is_number(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


def load_matrix(path, response=None, header="auto", delimiter=None, normalize=False):
    """Read a delimited-text matrix (samples as rows).

    Parameters
    ----------
    path : str or Path
    response : None, int, "first" or "last", or a header name
        Column to split off as the response vector.
    header : "auto", True or False
        With "auto" the first row is a header when any cell is non-numeric.
    delimiter : str, optional
        Comma or tab; detected from the first line when omitted.
    normalize : bool
        Scale the covariate columns to unit norm.

    Returns
    -------
    X : DesignMatrix
    y : ndarray or None
    names : list of str or None
    """
    text = Path(path).read_text()
    delimiter = delimiter or _sniff_delimiter(text)
    rows = [r for r in csv.reader(io.StringIO(text), delimiter=delimiter) if any(c.strip() for c in r)]
    if not rows:
        raise ParseError("file contains no data")
    names = None
    if header == "auto":
        header = not all(_is_number(c) for c in rows[0])
    if header:
        names = [c.strip() for c in rows[0]]
        rows = rows[1:]
        if not rows:
            raise ParseError("file has a header but no data rows")
    width = len(names) if names is not None else len(rows[0])
    offset = 2 if names is not None else 1
    data = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        if len(row) != width:
            raise RaggedRows(f"expected {width} fields, found {len(row)}", row=i + offset)
        for j, cell in enumerate(row):
            try:
                data[i, j] = float(cell)
            except ValueError:
                raise NonNumericCell(f"cannot parse {cell.strip()!r} as a number", row=i + offset, column=j + 1) from None
    if not np.all(np.isfinite(data)):
        bad = np.argwhere(~np.isfinite(data))[0]
        raise NonNumericCell("non-finite value", row=int(bad[0]) + offset, column=int(bad[1]) + 1)

    y = None
    if response is not None:
        col = _response_column(response, width, names)
        y = data[:, col].copy()
        data = np.delete(data, col, axis=1)
        if names is not None:
            names = names[:col] + names[col + 1:]
    if data.shape[1] == 0:
        raise ParseError("no covariate columns left")
    X = normalize_columns(data) if normalize else DesignMatrix.unnormalized(data)
    return X, y, names


def _response_column(response, width, names):
    if response == "last":
        return width - 1
    if response == "first":
        return 0
    if isinstance(response, str) and not response.lstrip("-").isdigit():
        if names is None or response not in names:
            raise ParseError(f"response column {response!r} not found in header")
        return names.index(response)
    col = int(response)
    if col < 0:
        col += width
    if not 0 <= col < width:
        raise ParseError(f"response column {response!r} out of range for {width} columns")
    return col


def save_matrix(path, X, y=None, names=None, delimiter=","):
    """Write a matrix (and optional trailing response column) with 17 significant digits."""
    A = as_matrix(X)
    if y is not None:
        A = np.column_stack([A, np.asarray(y, dtype=float)])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        if names is not None:
            w.writerow(names)
        for row in A:
            w.writerow([format(v, ".17g") for v in row])
