"""scikit-learn compatible wrappers.

``PAVRidge.predict`` is personalized: every row of the input is treated as
a subject and gets its own tuning parameter.  ``KFoldRidge`` is the usual
cross-validated ridge with a single tuning parameter.
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .calibration import MODES, select_batch, select_tuning
from .cv import cv_select, make_folds
from .datagen import RegressionProblem
from .linalg import DesignMatrix, TuningGrid, normalize_columns, ridge_path, ridge_solve, svd
from .mapping import build_edr_path


def _grid(est):
    if est.grid is not None:
        return TuningGrid(est.grid)
    return TuningGrid.logspace(est.grid_count, est.grid_min_log10, est.grid_max_log10)


def _design(X, normalize):
    if normalize:
        return normalize_columns(X)
    return DesignMatrix.unnormalized(X)


class PAVRidge(RegressorMixin, BaseEstimator):
    """Ridge regression with personalized adaptive validation.

    Parameters
    ----------
    grid : array-like, optional
        Ridge tuning parameters; overrides the log-spaced default.
    grid_count, grid_min_log10, grid_max_log10 : grid specification
    normalize : bool, default=False
        Scale covariate columns to unit norm before fitting.  Subjects passed
        to ``predict`` are rescaled the same way.
    mode : {"algorithm1", "definition2"}

    Attributes
    ----------
    edr_path_ : EdrPath
    column_norms_ : ndarray
    """

    def __init__(self, grid=None, grid_count=300, grid_min_log10=-5.0, grid_max_log10=5.0,
                 normalize=False, mode="algorithm1"):
        self.grid = grid
        self.grid_count = grid_count
        self.grid_min_log10 = grid_min_log10
        self.grid_max_log10 = grid_max_log10
        self.normalize = normalize
        self.mode = mode

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        design = _design(X, self.normalize)
        problem = RegressionProblem(design, y)
        self.column_norms_ = design.column_norms if self.normalize else np.ones(X.shape[1])
        self.edr_path_ = build_edr_path(ridge_path(svd(design), y, _grid(self)), problem)
        self.n_features_in_ = X.shape[1]
        return self

    def _subjects(self, Z):
        check_is_fitted(self, "edr_path_")
        Z = check_array(Z)
        if Z.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {Z.shape[1]} features, but {type(self).__name__} is expecting {self.n_features_in_}")
        return Z / self.column_norms_

    def select(self, Z):
        """Chosen ``(t, r)`` pairs, one per row of ``Z``."""
        Z = self._subjects(Z)
        path = self.edr_path_
        if self.mode == "algorithm1":
            idx, _, _ = select_batch(path, Z)
        else:
            idx = np.array([select_tuning(path, z, mode=self.mode).index for z in Z])
        return path.ridge_grid[idx], path.edr_grid[idx]

    def predict(self, X):
        Z = self._subjects(X)
        path = self.edr_path_
        if self.mode == "algorithm1":
            _, pred, _ = select_batch(path, Z)
            return pred
        return np.array([select_tuning(path, z, mode=self.mode).prediction for z in Z])


class KFoldRidge(RegressorMixin, BaseEstimator):
    """Ridge regression tuned by K-fold cross-validation on held-out MSE."""

    def __init__(self, n_folds=5, grid=None, grid_count=300, grid_min_log10=-5.0, grid_max_log10=5.0,
                 normalize=False, random_state=None):
        self.n_folds = n_folds
        self.grid = grid
        self.grid_count = grid_count
        self.grid_min_log10 = grid_min_log10
        self.grid_max_log10 = grid_max_log10
        self.normalize = normalize
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        design = _design(X, self.normalize)
        problem = RegressionProblem(design, y)
        plan = make_folds(X.shape[0], self.n_folds, seed=self.random_state)
        self.alpha_, self.cv_errors_ = cv_select(problem, _grid(self), plan)
        coef = ridge_solve(design, y, self.alpha_)
        self.coef_ = coef / design.column_norms if self.normalize else coef
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        return X @ self.coef_
