"""Principal component analysis via a one-sided Jacobi SVD.

Fitting centers the data, orthogonalizes the column pairs of the centered
matrix with Jacobi rotations until convergence, and keeps the first
min(S, N) right singular vectors with their singular values sorted
non-increasingly. Projection onto P components is ``Y = (X - mean) @ C``
where C stacks the first P vectors.

Each component is oriented deterministically: the entry of largest absolute
value is made nonnegative, so refits reproduce bit-identical models.

The squared singular values over their total give the cumulative explained
variance ratio used for automatic component selection.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import (
    InsufficientSamplesError,
    InvalidComponentCountError,
    InvalidFractionError,
    NonFiniteInputError,
    SchemaMismatchError,
)

_JACOBI_TOL = 1e-15
_JACOBI_MAX_SWEEPS = 64


def _one_sided_jacobi(A: np.ndarray, tol: float, max_sweeps: int) -> tuple[np.ndarray, np.ndarray]:
    """Orthogonalize the columns of ``A`` in place; returns (singular_values, V).

    After convergence the columns of ``A`` are mutually orthogonal, their
    norms are the singular values, and ``V`` accumulates the rotations, so
    ``A_original = A_final_normalized * diag(s) @ V.T``.
    """
    n = A.shape[1]
    V = np.eye(n)
    for _ in range(max_sweeps):
        rotated = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                ai = A[:, i]
                aj = A[:, j]
                alpha = ai @ ai
                beta = aj @ aj
                gamma = ai @ aj
                if alpha == 0.0 or beta == 0.0:
                    continue
                if abs(gamma) <= tol * np.sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = np.sign(zeta) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                if zeta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                new_i = c * ai - s * aj
                new_j = s * ai + c * aj
                A[:, i] = new_i
                A[:, j] = new_j
                vi = V[:, i].copy()
                vj = V[:, j]
                V[:, i] = c * vi - s * vj
                V[:, j] = s * vi + c * vj
        if not rotated:
            break
    singular_values = np.sqrt(np.sum(A * A, axis=0))
    return singular_values, V


class PrincipalComponents(BaseEstimator, TransformerMixin):
    """SVD-based PCA fitted once; any P <= min(S, N) projects by truncation."""

    def __init__(self, tolerance: float = _JACOBI_TOL, max_sweeps: int = _JACOBI_MAX_SWEEPS):
        self.tolerance = tolerance
        self.max_sweeps = max_sweeps

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise SchemaMismatchError("expected a 2-D array")
        if not np.all(np.isfinite(X)):
            raise NonFiniteInputError("PCA input contains non-finite values")
        S, N = X.shape
        if S < 2:
            raise InsufficientSamplesError("PCA needs at least 2 samples")
        self.column_means_ = X.mean(axis=0)
        centered = X - self.column_means_
        singular_values, V = _one_sided_jacobi(centered.copy(), self.tolerance, self.max_sweeps)
        order = np.argsort(-singular_values, kind="stable")
        keep = min(S, N)
        order = order[:keep]
        components = V[:, order].T.copy()
        # Deterministic orientation: largest-magnitude entry nonnegative.
        for row in components:
            if row[np.argmax(np.abs(row))] < 0:
                row *= -1.0
        self.components_ = components
        self.singular_values_ = singular_values[order]
        self.n_components_ = keep
        self.n_samples_ = S
        self.n_features_in_ = N
        return self

    def transform(self, X, n_components: int | None = None) -> np.ndarray:
        self._check_fitted()
        P = self.n_components_ if n_components is None else n_components
        self._check_component_count(P)
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        if single:
            X = X.reshape(1, -1)
        if X.ndim != 2 or X.shape[1] != self.n_features_in_:
            raise SchemaMismatchError(
                f"expected {self.n_features_in_} columns, got {X.shape[1] if X.ndim == 2 else X.ndim}"
            )
        Y = (X - self.column_means_) @ self.components_[:P].T
        return Y[0] if single else Y

    def cumulative_explained_variance(self, n_components: int) -> float:
        """Share of total variance captured by the first ``n_components``."""
        self._check_fitted()
        self._check_component_count(n_components)
        power = self.singular_values_**2
        total = power.sum()
        if total == 0.0:
            return 1.0
        return float(power[:n_components].sum() / total)

    def explained_variance_curve(self) -> np.ndarray:
        """R_cev for P = 1..n_components_; the last entry is exactly 1.0."""
        self._check_fitted()
        power = self.singular_values_**2
        cumulative = np.cumsum(power)
        if cumulative[-1] == 0.0:
            return np.ones_like(cumulative)
        return cumulative / cumulative[-1]

    def choose_components(self, target_ratio: float) -> int:
        """Smallest P whose cumulative explained variance reaches the target."""
        self._check_fitted()
        if not (0.0 < target_ratio <= 1.0):
            raise InvalidFractionError(f"target ratio must be in (0, 1], got {target_ratio}")
        curve = self.explained_variance_curve()
        for p, ratio in enumerate(curve, start=1):
            if ratio >= target_ratio - 1e-15:
                return p
        return self.n_components_

    def _check_fitted(self):
        if not hasattr(self, "components_"):
            raise SchemaMismatchError("PCA is not fitted")

    def _check_component_count(self, P):
        if not isinstance(P, (int, np.integer)) or not (1 <= P <= self.n_components_):
            raise InvalidComponentCountError(
                f"component count must be in 1..{self.n_components_}, got {P}"
            )
