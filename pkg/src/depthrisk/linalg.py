"""Dense symmetric positive definite linear algebra.

Small-dimension building blocks for depth computation: an eagerly factored
SPD matrix type, quadratic forms through triangular solves, and a Jacobi
operator norm.  An explicit inverse is never materialized; every solve goes
through the cached Cholesky factor.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DimensionMismatch, NotPositiveDefinite, NotSymmetric

SYMMETRY_TOL = 1e-12
PIVOT_FLOOR = 1e-300
_JACOBI_TARGET = 1e-12
_MAX_SWEEPS = 60


def _checked_symmetric(matrix) -> np.ndarray:
    """Validate squareness and symmetry, then return the symmetrized copy.

    Accumulated covariances carry last-bit asymmetry, so inputs within the
    absolute tolerance are symmetrized as (A + A.T) / 2 instead of rejected.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] == 0:
        raise DimensionMismatch("matrix must have at least one row")
    gap = float(np.max(np.abs(a - a.T)))
    if gap > SYMMETRY_TOL:
        raise NotSymmetric(
            f"max |a[i,j] - a[j,i]| = {gap:.3e} exceeds tolerance {SYMMETRY_TOL:.0e}"
        )
    return 0.5 * (a + a.T)


def _cholesky_lower(a: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor with an explicit pivot floor."""
    d = a.shape[0]
    low = np.zeros_like(a)
    for j in range(d):
        pivot = a[j, j] - low[j, :j] @ low[j, :j]
        if pivot <= PIVOT_FLOOR:
            raise NotPositiveDefinite(f"Cholesky pivot {pivot:.3e} at column {j}")
        low[j, j] = np.sqrt(pivot)
        if j + 1 < d:
            low[j + 1 :, j] = (a[j + 1 :, j] - low[j + 1 :, :j] @ low[j, :j]) / low[j, j]
    return low


class SpdMatrix:
    """A symmetric positive definite matrix factored once at construction.

    Attributes
    ----------
    dim : int
        Matrix dimension.
    entries : ndarray
        The (symmetrized) dense matrix, read-only.
    chol : ndarray
        Lower-triangular Cholesky factor, read-only.

    Raises
    ------
    NotSymmetric
        If the input is asymmetric beyond 1e-12 (absolute, entrywise).
    NotPositiveDefinite
        If a Cholesky pivot is at or below 1e-300.

    Instances are immutable and safe to share across threads.
    """

    __slots__ = ("dim", "entries", "chol")

    def __init__(self, entries):
        a = _checked_symmetric(entries)
        self.dim = a.shape[0]
        self.entries = a
        self.chol = _cholesky_lower(a)
        self.entries.setflags(write=False)
        self.chol.setflags(write=False)

    def __repr__(self) -> str:  # pragma: no cover
        return f"SpdMatrix(dim={self.dim})"

    def _check_rows(self, rows) -> tuple[np.ndarray, bool]:
        r = np.asarray(rows, dtype=float)
        single = r.ndim == 1
        if r.shape[-1] != self.dim or r.ndim not in (1, 2):
            raise DimensionMismatch(
                f"expected vectors of length {self.dim}, got shape {r.shape}"
            )
        return r.reshape(-1, self.dim), single

    def whiten_rows(self, rows) -> np.ndarray:
        """Solve ``L w = r`` for each row r, so that ``|w|^2 = r' A^{-1} r``.

        Accepts a single vector of length dim or an (n, dim) array of rows.
        """
        r, single = self._check_rows(rows)
        w = solve_triangular(self.chol, r.T, lower=True, check_finite=False).T
        return w[0] if single else w

    def solve_rows(self, rows) -> np.ndarray:
        """Apply ``A^{-1}`` to each row through two triangular solves."""
        r, single = self._check_rows(rows)
        half = solve_triangular(self.chol, r.T, lower=True, check_finite=False)
        full = solve_triangular(self.chol.T, half, lower=False, check_finite=False).T
        return full[0] if single else full


def build_spd(entries) -> SpdMatrix:
    """Construct an :class:`SpdMatrix`, validating symmetry and definiteness."""
    return SpdMatrix(entries)


def sq_norm(v) -> float:
    """Squared Euclidean norm, the summation order used across this package."""
    v = np.asarray(v, dtype=float)
    return float(np.dot(v, v))


def quad_form(m: SpdMatrix, v) -> float:
    """Quadratic form ``v' m^{-1} v`` through two triangular solves.

    Parameters
    ----------
    m : SpdMatrix
    v : array_like, shape (dim,)

    Returns
    -------
    float
        Nonnegative; zero exactly when ``v`` is the zero vector.

    Raises
    ------
    DimensionMismatch
        If ``v`` does not have length ``m.dim``.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise DimensionMismatch(f"expected a vector, got shape {v.shape}")
    w = m.whiten_rows(v)
    return sq_norm(w)


def quad_forms(m: SpdMatrix, rows) -> np.ndarray:
    """Vectorized :func:`quad_form` over an (n, dim) array of row vectors."""
    w = m.whiten_rows(np.asarray(rows, dtype=float).reshape(-1, m.dim))
    return np.einsum("ij,ij->i", w, w)


def operator_norm(matrix) -> float:
    """Largest absolute eigenvalue of a symmetric matrix.

    Runs cyclic Jacobi rotations until the off-diagonal Frobenius norm
    drops below 1e-12 (or stops moving at floating point resolution, which
    only matters for inputs scaled far beyond order one).  Deterministic,
    and accurate to machine precision at the small dimensions used here.

    Raises
    ------
    NotSymmetric
        If the input is asymmetric beyond 1e-12.
    """
    a = _checked_symmetric(matrix).copy()
    d = a.shape[0]
    for _ in range(_MAX_SWEEPS):
        off = np.sqrt(max(0.0, np.sum(a * a) - np.sum(np.diag(a) ** 2)))
        if off < _JACOBI_TARGET:
            break
        before = off
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau == 0.0:
                    t = 1.0
                else:
                    t = np.sign(tau) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
        after = np.sqrt(max(0.0, np.sum(a * a) - np.sum(np.diag(a) ** 2)))
        if after >= before:
            # floating point fixed point; the diagonal is as converged as
            # this scale allows
            break
    return float(np.max(np.abs(np.diag(a))))
