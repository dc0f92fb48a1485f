"""Dense real-matrix kernel: eigendecomposition, expm, kron, solve, Gershgorin discs.

Everything here is a thin, contract-checked layer over LAPACK (through
scipy). The contracts, not the methods, are what the rest of the package
relies on:

* ``eig`` residuals ``||A v - lam v||_inf <= 1e-9 (1 + ||A||_inf)``.
* ``solve`` refuses pivots below ``1e-12 ||A||_inf``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionError, EigenConvergenceError, NonFiniteError, SingularMatrixError

RESIDUAL_TOL = 1e-9
PIVOT_TOL = 1e-12
# eigenvalues closer than this (relative to 1 + ||A||) are not "simple"
SIMPLE_SEPARATION = 1e-8


def as_matrix(a, name="matrix", square=True) -> np.ndarray:
    """Coerce ``a`` to a finite 2-D float array, optionally requiring a square shape."""
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if square and arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} has non-finite entries")
    return arr


def inf_norm(a) -> float:
    """Maximum absolute row sum."""
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.max(np.sum(np.abs(a), axis=1)))


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues with (optionally) right/left eigenvectors.

    ``right_vectors[:, k]`` and ``left_vectors[:, k]`` belong to
    ``eigenvalues[k]``. Left vectors satisfy ``u.T @ A == lam * u.T``
    (plain transpose, not conjugate transpose). For simple eigenvalues the
    pair is scaled so that ``u.T @ v == 1``.
    """

    eigenvalues: np.ndarray
    right_vectors: np.ndarray | None
    left_vectors: np.ndarray | None
    residuals: np.ndarray

    def __len__(self):
        return len(self.eigenvalues)

    @property
    def abscissa(self) -> float:
        """Largest real part."""
        return float(np.max(self.eigenvalues.real))


def _order(values: np.ndarray) -> np.ndarray:
    # sort by (real, imag); conjugates end up adjacent, negative imag first
    return np.lexsort((values.imag, values.real))


def _column_residuals(a, w, vecs):
    num = np.max(np.abs(a @ vecs - vecs * w), axis=0)
    return num / np.maximum(np.max(np.abs(vecs), axis=0), 1e-300)


def _polish(a, w, vecs, bound):
    """Replace columns whose residual exceeds ``bound`` by the residual minimiser.

    The smallest right singular vector of ``a - w_k I`` minimises
    ``||(a - w_k I) v||_2`` over unit vectors.
    """
    bad = np.flatnonzero(_column_residuals(a, w, vecs) > bound)
    if bad.size == 0:
        return vecs
    vecs = vecs.astype(complex)
    n = a.shape[0]
    for k in bad:
        _, _, vh = np.linalg.svd(a - w[k] * np.eye(n))
        vecs[:, k] = np.conj(vh[-1])
    return vecs


def eig(a, want_vectors: bool = True) -> Spectrum:
    """Full eigendecomposition of a real square matrix.

    Eigenvalues are returned sorted by (real part, imaginary part), so
    conjugate pairs are adjacent and ordering is reproducible.

    Raises
    ------
    DimensionError
        If ``a`` is not square.
    EigenConvergenceError
        If LAPACK's QR iteration does not converge.
    """
    a = as_matrix(a)
    n = a.shape[0]
    if n == 0:
        empty = np.zeros((0, 0), dtype=complex)
        return Spectrum(np.zeros(0, dtype=complex), empty, empty, np.zeros(0))
    try:
        w, vl, vr = scipy.linalg.eig(a, left=True, right=True, check_finite=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure path
        raise EigenConvergenceError(f"eigenvalue iteration failed: {exc}") from exc
    w = np.asarray(w, dtype=complex)
    if not np.all(np.isfinite(w)):
        raise EigenConvergenceError("eigensolver returned non-finite eigenvalues")
    idx = _order(w)
    w, vr = w[idx], vr[:, idx]
    # scipy's vl satisfies vl^H A = lam vl^H; switch to the transpose convention
    ul = np.conj(vl[:, idx])

    scale = 1.0 + inf_norm(a)
    bound = RESIDUAL_TOL * scale
    # LAPACK's diagonal balancing can wreck eigenvectors when entries span
    # hundreds of orders of magnitude; polish only the offending columns
    vr = _polish(a, w, vr, bound)
    ul = _polish(a.T, w, ul, bound)
    for k in range(n):
        others = np.delete(w, k)
        simple = others.size == 0 or np.min(np.abs(others - w[k])) > SIMPLE_SEPARATION * scale
        dot = ul[:, k] @ vr[:, k]
        if simple and abs(dot) > 1e-14:
            ul[:, k] = ul[:, k] / dot

    def _residual(vecs, mat):
        res = np.empty(n)
        for k in range(n):
            v = vecs[:, k]
            res[k] = np.max(np.abs(mat @ v - w[k] * v)) / max(np.max(np.abs(v)), 1e-300)
        return res

    residuals = np.maximum(_residual(vr, a), _residual(ul, a.T))
    if np.any(residuals > bound):
        raise EigenConvergenceError(
            f"eigen-residual {residuals.max():.3e} exceeds contract bound {bound:.3e}"
        )
    if not want_vectors:
        return Spectrum(w, None, None, residuals)
    return Spectrum(w, vr, ul, residuals)


def eigvals(a) -> np.ndarray:
    """Sorted eigenvalues only (same ordering as :func:`eig`)."""
    a = as_matrix(a)
    w = np.asarray(scipy.linalg.eigvals(a, check_finite=False), dtype=complex)
    return w[_order(w)]


def expm(a) -> np.ndarray:
    """Matrix exponential ``e^A`` (scaling and squaring with a Pade core)."""
    a = as_matrix(a)
    return scipy.linalg.expm(a)


def kron(a, b) -> np.ndarray:
    """Kronecker product; 1-D inputs are treated as row vectors by numpy."""
    return np.kron(np.asarray(a, dtype=float), np.asarray(b, dtype=float))


def solve(a, b) -> np.ndarray:
    """Solve ``A x = b`` by partially pivoted LU.

    Raises
    ------
    SingularMatrixError
        If any pivot magnitude falls below ``1e-12 * ||A||_inf``. The
        offending pivot is attached as ``exc.pivot``.
    """
    a = as_matrix(a)
    b = np.asarray(b, dtype=float)
    if b.shape[0] != a.shape[0]:
        raise DimensionError(f"rhs has {b.shape[0]} rows, matrix has {a.shape[0]}")
    if not np.all(np.isfinite(b)):
        raise NonFiniteError("rhs has non-finite entries")
    norm = inf_norm(a)
    lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    pivots = np.abs(np.diag(lu))
    smallest = float(pivots.min()) if pivots.size else 0.0
    if pivots.size == 0 or smallest < PIVOT_TOL * norm or smallest == 0.0:
        raise SingularMatrixError(
            f"matrix is singular to tolerance: pivot {smallest:.3e} < {PIVOT_TOL:g}*{norm:.3e}",
            pivot=smallest,
        )
    return scipy.linalg.lu_solve((lu, piv), b, check_finite=False)


@dataclass(frozen=True)
class GershgorinDisc:
    center: complex
    radius: float

    def contains(self, z, tol: float = 0.0) -> bool:
        return abs(z - self.center) <= self.radius + tol


def gershgorin(a) -> list[GershgorinDisc]:
    """One disc per row: centre ``a_ii``, radius the off-diagonal absolute row sum."""
    a = as_matrix(a)
    absa = np.abs(a)
    radii = absa.sum(axis=1) - np.diag(absa)
    return [GershgorinDisc(complex(a[i, i]), float(radii[i])) for i in range(a.shape[0])]


def in_disc_union(z, discs, tol: float = 0.0) -> bool:
    """Whether ``z`` lies in the union of ``discs`` (with slack ``tol``)."""
    return any(disc.contains(z, tol) for disc in discs)
