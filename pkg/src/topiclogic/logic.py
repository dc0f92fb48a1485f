"""Logic-matrix certification and the introspection flow ``x' = (C - I) x``."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import spectra
from .errors import DimensionError, LogicAssumptionError

UNIT_TOL = 1e-8
MARGINAL_BAND = 1e-4
RANK_TOL = 1e-8
NORM_TOL = 1e-12


@dataclass(frozen=True)
class LogicCertificate:
    """Eigenstructure of ``C`` at the eigenvalue 1 plus assumption verdicts.

    ``zetas`` / ``xis`` are ``d x p`` with ``xis.T @ zetas == I_p`` and unit
    2-norm columns in ``zetas``. ``projector`` is ``zetas @ xis.T``.
    ``satisfies_assumption3`` covers only the clauses on ``C``
    (positive diagonal, unit infinity norm) on top of assumption 1; the
    Laplacian clause lives in :func:`topiclogic.criteria.assumption3_check`.
    """

    C: np.ndarray
    p: int
    zetas: np.ndarray
    xis: np.ndarray
    projector: np.ndarray
    eigenvalues: np.ndarray
    satisfies_assumption1: bool
    satisfies_assumption3: bool
    failures: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def d(self) -> int:
        return self.C.shape[0]

    @property
    def non_unit_eigenvalues(self) -> np.ndarray:
        return self.eigenvalues[np.abs(self.eigenvalues - 1.0) > UNIT_TOL]

    def require_assumption1(self):
        if not self.satisfies_assumption1:
            raise LogicAssumptionError(
                "logic matrix violates assumption 1: " + "; ".join(self.failures), self.failures
            )


def infinity_norm(C) -> float:
    """Maximum absolute row sum of ``C``."""
    return spectra.inf_norm(spectra.as_matrix(C, "C", square=False))


def _null_space(m: np.ndarray, k: int) -> np.ndarray:
    # last k right singular vectors span the numerical null space
    _, _, vt = np.linalg.svd(m)
    return vt[m.shape[1] - k:].T


def certify_logic(C, strict: bool = False) -> LogicCertificate:
    """Check ``C`` against assumption 1 (and the ``C`` part of assumption 3).

    ``p`` counts eigenvalues within 1e-8 of 1. Semi-simplicity is verified
    via ``rank(C - I) == d - p`` with singular-value threshold
    ``1e-8 * ||C||_inf``. Failures are collected in ``failures``; with
    ``strict=True`` they raise :class:`LogicAssumptionError` instead.
    """
    C = spectra.as_matrix(C, "C").copy()
    C.setflags(write=False)
    d = C.shape[0]
    eigs = spectra.eigvals(C)
    failures: list[str] = []
    warnings: list[str] = []

    dist = np.abs(eigs - 1.0)
    p = int(np.sum(dist <= UNIT_TOL))
    for lam in eigs[(dist > UNIT_TOL) & (dist < MARGINAL_BAND)]:
        warnings.append(f"eigenvalue {lam:.12g} is marginally close to 1")

    if np.any(np.diag(C) < 0):
        bad = [int(i) for i in np.flatnonzero(np.diag(C) < 0)]
        failures.append(f"negative diagonal entries at topics {bad}")
    if p == 0:
        failures.append("no eigenvalue at 1 (p = 0)")
    for lam in eigs[dist > UNIT_TOL]:
        if lam.real >= 1.0:
            failures.append(f"eigenvalue {lam:.12g} has real part >= 1")

    norm = spectra.inf_norm(C)
    zetas = np.zeros((d, 0))
    xis = np.zeros((d, 0))
    if p > 0:
        sv = np.linalg.svd(C - np.eye(d), compute_uv=False)
        rank = int(np.sum(sv > RANK_TOL * max(norm, 1.0)))
        if rank != d - p:
            failures.append(f"unit eigenvalue is not semi-simple (rank(C - I) = {rank}, expected {d - p})")
        else:
            zetas = _null_space(C - np.eye(d), p)
            raw_xis = _null_space((C - np.eye(d)).T, p)
            gram = raw_xis.T @ zetas
            try:
                # xis = raw_xis @ gram^{-T}  =>  xis.T @ zetas = I
                xis = spectra.solve(gram, raw_xis.T).T
            except Exception:
                failures.append("left/right unit eigenvectors cannot be biorthonormalised")
                zetas = np.zeros((d, 0))
    projector = zetas @ xis.T if zetas.shape[1] else np.zeros((d, d))

    a1 = not failures
    a3 = a1 and bool(np.all(np.diag(C) > 0)) and abs(norm - 1.0) <= NORM_TOL
    cert = LogicCertificate(C, p, zetas, xis, projector, eigs, a1, a3, failures, warnings)
    if strict:
        cert.require_assumption1()
    return cert


def introspection_limit(cert: LogicCertificate, x0) -> np.ndarray:
    """Stationary point ``Y x0`` of the introspection flow started at ``x0``."""
    cert.require_assumption1()
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (cert.d,):
        raise DimensionError(f"x0 has shape {x0.shape}, expected ({cert.d},)")
    return cert.projector @ x0


def introspection_flow(C, x0, t: float) -> np.ndarray:
    """Exact solution ``expm((C - I) t) x0`` of the introspection dynamics."""
    C = spectra.as_matrix(C, "C")
    return spectra.expm((C - np.eye(C.shape[0])) * t) @ np.asarray(x0, dtype=float)
