"""Consensus/convergence predicates and analytic limits for both models.

Notation used throughout: ``lam_i`` are Laplacian eigenvalues, ``phi_k``
logic-matrix eigenvalues. Model 1 reaches consensus (no stubbornness) iff
``Re((1 - lam_i) phi_k) < 1`` for every nonzero ``lam_i`` and every ``phi_k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import spectra
from .errors import (
    ConditionNotSatisfiedError,
    DimensionError,
    LogicAssumptionError,
    NoSpanningTreeError,
)
from .logic import NORM_TOL, UNIT_TOL, LogicCertificate, certify_logic
from .netgraph import (
    ZERO_EIG_TOL,
    GraphCertificate,
    SocialGraph,
    certify_graph,
    graph_from_laplacian,
    leader_stubborn,
)

MARGIN_TOL = 1e-9
REAL_TOL = 1e-12


@dataclass(frozen=True)
class ConditionReport:
    """Verdict of one spectral condition.

    ``holds`` is ``margin > 0``; ``marginal`` flags ``|margin| < 1e-9``, in
    which case the verdict should not be trusted either way. ``witness`` is
    the eigenvalue (or eigenvalue pair) attaining the margin.
    """

    holds: bool
    margin: float
    witness: tuple | None
    marginal: bool
    details: dict = field(default_factory=dict)

    @property
    def decided(self) -> bool:
        return not self.marginal


def _report(margin, witness, details=None, extra_ok=True) -> ConditionReport:
    margin = float(margin)
    return ConditionReport(
        holds=bool(extra_ok and margin > 0),
        margin=margin,
        witness=witness,
        marginal=abs(margin) < MARGIN_TOL,
        details=details or {},
    )


@dataclass(frozen=True)
class StubbornProfile:
    """Per-individual attachment strengths.

    ``anchors`` (``n x d``) are the aggregate attachment targets produced by
    :meth:`from_attachments`; when ``None`` each individual is attached to
    its own initial opinion.
    """

    b: np.ndarray
    anchors: np.ndarray | None = None

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float)
        if b.ndim != 1:
            raise DimensionError("stubbornness must be a vector")
        if np.any(~np.isfinite(b)) or np.any(b < 0):
            raise ValueError("stubbornness entries must be finite and nonnegative")
        object.__setattr__(self, "b", b)

    @classmethod
    def zeros(cls, n: int) -> "StubbornProfile":
        return cls(np.zeros(n))

    @classmethod
    def from_attachments(cls, attachments, d: int) -> "StubbornProfile":
        """Reduce several constant inputs per individual to one aggregate.

        ``attachments[i]`` is a list of ``(weight, target)`` pairs. The result
        has ``b_i = sum(weights)`` and anchor the weight-averaged target.
        """
        n = len(attachments)
        b = np.zeros(n)
        anchors = np.zeros((n, d))
        for i, items in enumerate(attachments):
            for weight, target in items:
                target = np.asarray(target, dtype=float)
                if target.shape != (d,):
                    raise DimensionError(f"attachment target for individual {i} has shape {target.shape}")
                if weight < 0:
                    raise ValueError(f"attachment weight for individual {i} is negative")
                b[i] += weight
                anchors[i] += weight * target
            if b[i] > 0:
                anchors[i] /= b[i]
        return cls(b, anchors)

    @property
    def n(self) -> int:
        return self.b.shape[0]

    @property
    def any_stubborn(self) -> bool:
        return bool(np.any(self.b > 0))

    def anchor_vector(self, x0: np.ndarray) -> np.ndarray:
        """Stacked attachment targets (``x0`` unless anchors were given)."""
        if self.anchors is None:
            return np.asarray(x0, dtype=float)
        return self.anchors.reshape(-1)


def _as_profile(b) -> StubbornProfile:
    return b if isinstance(b, StubbornProfile) else StubbornProfile(np.asarray(b, dtype=float))


def _unit_split(phi: np.ndarray):
    unit = np.abs(phi - 1.0) <= UNIT_TOL
    return phi[unit], phi[~unit]


def _check_logic_spectrum(phi: np.ndarray):
    unit, other = _unit_split(phi)
    if unit.size == 0:
        raise LogicAssumptionError("logic matrix has no eigenvalue at 1")
    bad = other[other.real >= 1.0]
    if bad.size:
        raise LogicAssumptionError(f"logic eigenvalue {bad[0]:.12g} has real part >= 1")


def _nonzero_laplacian_eigs(lam: np.ndarray) -> np.ndarray:
    zero = np.abs(lam) < ZERO_EIG_TOL
    if int(zero.sum()) != 1:
        raise NoSpanningTreeError(
            f"Laplacian has {int(zero.sum())} eigenvalues within {ZERO_EIG_TOL:g} of 0; "
            "a directed spanning tree is required"
        )
    return lam[~zero]


def _eigenvalues(spec) -> np.ndarray:
    if isinstance(spec, spectra.Spectrum):
        return spec.eigenvalues
    return np.asarray(spec, dtype=complex)


def upper_representatives(values: np.ndarray) -> np.ndarray:
    """One representative per conjugate pair (nonnegative imaginary part).

    Real eigenvalues are kept with multiplicity; for a pair only the upper
    member survives. Equivalent to ``values[values.imag >= 0]`` after
    snapping tiny imaginary parts to zero.
    """
    v = np.asarray(values, dtype=complex)
    imag = np.where(np.abs(v.imag) <= REAL_TOL * (1 + np.abs(v)), 0.0, v.imag)
    v = v.real + 1j * imag
    return v[v.imag >= 0]


def condition_terms(lam_rep: np.ndarray, phi_rep: np.ndarray) -> np.ndarray:
    """Worst-sign values ``d - y d + z e`` over representative pairs.

    With ``lam = y + z j`` and ``phi = d + e j`` (``z, e >= 0``) this is the
    largest of ``Re((1 - lam') phi')`` over the conjugates of each pair.
    """
    y, z = lam_rep.real[:, None], np.abs(lam_rep.imag)[:, None]
    dk, ek = phi_rep.real[None, :], np.abs(phi_rep.imag)[None, :]
    return dk - y * dk + z * ek


def model1_condition(L_spectrum, C_spectrum) -> ConditionReport:
    """Consensus test for Model 1 without stubbornness.

    Parameters
    ----------
    L_spectrum, C_spectrum : Spectrum or array of eigenvalues

    Returns
    -------
    ConditionReport
        ``margin = min(1 - Re((1 - lam_i) phi_k))`` over nonzero ``lam_i``
        and all ``phi_k``; ``witness = (lam_i, phi_k)``.
    """
    lam = _nonzero_laplacian_eigs(_eigenvalues(L_spectrum))
    phi = _eigenvalues(C_spectrum)
    _check_logic_spectrum(phi)
    if lam.size == 0:  # single individual: nothing to agree on
        return _report(math.inf, None)
    lam_rep, phi_rep = upper_representatives(lam), upper_representatives(phi)
    margins = 1.0 - condition_terms(lam_rep, phi_rep)
    i, k = np.unravel_index(np.argmin(margins), margins.shape)
    return _report(margins[i, k], (complex(lam_rep[i]), complex(phi_rep[k])))


def model2_condition(g_cert: GraphCertificate, c_cert: LogicCertificate) -> ConditionReport:
    """Consensus test for Model 2 without stubbornness.

    Holds iff the graph has a spanning tree and ``C`` meets assumption 1.
    The margin is ``min(1 - Re phi_k)`` over non-unit ``phi_k`` (``inf``
    when ``C`` has no other eigenvalue). The smallest real part among the
    nonzero Laplacian eigenvalues is reported as ``details["graph_margin"]``;
    the Model 2 spectrum is ``lam_i + 1 - phi_k``.
    """
    other = c_cert.non_unit_eigenvalues
    lam = g_cert.laplacian_eigenvalues
    lam = lam[np.argsort(np.abs(lam), kind="stable")][1:]
    details = {
        "has_spanning_tree": g_cert.has_spanning_tree,
        "assumption1": c_cert.satisfies_assumption1,
        "graph_margin": float(np.min(lam.real)) if lam.size else math.inf,
    }
    if other.size:
        k = int(np.argmin(1.0 - other.real))
        margin, witness = float(1.0 - other[k].real), (complex(other[k]),)
    else:
        margin, witness = math.inf, None
    ok = g_cert.has_spanning_tree and c_cert.satisfies_assumption1
    return _report(margin, witness, details, extra_ok=ok)


def corollary1_alpha_sup(L_spectrum, C_spectrum) -> float:
    """Supremum of edge scalings ``alpha`` for which Model 1 still reaches consensus.

    For every representative pair with ``g = y d - z e < 0`` the scaled
    condition ``d - alpha g < 1`` caps ``alpha`` at ``(d - 1) / g``. Returns
    ``math.inf`` when no pair caps it.
    """
    lam = _nonzero_laplacian_eigs(_eigenvalues(L_spectrum))
    phi = _eigenvalues(C_spectrum)
    _check_logic_spectrum(phi)
    lam_rep, phi_rep = upper_representatives(lam), upper_representatives(phi)
    y, z = lam_rep.real[:, None], np.abs(lam_rep.imag)[:, None]
    dk, ek = phi_rep.real[None, :], np.abs(phi_rep.imag)[None, :]
    g = y * dk - z * ek
    neg = g < 0
    if not np.any(neg):
        return math.inf
    caps = (np.broadcast_to(dk, g.shape)[neg] - 1.0) / g[neg]
    return float(np.min(caps))


def corollary2_term(lam: complex) -> float:
    """Per-eigenvalue degree bound, before the 0.5 cap.

    ``|1 - |lam| cos t| (1 + cos t) / (|lam| sin^2 t)`` with ``t = arg lam``,
    evaluated as ``|1 - |lam| cos t| / (|lam| (1 - cos t))`` to avoid the
    cancellation near ``t = pi``; at ``t = pi`` this is the limit
    ``(1 + |lam|) / (2 |lam|)``. Real nonnegative eigenvalues impose
    nothing (``inf``).
    """
    lam = complex(lam)
    mod = abs(lam)
    if abs(lam.imag) <= REAL_TOL * (1 + mod) and lam.real >= 0:
        return math.inf
    cos_t = lam.real / mod
    return abs(1.0 - mod * cos_t) / (mod * (1.0 - cos_t))


def corollary2_degree_bound(C_spectrum) -> float:
    """Largest-degree threshold: ``max_i l_ii`` below it guarantees Model 1 consensus."""
    phi = _eigenvalues(C_spectrum)
    _check_logic_spectrum(phi)
    terms = [corollary2_term(lam) for lam in phi]
    return float(min(min(terms), 0.5))


def _graph_and_cert(L) -> tuple[SocialGraph, GraphCertificate]:
    g = L if isinstance(L, SocialGraph) else graph_from_laplacian(L)
    return g, certify_graph(g)


def _check_dims(L, C, prof: StubbornProfile):
    if prof.n != L.shape[0]:
        raise DimensionError(f"stubbornness has length {prof.n}, graph has {L.shape[0]} nodes")
    if C.shape[0] != C.shape[1]:
        raise DimensionError("C must be square")


def model1_stubborn_matrix(L, C, b) -> np.ndarray:
    """``-(I + (L - I) kron C + B kron I)``."""
    n, d = L.shape[0], C.shape[0]
    B = np.diag(_as_profile(b).b)
    return -(np.eye(n * d) + spectra.kron(L - np.eye(n), C) + spectra.kron(B, np.eye(d)))


def model2_stubborn_matrix(L, C, b) -> np.ndarray:
    """``-((L + B) kron I + I kron (I - C))``."""
    n, d = L.shape[0], C.shape[0]
    B = np.diag(_as_profile(b).b)
    return -(spectra.kron(L + B, np.eye(d)) + spectra.kron(np.eye(n), np.eye(d) - C))


def disc_threshold(M0: np.ndarray, d: int) -> float:
    """Smallest uniform ``b`` pushing every Gershgorin disc of ``M0 - b I`` into ``Re < 0``.

    Adding ``b`` to every individual shifts each disc left by ``b`` without
    changing radii, so the threshold is ``max(0, max_l(m_ll + R_l))``; any
    ``b`` strictly above it is sufficient.
    """
    discs = spectra.gershgorin(M0)
    return max(0.0, max(disc.center.real + disc.radius for disc in discs))


def _hurwitz_report(M, details) -> ConditionReport:
    w = spectra.eigvals(M)
    k = int(np.argmax(w.real))
    abscissa = float(w[k].real)
    details = dict(details)
    details["spectral_abscissa"] = abscissa
    details["zero_modes"] = int(np.sum(np.abs(w) < ZERO_EIG_TOL))
    return _report(-abscissa, (complex(w[k]),), details)


def model1_stubborn_hurwitz(L, C, b) -> ConditionReport:
    """Hurwitz test of the Model 1 drift with stubbornness, plus sufficient hypotheses.

    ``details`` carries the spectral abscissa, the number of zero modes and
    the three sufficient hypotheses: ``small_b`` (consensus condition holds
    and some leader is stubborn), ``uniform_b`` (all ``b_i`` equal and
    positive, with consensus condition holding) and ``large_b`` (every
    Gershgorin disc in the open left half-plane). ``large_b_threshold`` is
    the constructive uniform stubbornness making the disc test pass.
    """
    g, gcert = _graph_and_cert(L)
    L = g.laplacian
    C = spectra.as_matrix(C, "C")
    prof = _as_profile(b)
    _check_dims(L, C, prof)
    d = C.shape[0]
    M = model1_stubborn_matrix(L, C, prof)
    M0 = model1_stubborn_matrix(L, C, np.zeros(g.n))

    cons = None
    if gcert.has_spanning_tree:
        try:
            cons = model1_condition(gcert.laplacian_eigenvalues, spectra.eigvals(C))
        except LogicAssumptionError:
            cons = None
    consensus_ok = cons is not None and cons.holds and not cons.marginal
    bvals = prof.b
    uniform = bool(bvals.size and bvals.min() > 0 and np.ptp(bvals) <= 1e-12 * bvals.max())
    discs = spectra.gershgorin(M)
    details = {
        "small_b": bool(consensus_ok and leader_stubborn(gcert, bvals)),
        "uniform_b": bool(consensus_ok and uniform),
        "large_b": bool(max(dsc.center.real + dsc.radius for dsc in discs) < 0),
        "large_b_threshold": disc_threshold(M0, d),
        "consensus_condition": None if cons is None else cons.holds,
    }
    return _hurwitz_report(M, details)


def model2_stubborn_hurwitz(L, C, b) -> ConditionReport:
    """Hurwitz test of the Model 2 drift with stubbornness.

    ``details["hypothesis"]`` is the sufficient condition: spanning tree,
    assumption 1 and a stubborn leader. It implies Hurwitz, not conversely.
    """
    g, gcert = _graph_and_cert(L)
    L = g.laplacian
    C = spectra.as_matrix(C, "C")
    prof = _as_profile(b)
    _check_dims(L, C, prof)
    ccert = certify_logic(C)
    details = {
        "has_spanning_tree": gcert.has_spanning_tree,
        "assumption1": ccert.satisfies_assumption1,
        "leader_stubborn": leader_stubborn(gcert, prof.b),
    }
    details["hypothesis"] = all(details.values())
    return _hurwitz_report(model2_stubborn_matrix(L, C, prof), details)


@dataclass(frozen=True)
class Assumption3Report:
    holds: bool
    clauses: dict
    diagnostics: list


def assumption3_check(g: SocialGraph, C) -> Assumption3Report:
    """Report each clause: ``l_ii <= 1``, ``c_kk > 0`` and ``||C||_inf = 1``."""
    C = spectra.as_matrix(C, "C")
    deg = np.diag(g.laplacian)
    norm = spectra.inf_norm(C)
    clauses = {
        "laplacian_degree_le_1": bool(np.all(deg <= 1.0 + NORM_TOL)),
        "logic_diagonal_positive": bool(np.all(np.diag(C) > 0)),
        "logic_inf_norm_is_1": abs(norm - 1.0) <= NORM_TOL,
    }
    diag = []
    if not clauses["laplacian_degree_le_1"]:
        diag.append(f"max Laplacian degree {deg.max():.12g} exceeds 1 at nodes {np.flatnonzero(deg > 1 + NORM_TOL).tolist()}")
    if not clauses["logic_diagonal_positive"]:
        diag.append(f"logic diagonal not positive at topics {np.flatnonzero(np.diag(C) <= 0).tolist()}")
    if not clauses["logic_inf_norm_is_1"]:
        diag.append(f"||C||_inf = {norm:.15g}, expected 1")
    return Assumption3Report(all(clauses.values()), clauses, diag)


def _stack(x0, n, d) -> np.ndarray:
    x0 = np.asarray(x0, dtype=float)
    if x0.size != n * d:
        raise DimensionError(f"initial state has {x0.size} entries, expected n*d = {n * d}")
    return x0.reshape(n * d)


def predicted_consensus(
    g_cert: GraphCertificate, c_cert: LogicCertificate, x0, condition: ConditionReport | None = None
) -> np.ndarray:
    """Common limit ``Y sum_j gamma_j x_j(0)`` of every individual.

    Pass the relevant :class:`ConditionReport` as ``condition`` to have a
    failing (or marginal) condition raise rather than return a meaningless
    prediction.
    """
    g_cert.require_spanning_tree()
    c_cert.require_assumption1()
    if condition is not None and (not condition.holds or condition.marginal):
        raise ConditionNotSatisfiedError(
            f"consensus condition not satisfied (margin {condition.margin:.3e}); no consensus value"
        )
    n, d = g_cert.gamma.shape[0], c_cert.d
    blocks = _stack(x0, n, d).reshape(n, d)
    return c_cert.projector @ (g_cert.gamma @ blocks)


def stubborn_system(model: int, L, C, b) -> tuple[np.ndarray, np.ndarray]:
    """``(F, B kron I)`` such that the drift is ``-F x + (B kron I) anchor``."""
    prof = _as_profile(b)
    if model == 1:
        F = -model1_stubborn_matrix(L, C, prof)
    elif model == 2:
        F = -model2_stubborn_matrix(L, C, prof)
    else:
        raise ValueError(f"unknown model {model!r}")
    return F, spectra.kron(np.diag(prof.b), np.eye(C.shape[0]))


def predicted_limit_stubborn(model: int, L, C, b, x0, check: bool = True) -> np.ndarray:
    """Limit ``F^{-1} (B kron I) x(0)`` of a stubborn network by one linear solve.

    With ``check=True`` the matching Hurwitz test runs first and a
    non-Hurwitz (or marginal) drift raises :class:`ConditionNotSatisfiedError`.
    A singular system raises :class:`~topiclogic.errors.SingularMatrixError`.
    """
    L = spectra.as_matrix(L.laplacian if isinstance(L, SocialGraph) else L, "L")
    C = spectra.as_matrix(C, "C")
    prof = _as_profile(b)
    _check_dims(L, C, prof)
    n, d = L.shape[0], C.shape[0]
    x0 = _stack(x0, n, d)
    if check:
        rep = (model1_stubborn_hurwitz if model == 1 else model2_stubborn_hurwitz)(L, C, prof)
        if not rep.holds or rep.marginal:
            raise ConditionNotSatisfiedError(
                f"model {model} drift is not Hurwitz (abscissa {rep.details['spectral_abscissa']:.3e})"
            )
    F, BI = stubborn_system(model, L, C, prof)
    return spectra.solve(F, BI @ prof.anchor_vector(x0))
