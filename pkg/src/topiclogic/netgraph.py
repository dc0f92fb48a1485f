"""Weighted digraphs, Laplacians and leader-block certification.

Convention: ``adjacency[i, j] > 0`` means individual ``i`` listens to
individual ``j`` (edge ``j -> i``). The Laplacian is
``L = diag(A 1) - A``, so every row of ``L`` sums to zero.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components

from . import spectra
from .errors import DimensionError, GraphError, NoSpanningTreeError, NonFiniteError

ZERO_EIG_TOL = 1e-8
GAMMA_ZERO_TOL = 1e-10


@dataclass(frozen=True)
class SocialGraph:
    adjacency: np.ndarray
    laplacian: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    def scaled(self, alpha: float) -> "SocialGraph":
        """A new graph with every edge weight multiplied by ``alpha > 0``."""
        if not alpha > 0:
            raise GraphError(f"edge scaling must be positive, got {alpha}")
        return build_graph(alpha * self.adjacency)

    def in_neighbours(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[i] > 0)


def _laplacian(adjacency: np.ndarray) -> np.ndarray:
    lap = -adjacency.copy()
    # diagonal set as the sum of the negated row, so row sums cancel exactly
    # up to the summation order of the same terms
    np.fill_diagonal(lap, 0.0)
    np.fill_diagonal(lap, -lap.sum(axis=1))
    return lap


def build_graph(adjacency) -> SocialGraph:
    """Validate an adjacency matrix and assemble its Laplacian.

    Zero diagonal is required, not enforced silently.
    """
    try:
        a = spectra.as_matrix(adjacency, "adjacency")
    except (DimensionError, NonFiniteError) as exc:
        raise GraphError(str(exc)) from exc
    if np.any(a < 0):
        i, j = np.argwhere(a < 0)[0]
        raise GraphError(f"negative weight {a[i, j]} at ({i}, {j})")
    diag = np.diag(a)
    if np.any(diag != 0):
        i = int(np.flatnonzero(diag)[0])
        raise GraphError(f"nonzero diagonal entry {diag[i]} at ({i}, {i})")
    a = a.copy()
    a.setflags(write=False)
    lap = _laplacian(a)
    lap.setflags(write=False)
    return SocialGraph(a, lap)


def graph_from_laplacian(laplacian) -> SocialGraph:
    """Recover the graph whose Laplacian is ``laplacian``.

    Rows must sum to zero (to 1e-12 relative) and off-diagonals be nonpositive.
    """
    lap = spectra.as_matrix(laplacian, "laplacian")
    adj = -lap.copy()
    np.fill_diagonal(adj, 0.0)
    g = build_graph(adj)
    if np.max(np.abs(g.laplacian - lap)) > 1e-12 * (1.0 + spectra.inf_norm(lap)):
        raise GraphError("laplacian rows do not sum to zero")
    return g


def strongly_connected_components(g: SocialGraph) -> list[list[int]]:
    """SCCs as sorted node lists, ordered by their smallest node id."""
    # csgraph edge u->v is entry [u, v]; our edge j->i is adjacency[i, j]
    ncomp, labels = connected_components(g.adjacency.T > 0, directed=True, connection="strong")
    comps = [sorted(np.flatnonzero(labels == c).tolist()) for c in range(ncomp)]
    return sorted(comps, key=lambda c: c[0])


def closed_components(g: SocialGraph) -> list[list[int]]:
    """SCCs that receive no edge from outside themselves (sources of the condensation)."""
    closed = []
    for comp in strongly_connected_components(g):
        inside = np.zeros(g.n, dtype=bool)
        inside[comp] = True
        incoming = g.adjacency[np.ix_(comp, np.flatnonzero(~inside))]
        if not np.any(incoming > 0):
            closed.append(comp)
    return closed


def reachable_from(g: SocialGraph, sources) -> set[int]:
    """All nodes reachable by directed paths from ``sources`` (sources included)."""
    seen = set(int(s) for s in sources)
    queue = deque(seen)
    out = g.adjacency.T > 0  # out[j, i]: edge j -> i
    while queue:
        j = queue.popleft()
        for i in np.flatnonzero(out[j]):
            i = int(i)
            if i not in seen:
                seen.add(i)
                queue.append(i)
    return seen


@dataclass(frozen=True)
class GraphCertificate:
    """Structural facts about a graph.

    ``permutation`` lists original node ids with the leader block first; it
    is never applied to the stored matrices. ``r`` and ``gamma`` are None
    without a spanning tree.
    """

    has_spanning_tree: bool
    r: int | None
    leaders: tuple[int, ...]
    permutation: tuple[int, ...]
    gamma: np.ndarray | None
    closed_components: tuple[tuple[int, ...], ...]
    laplacian_eigenvalues: np.ndarray
    spectral_zero_count: int

    def require_spanning_tree(self):
        if not self.has_spanning_tree:
            comps = [list(c) for c in self.closed_components]
            raise NoSpanningTreeError(f"graph has no directed spanning tree; closed components {comps}")


def _left_null_vector(block: np.ndarray) -> np.ndarray:
    # smallest right singular vector of block.T is the left null vector of block
    _, s, vt = np.linalg.svd(block.T)
    v = vt[-1]
    v = v / v.sum()
    return v


def certify_graph(g: SocialGraph) -> GraphCertificate:
    """Decide spanning-tree existence combinatorially and extract ``gamma``.

    A spanning tree exists iff the condensation has exactly one source
    component; that component is the leader block. The spectral count of
    zero Laplacian eigenvalues is computed as a cross-check.

    Raises
    ------
    NoSpanningTreeError
        When the combinatorial and spectral verdicts disagree (the zero
        eigenvalue is not simple to tolerance although a root exists).
    """
    closed = closed_components(g)
    eigs = spectra.eigvals(g.laplacian)
    zero_count = int(np.sum(np.abs(eigs) < ZERO_EIG_TOL))
    has_tree = len(closed) == 1
    if has_tree != (zero_count == 1):
        raise NoSpanningTreeError(
            f"spanning-tree inconsistency: {len(closed)} closed component(s) but "
            f"{zero_count} Laplacian eigenvalue(s) within {ZERO_EIG_TOL:g} of 0"
        )
    closed_t = tuple(tuple(c) for c in closed)
    if not has_tree:
        return GraphCertificate(False, None, (), tuple(range(g.n)), None, closed_t, eigs, zero_count)

    leaders = closed[0]
    followers = [i for i in range(g.n) if i not in set(leaders)]
    gamma = np.zeros(g.n)
    gamma[leaders] = _left_null_vector(g.laplacian[np.ix_(leaders, leaders)])
    if np.any(gamma[leaders] <= GAMMA_ZERO_TOL):
        raise NoSpanningTreeError("leader-block left null vector is not strictly positive")
    return GraphCertificate(
        True, len(leaders), tuple(leaders), tuple(leaders + followers), gamma, closed_t, eigs, zero_count
    )


def permuted_laplacian(g: SocialGraph, cert: GraphCertificate) -> np.ndarray:
    """Copy of ``L`` reordered by ``cert.permutation`` (leader block first)."""
    p = list(cert.permutation)
    return g.laplacian[np.ix_(p, p)]


def oblivious_set(g: SocialGraph, b) -> set[int]:
    """Individuals with ``b_i = 0`` that no stubborn individual reaches.

    An empty result is the network-wide "no oblivious individuals" reading
    of the leader-stubbornness hypothesis; see :func:`leader_stubborn` for the
    leader-block form.
    """
    b = np.asarray(b, dtype=float)
    if b.shape != (g.n,):
        raise DimensionError(f"stubbornness has shape {b.shape}, expected ({g.n},)")
    stubborn = np.flatnonzero(b > 0)
    influenced = reachable_from(g, stubborn)
    return {i for i in range(g.n) if i not in influenced}


def leader_stubborn(cert: GraphCertificate, b) -> bool:
    """Whether some leader-block individual has ``b_j > 0``."""
    if not cert.has_spanning_tree:
        return False
    b = np.asarray(b, dtype=float)
    return bool(np.any(b[list(cert.leaders)] > 0))
