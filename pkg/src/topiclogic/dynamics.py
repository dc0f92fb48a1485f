"""Network ODE assembly and fixed-step integration.

Both models are linear, ``x' = M x + u``, with ``x`` the stacked opinions
``[x_1; ...; x_n]`` (individual-major, topic-minor):

* Model 1: ``M = -(alpha L kron C + beta I kron (I - C) + B kron I)``
* Model 2: ``M = -(alpha L kron I + beta I kron (I - C) + B kron I)``

and ``u = (B kron I) x(0)``. With ``alpha = beta = 1`` Model 1's matrix is
``-(I + (L - I) kron C + B kron I)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import spectra
from .criteria import StubbornProfile
from .errors import DimensionError, IntegrationError
from .netgraph import SocialGraph

STATIONARY_TOL = 1e-8
BLOWUP = 1e6
RECORD_LIMIT = 10_000
BOX_TOL = 1e-9


@dataclass(frozen=True)
class ModelSystem:
    model: int
    n: int
    d: int
    state_matrix: np.ndarray
    input: np.ndarray
    x0: np.ndarray

    def vector_field(self, x) -> np.ndarray:
        return self.state_matrix @ np.asarray(x, dtype=float) + self.input


def _model_tag(model) -> int:
    tags = {1: 1, 2: 2, "1": 1, "2": 2, "model1": 1, "model2": 2}
    key = model.lower() if isinstance(model, str) else model
    if key not in tags:
        raise ValueError(f"unknown model {model!r}; expected 1 or 2")
    return tags[key]


def assemble(
    model,
    g: SocialGraph,
    C,
    b=None,
    x0=None,
    social_rate: float = 1.0,
    introspection_rate: float = 1.0,
) -> ModelSystem:
    """Build ``x' = M x + u`` for the given model.

    ``b`` may be a :class:`StubbornProfile` or a plain vector (default
    zeros); ``x0`` may be ``n x d`` or stacked. ``social_rate`` and
    ``introspection_rate`` scale the interpersonal and introspective terms.
    """
    tag = _model_tag(model)
    C = spectra.as_matrix(C, "C")
    n, d = g.n, C.shape[0]
    prof = StubbornProfile.zeros(n) if b is None else b
    if not isinstance(prof, StubbornProfile):
        prof = StubbornProfile(np.asarray(prof, dtype=float))
    if prof.n != n:
        raise DimensionError(f"stubbornness has length {prof.n}, graph has {n} nodes")
    if x0 is None:
        x0 = np.zeros(n * d)
    x0 = np.asarray(x0, dtype=float)
    if x0.size != n * d:
        raise DimensionError(f"x0 has {x0.size} entries, expected n*d = {n * d}")
    x0 = x0.reshape(n * d).copy()

    Id, In = np.eye(d), np.eye(n)
    social = spectra.kron(g.laplacian, C if tag == 1 else Id)
    introspective = spectra.kron(In, Id - C)
    BI = spectra.kron(np.diag(prof.b), Id)
    M = -(social_rate * social + introspection_rate * introspective + BI)
    u = BI @ prof.anchor_vector(x0)
    for arr in (M, u, x0):
        arr.setflags(write=False)
    return ModelSystem(tag, n, d, M, u, x0)


def default_dt(sys: ModelSystem) -> float:
    return min(0.01, 0.1 / (1.0 + spectra.inf_norm(sys.state_matrix)))


@dataclass
class Trajectory:
    """Recorded samples of one integration run.

    ``states[k]`` is the stacked state at ``times[k]``. ``terminal_status``
    is ``"converged"``, ``"diverged"`` or ``"max_time"``.
    """

    times: np.ndarray
    states: np.ndarray
    terminal_status: str
    n: int
    d: int
    method: str
    dt: float
    final_derivative_norm: float
    info: dict = field(default_factory=dict)

    @property
    def endpoint(self) -> np.ndarray:
        return self.states[-1]

    @property
    def final_disagreement(self) -> float:
        return disagreement(self.endpoint, self.d)


def _step_operator(M, u, h, method):
    N = M.shape[0]
    if method == "rk4":
        # classical RK4 applied to an affine field collapses to x+ = P x + q
        hM = h * M
        I = np.eye(N)
        hM2 = hM @ hM
        hM3 = hM2 @ hM
        P = I + hM + hM2 / 2.0 + hM3 / 6.0 + (hM3 @ hM) / 24.0
        q = h * ((I + hM / 2.0 + hM2 / 6.0 + hM3 / 24.0) @ u)
        return P, q
    if method in ("expm_step", "expm"):
        aug = np.zeros((N + 1, N + 1))
        aug[:N, :N] = M
        aug[:N, N] = u
        phi = spectra.expm(aug * h)
        return phi[:N, :N], phi[:N, N].copy()
    raise ValueError(f"unknown integration method {method!r}")


def integrate(
    sys: ModelSystem,
    t_end: float,
    dt: float | None = None,
    method: str = "rk4",
    *,
    stationary_tol: float = STATIONARY_TOL,
    blowup: float = BLOWUP,
    record_limit: int = RECORD_LIMIT,
) -> Trajectory:
    """Fixed-step integration from ``sys.x0`` to ``t_end``.

    The step is ``t_end / ceil(t_end / dt)`` so the last sample lands on
    ``t_end``. ``method="expm_step"`` propagates exactly,
    ``x(t+h) = e^{Mh} x(t) + int_0^h e^{Ms} ds u``. Integration stops early
    once ``||x||_inf`` exceeds ``blowup`` (status ``diverged``).

    Raises
    ------
    IntegrationError
        If a non-finite state appears before the blow-up threshold trips.
    """
    if dt is None:
        dt = default_dt(sys)
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not t_end >= dt:
        raise ValueError(f"t_end ({t_end}) must be at least dt ({dt})")
    method = "expm_step" if method == "expm" else method
    nsteps = max(1, math.ceil(t_end / dt - 1e-9))
    h = t_end / nsteps
    P, q = _step_operator(sys.state_matrix, sys.input, h, method)
    stride = max(1, math.ceil(nsteps / (record_limit - 1)))

    x = np.array(sys.x0, dtype=float)
    times = [0.0]
    states = [x.copy()]
    status = None
    for k in range(1, nsteps + 1):
        x = P @ x + q
        peak = np.max(np.abs(x))
        if not np.isfinite(peak):
            raise IntegrationError(f"non-finite state at t = {k * h:.6g}", time=k * h)
        if peak > blowup:
            times.append(k * h)
            states.append(x.copy())
            status = "diverged"
            break
        if k % stride == 0 or k == nsteps:
            times.append(k * h)
            states.append(x.copy())

    states_arr = np.array(states)
    deriv = float(np.max(np.abs(sys.vector_field(states_arr[-1]))))
    if status is None:
        tail = states_arr[-11:]
        change = float(np.max(np.abs(tail - tail[-1]))) if len(tail) > 1 else math.inf
        status = "converged" if deriv < stationary_tol and change < stationary_tol else "max_time"
    return Trajectory(
        times=np.array(times),
        states=states_arr,
        terminal_status=status,
        n=sys.n,
        d=sys.d,
        method=method,
        dt=h,
        final_derivative_norm=deriv,
        info={"steps": nsteps, "stride": stride},
    )


def disagreement(x, d: int) -> float:
    """``max_{i,j} ||x_i - x_j||_inf`` over the ``d``-blocks of ``x``."""
    blocks = np.asarray(x, dtype=float).reshape(-1, d)
    if blocks.shape[0] < 2:
        return 0.0
    return float(np.max(blocks.max(axis=0) - blocks.min(axis=0)))


def disagreement_series(traj: Trajectory) -> np.ndarray:
    blocks = traj.states.reshape(len(traj.times), traj.n, traj.d)
    return np.max(blocks.max(axis=1) - blocks.min(axis=1), axis=1)


def disagreement_decay_rate(traj: Trajectory, floor: float = 1e-11) -> float:
    """Slope of a least-squares line through ``log(disagreement)`` versus time.

    Samples below ``floor`` are dropped (they are round-off). Negative means
    exponential decay; ``nan`` when fewer than three samples remain.
    """
    dis = disagreement_series(traj)
    keep = dis > floor
    if keep.sum() < 3:
        return math.nan
    slope, _ = np.polyfit(traj.times[keep], np.log(dis[keep]), 1)
    return float(slope)


@dataclass(frozen=True)
class BoxReport:
    ok: bool
    worst_excursion: float
    worst_time: float | None


def monitor_box_invariance(traj: Trajectory, a: float, tol: float = BOX_TOL) -> BoxReport:
    """Largest ``(|x_i^k| - a)^+`` over every recorded sample."""
    if not a > 0:
        raise ValueError("box half-width must be positive")
    excess = np.max(np.abs(traj.states), axis=1) - a
    k = int(np.argmax(excess))
    worst = max(0.0, float(excess[k]))
    return BoxReport(worst <= tol, worst, float(traj.times[k]) if worst > 0 else None)
