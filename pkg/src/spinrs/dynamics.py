"""Spin Ruijsenaars-Schneider equations of motion on the gauge bundle.

With the half-rescaled bracket the flow of ``f(g)`` at ``(q, g, q)`` is

    dq/dt = -1/2 diag(Df(g)),
    dg/dt = 1/2 [R(q) Df(g)] g - 1/2 g [R(q) Df(g)].
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import BreakdownError, InvariantError, SingularityError
from .hamiltonian import HamiltonianSpec
from .lie import cartan_vector, group_element, power_traces
from .ode import dopri5, rk4
from .rmatrix import apply_R, check_regular, phi_matrix

__all__ = ["RSState", "Trajectory", "IntegratorConfig", "HamiltonianSpec",
           "eom_field", "eom_componentwise", "integrate", "conserved_report"]

CORRECTION_LIMIT = 1e-6


@dataclass(frozen=True, eq=False)
class RSState:
    """A point ``(q, g, q)`` of the gauge bundle."""

    q: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q)
        real = np.isrealobj(q)
        object.__setattr__(self, "q", cartan_vector(q, real=real))
        object.__setattr__(self, "g", group_element(self.g))
        if self.g.shape[0] != len(self.q):
            raise ValueError("q and g sizes differ")

    @property
    def n(self):
        return len(self.q) - 1

    def is_hermitian(self, tol=1e-12):
        return (np.abs(np.imag(self.q)).max() <= tol
                and np.abs(self.g - self.g.conj().T).max() <= tol)


@dataclass
class Trajectory:
    """Sampled solution curve with the power traces ``tr g^k`` per sample."""

    times: np.ndarray
    q: np.ndarray
    g: np.ndarray
    conserved: np.ndarray = None
    meta: dict = field(default_factory=dict)
    breakdown: float = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        if self.conserved is None:
            self.conserved = conserved_quantities(self.g)

    def __len__(self):
        return len(self.times)

    def state(self, k):
        return RSState(self.q[k], self.g[k])

    @property
    def states(self):
        return [self.state(k) for k in range(len(self))]


def conserved_quantities(gs):
    gs = np.asarray(gs)
    if len(gs) == 0:
        return np.zeros((0, 0), dtype=complex)
    n = gs.shape[-1] - 1
    return np.array([power_traces(g, n) for g in gs])


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk45"
    rtol: float = 1e-9
    atol: float = 1e-12
    step: float = 1e-3
    max_steps: int = 1_000_000
    wall_tol: float = 1e-8

    def __post_init__(self):
        if self.method not in ("rk45", "rk4"):
            raise ValueError(f"unknown method {self.method!r}")
        if min(self.rtol, self.atol, self.step, self.wall_tol) <= 0:
            raise ValueError("tolerances and step must be positive")


def eom_field(spec, ham, s):
    """Velocity ``(dq, dg)`` of the flow generated by ``ham`` at state ``s``."""
    D = ham.gradient(s.g)
    RD = apply_R(spec, s.q, D)
    dq = -0.5 * np.diagonal(D)
    dg = 0.5 * (RD @ s.g - s.g @ RD)
    return dq - dq.mean(), dg


def eom_componentwise(spec, s):
    """Componentwise equations for ``f = tr`` with every root in the span.

    Literal loops over indices; returns ``(d2q/dt2, dg/dt)``.
    """
    if not spec.is_full:
        raise ValueError("componentwise equations need the full set of simple roots")
    check_regular(spec, s.q)
    q, g = s.q, s.g
    m = len(q)

    def coth(x):
        return 1 / np.tanh(x)

    ddq = np.zeros(m, dtype=complex)
    for i in range(m):
        for k in range(m):
            if k != i:
                ddq[i] += 0.25 * coth((q[i] - q[k]) / 2) * g[i, k] * g[k, i]
    dg = np.zeros((m, m), dtype=complex)
    for i in range(m):
        for j in range(m):
            if i == j:
                continue
            val = 0.25 * coth((q[i] - q[j]) / 2) * g[i, j] * (g[i, i] - g[j, j])
            for k in range(m):
                if k != i and k != j:
                    val += 0.25 * (coth((q[k] - q[j]) / 2) - coth((q[i] - q[k]) / 2)) \
                        * g[i, k] * g[k, j]
            dg[i, j] = val
    # diagonal from d2q_i/dt2 = -1/2 dg_ii/dt
    for i in range(m):
        dg[i, i] = -2 * ddq[i]
    return ddq, dg


def _pack(q, g):
    return np.concatenate([np.asarray(q, dtype=complex), np.asarray(g, dtype=complex).ravel()])


def _unpack(y, m):
    return y[:m], y[m:].reshape(m, m)


def _project(m):
    def project(y):
        q, g = _unpack(y, m)
        s = q.sum()
        det = np.linalg.det(g)
        corr = max(abs(s), abs(det - 1))
        if corr > CORRECTION_LIMIT:
            raise InvariantError(f"single-step invariant correction {corr:.3g} exceeds "
                                 f"{CORRECTION_LIMIT}")
        return _pack(q - s / m, g / det ** (1.0 / m)), corr
    return project


def integrate(spec, ham, s0, t_grid, cfg=None):
    """Integrate the equations of motion and sample them on ``t_grid``.

    Raises
    ------
    BreakdownError
        When ``q`` comes within ``cfg.wall_tol`` of a wall; ``exc.partial``
        holds the trajectory up to the last completed sample.
    """
    cfg = cfg or IntegratorConfig()
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    m = len(s0.q)
    real_q = np.isrealobj(s0.q)
    wall_spec = spec if spec.wall_tol == cfg.wall_tol else \
        type(spec)(spec.n, spec.subset, spec.k_scale, cfg.wall_tol)

    def f(t, y):
        q, g = _unpack(y, m)
        D = ham.gradient(g)
        RD = -phi_matrix(wall_spec, q) * D
        dq = -0.5 * np.diagonal(D)
        return _pack(dq - dq.mean(), 0.5 * (RD @ g - g @ RD))

    mask = wall_spec._mask
    last = {}

    def check(t, y):
        q = y[:m]
        try:
            check_regular(wall_spec, q)
        except SingularityError as exc:
            exc.time = t
            raise
        # a step may jump across a wall without sampling near it (e.g. diagonal g)
        a = (q[:, None] - q[None, :]).real
        if "a" in last and real_q:
            crossed = mask & (np.sign(a) != np.sign(last["a"]))
            if crossed.any():
                i, j = (int(v) for v in np.argwhere(crossed)[0])
                a0, a1 = last["a"][i, j], a[i, j]
                tc = last["t"] + (t - last["t"]) * a0 / (a0 - a1)
                raise SingularityError(f"q crossed the wall of root ({i}, {j}) near t={tc:.6g}",
                                       root=(i, j), time=tc)
        last["a"], last["t"] = a, t

    y0 = _pack(s0.q, s0.g)
    meta = {"solver": cfg.method, "rtol": cfg.rtol, "atol": cfg.atol,
            "step": cfg.step if cfg.method == "rk4" else None}
    try:
        if cfg.method == "rk45":
            ys, stats = dopri5(f, t_grid, y0, cfg.rtol, cfg.atol, cfg.max_steps,
                               project=_project(m), check=check)
        else:
            ys, stats = rk4(f, t_grid, y0, cfg.step, project=_project(m), check=check,
                            max_steps=cfg.max_steps)
    except BreakdownError as exc:
        times, ys = exc.partial
        exc.partial = _trajectory(times, ys, m, real_q, dict(meta, breakdown=exc.time))
        exc.partial.breakdown = exc.time
        raise
    meta.update(stats)
    return _trajectory(t_grid, ys, m, real_q, meta)


def _trajectory(times, ys, m, real_q, meta):
    qs = ys[:, :m]
    gs = ys[:, m:].reshape(len(ys), m, m)
    if real_q and (len(qs) == 0 or np.abs(qs.imag).max() < 1e-9 * max(1, np.abs(qs).max())):
        qs = qs.real
    return Trajectory(times, qs, gs, meta=meta)


def _matched_spectrum_distance(ev0, ev):
    cost = np.abs(ev0[:, None] - ev[None, :])
    r, c = linear_sum_assignment(cost)
    return cost[r, c].max()


def conserved_report(traj):
    """Maximal drifts of the first integrals along a trajectory.

    Returns
    -------
    dict
        ``power_traces``: per ``k`` the maximal ``|tr g(t)^k - tr g0^k|``
        relative to ``max(1, |tr g0^k|)``; ``spectrum``: maximal displacement
        of the (optimally matched) eigenvalues of ``g``.
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    c = traj.conserved
    scale = np.maximum(1.0, np.abs(c[0]))
    drift = (np.abs(c - c[0]) / scale).max(axis=0)
    ev0 = np.linalg.eigvals(traj.g[0])
    spec = max(_matched_spectrum_distance(ev0, np.linalg.eigvals(g)) for g in traj.g)
    return {"power_traces": drift, "spectrum": float(spec)}
