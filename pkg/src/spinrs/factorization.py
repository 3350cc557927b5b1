"""Exact solution of the spin RS flow by factorization (every simple root in the span).

The flow of ``f`` from ``(q0, g0)`` is recovered from the factorization

    M(t) = exp(-t kappa Df(g0)) exp(q0) = k(t) exp(u(t)) k(t)^-1,

normalized by ``k(0) = 1`` and ``diag(k^-1 dk/dt) = kappa du/dt``. Then
``q(t) = u(t)`` and ``g(t) = k(t)^-1 g0 k(t)``.

Two backends produce ``k``:

``"eigen"``
    Diagonalize ``M`` at every sample, track eigenvalues continuously, fix
    each eigenvector column by a smooth normalization convention and remove
    the residual diagonal gauge with ``exp(kappa (u - u0) - I(t))`` where
    ``I`` integrates ``diag(x^-1 dx/dt)`` (evaluated from first-order
    eigenvector perturbation theory) by cumulative Simpson quadrature.
``"transport"``
    Integrate the eigenvector frame with zero diagonal connection, so the
    gauge integral vanishes identically.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.optimize import linear_sum_assignment

from .dynamics import RSState, Trajectory
from .errors import (AccuracyError, BreakdownError, ContinuityError,
                     SingularityError)
from .lie import log_diagonal_continuous, matrix_exp
from .ode import dopri5
from .rmatrix import RMatrixSpec, apply_Rpm, first_wall_event

GAP_TOL = 1e-8
QUAD_TOL = 1e-10
FD_EPS = 1e-3
CONVENTIONS = ("unit_diagonal", "unit_norm")
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def build_M(ham, s0, kappa, t):
    """``exp(-t kappa Df(g0)) exp(q0)``."""
    D0 = ham.gradient(s0.g)
    return matrix_exp(-t * kappa * D0) @ np.diag(np.exp(s0.q))


@dataclass
class EigenPath:
    """Continuously tracked eigendecomposition ``M(t) = x(t) diag(d(t)) x(t)^-1``.

    ``gauge_rate`` is ``diag(x^-1 dx/dt)`` and ``log_rate`` is ``d'/d``;
    both are available only when the derivative of ``M`` was supplied.
    """

    times: np.ndarray
    x_plus: np.ndarray
    d: np.ndarray
    gauge_rate: Optional[np.ndarray] = None
    log_rate: Optional[np.ndarray] = None
    det_scale: Optional[np.ndarray] = None
    match_log: list = field(default_factory=list)
    convention: str = "unit_diagonal"
    breakdown: Optional[float] = None

    def truncate(self, k):
        def cut(a):
            return None if a is None else a[:k]
        return EigenPath(self.times[:k], self.x_plus[:k], self.d[:k], cut(self.gauge_rate),
                         cut(self.log_rate), cut(self.det_scale), self.match_log[:k],
                         self.convention, self.breakdown)


def _normalize_columns(V, convention):
    if convention == "unit_diagonal":
        dj = np.diagonal(V)
        if np.abs(dj).min() < 1e-12 * np.abs(V).max():
            raise SingularityError("eigenvector has a vanishing diagonal entry; "
                                   "unit_diagonal convention undefined")
        return V / dj[None, :]
    if convention == "unit_norm":
        V = V / np.linalg.norm(V, axis=0)[None, :]
        dj = np.diagonal(V)
        if np.abs(dj).min() < 1e-12:
            raise SingularityError("eigenvector has a vanishing diagonal entry; "
                                   "unit_norm convention undefined")
        return V / (dj / np.abs(dj))[None, :]
    raise ValueError(f"unknown convention {convention!r}")


def _gauge_rate(X, d, Mdot, convention):
    """``diag(x^-1 dx/dt)`` (traceless part) and ``d'/d`` for a given convention."""
    A = np.linalg.solve(X, Mdot @ X)
    ddot = np.diagonal(A).copy()
    gap = d[None, :] - d[:, None]
    np.fill_diagonal(gap, 1)
    C = A / gap
    np.fill_diagonal(C, 0)
    XC = X @ C
    if convention == "unit_diagonal":
        c = -np.diagonal(XC) / np.diagonal(X)
    else:
        w = np.einsum("ij,ij->j", X.conj(), XC)
        c = -w.real - 1j * (np.diagonal(XC) / np.diagonal(X)).imag
    return c - c.mean(), ddot / d


def _det_scale(X, previous):
    m = X.shape[0]
    root = np.linalg.det(X) ** (-1.0 / m)
    if previous is None:
        return root
    cands = root * np.exp(2j * np.pi * np.arange(m) / m)
    return cands[np.argmin(np.abs(cands - previous))]


def _match(w, reference, t):
    """Assign eigenvalues ``w`` to ``reference`` by log distance, with an audit."""
    cost = np.abs(np.log(w[None, :] / reference[:, None]))
    rows, cols = linear_sum_assignment(cost)
    assigned = cost[rows, cols]
    if assigned.max() >= 0.5:
        raise ContinuityError(f"eigenvalue moved by log distance {assigned.max():.3g} "
                              f"at t={t:.6g}; refine the grid")
    if len(w) > 1:
        other = cost.copy()
        other[rows, cols] = np.inf
        second = other.min(axis=1)
        if np.any(second <= 2 * assigned):
            raise ContinuityError(f"ambiguous eigenvalue assignment at t={t:.6g}; refine the grid")
    return cols, float(assigned.max())


def _eigen_point(Mt, Mdot, reference, t, convention, gap_tol, prev_scale):
    w, V = np.linalg.eig(Mt)
    rel_gap = np.abs(w[:, None] - w[None, :]) / np.abs(w).max()
    np.fill_diagonal(rel_gap, np.inf)
    if rel_gap.min() < gap_tol:
        # the colliding pair cannot be matched to the tracked order reliably
        raise BreakdownError(f"eigenvalue collision at t={t:.6g}", time=t)
    order, dist = _match(w, reference, t)
    d = w[order]
    X = _normalize_columns(V[:, order], convention)
    scale = _det_scale(X, prev_scale)
    rate = lograte = None
    if Mdot is not None:
        rate, lograte = _gauge_rate(X, d, Mdot, convention)
    return X * scale, d, rate, lograte, scale, (order.tolist(), dist)


def eigen_path(M, t_grid, Mdot=None, anchor=None, convention="unit_diagonal",
               gap_tol=GAP_TOL):
    """Track the eigendecomposition of ``M(t)`` along ``t_grid``.

    Parameters
    ----------
    M : callable
        ``t -> (m, m)`` matrix.
    Mdot : callable, optional
        ``t -> dM/dt``; enables the analytic gauge rate and first-order
        eigenvalue prediction between samples.
    anchor : array_like, optional
        Eigenvalues at ``t_grid[0]`` fixing the initial ordering. With
        ``M(t0)`` diagonal and ``anchor`` its diagonal, ``x(t0) = I``.

    On an eigenvalue collision the path computed so far is returned with
    ``breakdown`` set.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    m = M(t_grid[0]).shape[0]
    T = len(t_grid)
    xs = np.empty((T, m, m), dtype=complex)
    ds = np.empty((T, m), dtype=complex)
    rates = np.empty((T, m), dtype=complex) if Mdot is not None else None
    lograte = np.empty((T, m), dtype=complex) if Mdot is not None else None
    scales = np.empty(T, dtype=complex)
    log = []
    path = EigenPath(t_grid, xs, ds, rates, lograte, scales, log, convention)
    reference = None if anchor is None else np.asarray(anchor, dtype=complex)
    prev_scale = None
    for k, t in enumerate(t_grid):
        Mt = M(t)
        if reference is None:
            reference = np.linalg.eigvals(Mt)
        elif k > 0 and lograte is not None:
            reference = ds[k - 1] * np.exp(lograte[k - 1] * (t - t_grid[k - 1]))
        elif k > 0:
            reference = ds[k - 1]
        try:
            x, d, rate, lr, scale, entry = _eigen_point(
                Mt, None if Mdot is None else Mdot(t), reference, t, convention, gap_tol,
                prev_scale)
        except BreakdownError as exc:
            path = path.truncate(k)
            path.breakdown = exc.time
            path.match_log.append({"breakdown": exc.time, "root": exc.root})
            return path
        xs[k], ds[k], scales[k] = x, d, scale
        if rates is not None:
            rates[k], lograte[k] = rate, lr
        prev_scale = scale
        log.append({"t": float(t), "perm": entry[0], "log_step": entry[1]})
    return path


def _cumulative(values, times):
    if len(times) < 3:
        if len(times) < 2:
            return np.zeros_like(values)
        return np.concatenate([np.zeros_like(values[:1]),
                               0.5 * (values[1:] + values[:-1]) * np.diff(times)[:, None]])
    if times[-1] < times[0]:
        # decreasing grid: integrate in s = -t
        return -_cumulative(values, -times)
    # cumulative_simpson casts complex input to real
    re = cumulative_simpson(values.real, x=times, axis=0, initial=0)
    if np.iscomplexobj(values):
        return re + 1j * cumulative_simpson(values.imag, x=times, axis=0, initial=0)
    return re


def gauge_correct(path, u0, kappa=0.5, u=None, include_integral=True):
    """Diagonal gauge fix ``k = x exp(kappa (u - u0) - I(t))`` along an eigen path.

    Returns
    -------
    k_plus : ndarray, shape (T, m, m)
    integral : ndarray, shape (T, m)
    """
    if path.gauge_rate is None:
        raise ValueError("path has no gauge rate; build it with Mdot")
    if u is None:
        u, _ = log_diagonal_continuous(path.d, u0)
    integral = _cumulative(path.gauge_rate, path.times) if include_integral \
        else np.zeros_like(path.gauge_rate)
    expo = kappa * (u - np.asarray(u0)) - integral
    k_plus = path.x_plus * np.exp(expo)[:, None, :]
    return k_plus, integral


@dataclass
class FactorizationResult:
    traj: Trajectory
    k_plus: np.ndarray
    u_path: np.ndarray
    breakdown: Optional[float] = None
    breakdown_root: Optional[tuple] = None
    backend: str = "eigen"
    diagnostics: dict = field(default_factory=dict)
    kappa: float = 0.5
    k_plus_at: Optional[Callable] = field(default=None, repr=False)
    spec: object = field(default=None, repr=False)


def _refined(t_grid, factor):
    pieces = [np.linspace(a, b, factor + 1)[:-1] for a, b in zip(t_grid[:-1], t_grid[1:])]
    return np.concatenate(pieces + [t_grid[-1:]])


def solve(spec, ham, s0, t_grid, backend="eigen", convention="unit_diagonal",
          gauge_integral=True, quad_tol=QUAD_TOL, max_refine=6, gap_tol=GAP_TOL,
          ode_rtol=1e-12):
    """Solve the flow of ``ham`` from ``s0`` by factorization, sampled on ``t_grid``.

    ``gauge_integral=False`` drops the diagonal gauge integral (an ablation
    that breaks the normalization of ``k``; useful only as a negative control).

    A collision before the end of the grid yields a partial result with
    ``breakdown`` set.
    """
    if not spec.is_full:
        raise ValueError("factorization is implemented only when every simple root is in the span")
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid[0] != 0 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must start at 0 and be strictly increasing")
    kappa = spec.k_scale
    D0 = ham.gradient(s0.g)
    u0 = np.asarray(s0.q)
    expu0 = np.exp(u0)
    real = np.isrealobj(s0.q)
    if backend == "eigen":
        res = _solve_eigen(spec, D0, kappa, s0, t_grid, convention, gauge_integral, quad_tol,
                           max_refine, gap_tol)
    elif backend == "transport":
        res = _solve_transport(spec, D0, kappa, s0, t_grid, ode_rtol)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    times, u, k_plus, k_at, diag, bd, bd_root = res

    if real and len(u) and np.abs(u.imag).max() < 1e-9 * max(1, np.abs(u).max()):
        u = u.real
    # eigenvalues may pass through each other smoothly; the flow still ends at the wall
    event = first_wall_event(spec, times, u)
    if event is not None:
        k, bd, bd_root = event
        times, u, k_plus = times[:k], u[:k], k_plus[:k]
    gs = np.linalg.solve(k_plus, s0.g[None] @ k_plus) if len(times) else k_plus.copy()
    if len(times):
        u[0] = s0.q
        k_plus[0] = np.eye(len(u0))
        gs[0] = s0.g
    meta = {"solver": f"factorization/{backend}", "kappa": kappa, "convention": convention
            if backend == "eigen" else None, "gauge_integral": gauge_integral}
    traj = Trajectory(times, u, gs, meta=meta, breakdown=bd)
    diag.update(breakdown=bd)
    return FactorizationResult(traj, k_plus, u, bd, bd_root, backend, diag, kappa, k_at, spec)


def _solve_eigen(spec, D0, kappa, s0, t_grid, convention, gauge_integral, quad_tol,
                 max_refine, gap_tol):
    u0 = np.asarray(s0.q, dtype=complex)
    E0 = np.diag(np.exp(u0))

    def M(t):
        return matrix_exp(-t * kappa * D0) @ E0

    def Mdot(t):
        return -kappa * D0 @ M(t)

    factor = 2
    last_err = None
    for _ in range(max_refine):
        fine = _refined(t_grid, factor)
        try:
            path = eigen_path(M, fine, Mdot, anchor=np.exp(u0), convention=convention,
                              gap_tol=gap_tol)
        except ContinuityError as exc:
            last_err = exc
            factor *= 2
            continue
        # keep an odd number of fine samples ending on a coarse grid point
        usable = len(path.times)
        n_coarse = (usable - 1) // factor + 1
        keep = (n_coarse - 1) * factor + 1
        if keep < 1:
            keep = 1
        path = path.truncate(keep) if keep < usable else path
        u, removed = log_diagonal_continuous(path.d, u0)
        if np.abs(removed).max() > 1e-8:
            raise ContinuityError(f"log of a unit-determinant path has trace {removed.max():.3g}")
        rate = path.gauge_rate
        I_fine = _cumulative(rate, path.times)
        I_half = _cumulative(rate[::2], path.times[::2])
        est = np.abs(I_fine[::2] - I_half).max() / 15 if len(path.times) >= 5 else 0.0
        if est <= quad_tol or not gauge_integral:
            break
        last_err = AccuracyError(f"gauge quadrature error {est:.3g} exceeds {quad_tol}",
                                 suggested_refinement=2 * factor)
        factor *= 2
    else:
        raise last_err

    k_fine, integral = gauge_correct(path, u0, kappa, u=u, include_integral=gauge_integral)
    sel = slice(None, None, factor)
    times = path.times[sel]
    bd = path.breakdown
    bd_root = None
    if bd is not None:
        bd_root = path.match_log[-1].get("root")
    diag = {"grid_factor": factor, "quadrature_error": float(est),
            "fine_samples": len(path.times), "log_trace_removed": float(np.abs(removed).max()),
            "det_branch": "nearest continuous (n+1)-th root, principal at t=0"}
    diag["max_log_step"] = max((e["log_step"] for e in path.match_log if "log_step" in e),
                               default=0.0)

    ref = {"t": path.times, "d": path.d, "u": u, "I": integral, "scale": path.det_scale,
           "rate": path.log_rate}

    def k_at(t):
        return _eigen_k_at(t, ref, M, Mdot, u0, kappa, convention, gauge_integral)

    return times, u[sel], k_fine[sel], k_at, diag, bd, bd_root


def _eigen_k_at(t, ref, M, Mdot, u0, kappa, convention, gauge_integral):
    k = int(np.argmin(np.abs(ref["t"] - t)))
    tk = ref["t"][k]

    def point(s):
        pred = ref["d"][k] * np.exp(ref["rate"][k] * (s - tk))
        x, d, rate, _, _, _ = _eigen_point(M(s), Mdot(s), pred, s, convention, 0.0,
                                           ref["scale"][k])
        return x, d, rate

    x, d, _ = point(t)
    raw = np.log(d)
    turns = np.round((ref["u"][k].imag - raw.imag) / (2 * np.pi))
    u = raw + 2j * np.pi * turns
    u = u - u.mean()
    I = ref["I"][k].copy()
    if gauge_integral and t != tk:
        half = (t - tk) / 2
        for node, weight in zip(_GL_NODES, _GL_WEIGHTS):
            I = I + weight * half * point(tk + half * (node + 1))[2]
    elif not gauge_integral:
        I = np.zeros_like(I)
    return x * np.exp(kappa * (u - u0) - I)[None, :], u


def _transport_field(D0, kappa, wall_tol, m):
    def f(t, y):
        X = y[:m * m].reshape(m, m)
        u = y[m * m:]
        B = np.linalg.solve(X, D0 @ X)
        a = u[:, None] - u[None, :]
        denom = 1 - np.exp(a)
        np.fill_diagonal(denom, 1)
        if np.abs(a[~np.eye(m, dtype=bool)]).min() < wall_tol:
            i, j = np.unravel_index(np.argmin(np.abs(a) + np.eye(m) * np.inf), a.shape)
            raise SingularityError(f"eigenvalue collision at t={t:.6g}", root=(int(i), int(j)),
                                   time=t)
        C = -kappa * B / denom
        np.fill_diagonal(C, 0)
        return np.concatenate([(X @ C).ravel(), -kappa * np.diagonal(B)])
    return f


def _det_project(m):
    def project(y):
        X = y[:m * m].reshape(m, m)
        det = np.linalg.det(X)
        return np.concatenate([(X / det ** (1.0 / m)).ravel(), y[m * m:]]), abs(det - 1)
    return project


def _solve_transport(spec, D0, kappa, s0, t_grid, rtol):
    m = len(s0.q)
    u0 = np.asarray(s0.q, dtype=complex)
    f = _transport_field(D0, kappa, spec.wall_tol, m)
    y0 = np.concatenate([np.eye(m, dtype=complex).ravel(), u0])
    bd = bd_root = None
    try:
        ys, stats = dopri5(f, t_grid, y0, rtol=rtol, atol=rtol * 1e-2, project=_det_project(m))
    except BreakdownError as exc:
        times, ys = exc.partial
        bd, bd_root = exc.time, exc.root
        stats = {}
    else:
        times = t_grid
    X = ys[:, :m * m].reshape(-1, m, m)
    u = ys[:, m * m:]
    u = u - u.mean(axis=1, keepdims=True)
    k_plus = X * np.exp(kappa * (u - u0))[:, None, :]
    diag = {"ode_steps": stats.get("steps"), "ode_rtol": rtol}

    def k_at(t):
        k = int(np.argmin(np.abs(times - t)))
        if times[k] == t:
            return k_plus[k], u[k]
        y_start = np.concatenate([X[k].ravel(), u[k]])
        y, _ = dopri5(f, [times[k], t], y_start, rtol=rtol, atol=rtol * 1e-2)
        Xt = y[-1, :m * m].reshape(m, m)
        ut = y[-1, m * m:]
        return Xt * np.exp(kappa * (ut - u0))[None, :], ut

    return times, u, k_plus, k_at, diag, bd, bd_root


def factorization_residual(result, ham, s0, kappa=None, eps=FD_EPS):
    """Consistency residuals of a factorization result.

    Returns a dict with

    ``factorization``
        ``max_t |exp(-t kappa Df(g0)) exp(q0) - k exp(u) k^-1|_F``;
    ``theta``
        ``max_t |k_+ k_-^-1 - exp(-t kappa Df(g0))|_F`` where
        ``k_- = exp(q0) k_+ exp(-u)``;
    ``gauge_condition``
        ``max_t |diag(k^-1 dk/dt) - kappa du/dt|`` with derivatives from a
        five-point stencil on independently recomputed ``k`` and ``u``;
    ``gauge_condition_integrated``
        the same defect integrated in time;
    ``constructive_ode``
        ``max_t |k^-1 dk/dt + 1/2 R^+(u) Df(g)|_F`` (the defining ODE of ``k``).
    """
    kappa = result.kappa if kappa is None else kappa
    D0 = ham.gradient(s0.g)
    E0 = np.diag(np.exp(s0.q))
    traj = result.traj
    fac = theta = 0.0
    for t, k, u in zip(traj.times, result.k_plus, traj.q):
        expD = matrix_exp(-t * kappa * D0)
        recon = k @ np.diag(np.exp(u)) @ np.linalg.inv(k)
        fac = max(fac, np.linalg.norm(expD @ E0 - recon))
        k_minus = E0 @ k @ np.diag(np.exp(-np.asarray(u)))
        theta = max(theta, np.linalg.norm(k @ np.linalg.inv(k_minus) - expD))
    out = {"factorization": float(fac), "theta": float(theta)}
    if result.k_plus_at is not None and len(traj) > 0:
        spec = result.spec if result.spec is not None else RMatrixSpec(len(s0.q) - 1)
        if spec.k_scale != kappa:
            spec = RMatrixSpec(spec.n, spec.subset, kappa, spec.wall_tol)
        defects = []
        ode = 0.0
        for t, k, u, g in zip(traj.times, result.k_plus, traj.q, traj.g):
            samples = [result.k_plus_at(t + s * eps) for s in (-2, -1, 1, 2)]
            ks = [s[0] for s in samples]
            us = [s[1] for s in samples]
            kdot = (ks[0] - 8 * ks[1] + 8 * ks[2] - ks[3]) / (12 * eps)
            udot = (us[0] - 8 * us[1] + 8 * us[2] - us[3]) / (12 * eps)
            left = np.linalg.solve(k, kdot)
            dg = np.diagonal(left)
            defects.append(dg - dg.mean() - kappa * udot)
            target = -0.5 * apply_Rpm(spec, np.asarray(u), ham.gradient(g), +1)
            ode = max(ode, np.linalg.norm(left - target))
        defects = np.array(defects)
        out["gauge_condition"] = float(np.abs(defects).max())
        out["gauge_condition_integrated"] = float(
            np.abs(_cumulative(defects, traj.times)).max())
        out["constructive_ode"] = float(ode)
    out["max"] = max(v for v in out.values())
    return out
