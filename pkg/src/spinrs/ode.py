"""Explicit Runge-Kutta integrators sampling a prescribed time grid.

The adaptive integrator samples the grid through its continuous extension,
so the step size is governed by the tolerance and not by the grid spacing.

Both integrators accept a ``project`` hook applied after every accepted step
(used to pin zero-sum / unit-determinant invariants) and a ``check`` hook
that may raise to stop integration (used for wall detection). Any
:class:`SingularityError` raised by the field or the hook is converted into
a :class:`BreakdownError` carrying the samples computed so far.
"""

import numpy as np

from .errors import BreakdownError, SingularityError, StepLimitError

# Dormand-Prince 5(4) tableau
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B_HAT = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200,
                   187 / 2100, 1 / 40])
_E = _B - _B_HAT
# continuous extension (Hairer, Norsett & Wanner, II.6): y(t + x h) = y + h K^T P [x, x^2, x^3, x^4]
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408,
     701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


class Stats(dict):
    """Integration counters: steps, rejected, evaluations, max projection correction."""


def _initial_step(f, t0, y0, f0, rtol, atol, direction):
    # Hairer, Norsett & Wanner, II.4
    sc = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean(np.abs(y0 / sc) ** 2))
    d1 = np.sqrt(np.mean(np.abs(f0 / sc) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + direction * h0 * f0
    f1 = f(t0 + direction * h0, y1)
    d2 = np.sqrt(np.mean(np.abs((f1 - f0) / sc) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)


def _partial(t_grid, out, k, exc, t):
    t = t if getattr(exc, "time", None) is None else exc.time
    return BreakdownError(str(exc), time=t, partial=(np.asarray(t_grid[:k]), out[:k].copy()),
                          root=getattr(exc, "root", None))


def dopri5(f, t_grid, y0, rtol=1e-9, atol=1e-12, max_steps=100_000, project=None,
           check=None, h0=None, dense=True):
    """Adaptive Dormand-Prince 5(4) integration of ``y' = f(t, y)``.

    ``t_grid`` must be strictly monotone. With ``dense=True`` step sizes are
    set by the error control alone and grid samples come from the 4th-order
    continuous extension (then projected); with ``dense=False`` steps are
    clipped to land on every grid time.

    Returns
    -------
    ys : ndarray, shape (len(t_grid),) + y0.shape
    stats : Stats
    """
    t_grid = np.asarray(t_grid, dtype=float)
    y = np.array(y0, dtype=complex)
    out = np.empty((len(t_grid),) + y.shape, dtype=complex)
    out[0] = y
    stats = Stats(steps=0, rejected=0, evaluations=0, max_correction=0.0)
    if len(t_grid) == 1:
        return out, stats
    direction = np.sign(t_grid[-1] - t_grid[0])
    if np.any(np.diff(t_grid) * direction <= 0):
        raise ValueError("t_grid must be strictly monotone")

    def fe(t, y):
        stats["evaluations"] += 1
        return f(t, y)

    def proj(y):
        if project is None:
            return y
        y, corr = project(y)
        stats["max_correction"] = max(stats["max_correction"], corr)
        return y

    t = t_grid[0]
    k_next = 0  # the initial state counts as a sample only once it passes the check
    try:
        if check is not None:
            check(t, y)
        k_next = 1
        k1 = fe(t, y)
        h = h0 if h0 is not None else _initial_step(fe, t, y, k1, rtol, atol, direction)
        while k_next < len(t_grid):
            if stats["steps"] >= max_steps:
                raise StepLimitError(f"exceeded {max_steps} steps at t={t:.6g}")
            target = t_grid[-1] if dense else t_grid[k_next]
            step = min(h, abs(target - t))
            hit = step == abs(target - t)
            hs = direction * step
            K = [k1]
            for s in range(1, 7):
                ys = y + hs * sum(a * K[j] for j, a in enumerate(_A[s]) if a != 0)
                K.append(fe(t + _C[s] * hs, ys))
            y_new = ys  # seventh stage point is the 5th-order solution
            err_vec = hs * sum(e * K[j] for j, e in enumerate(_E) if e != 0)
            sc = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            err = np.sqrt(np.mean(np.abs(err_vec / sc) ** 2))
            if err <= 1.0:
                t_new = target if hit else t + hs
                Q = np.tensordot(_P.T, np.array(K), axes=(1, 0))  # (4,) + y.shape
                y_end = proj(y_new)
                # samples inside the step (the endpoint itself is exact)
                while k_next < len(t_grid) and (t_grid[k_next] - t_new) * direction < 0:
                    x = (t_grid[k_next] - t) / hs
                    sample = proj(y + hs * np.tensordot(x ** np.arange(1, 5), Q, axes=1))
                    if check is not None:
                        check(t_grid[k_next], sample)
                    out[k_next] = sample
                    k_next += 1
                t, k1 = t_new, K[6]
                if y_end is not y_new:
                    k1 = fe(t, y_end)
                y = y_end
                if check is not None:
                    check(t, y)
                stats["steps"] += 1
                if k_next < len(t_grid) and t == t_grid[k_next]:
                    out[k_next] = y
                    k_next += 1
                fac = 5.0 if err == 0 else min(5.0, 0.9 * err ** -0.2)
                # keep the proposed step when the last one was clipped to the grid
                h = max(h, step * fac) if hit and step < h else step * fac
            else:
                stats["rejected"] += 1
                h = step * max(0.2, 0.9 * err ** -0.2)
    except SingularityError as exc:
        raise _partial(t_grid, out, k_next, exc, t) from exc
    return out, stats


def rk4(f, t_grid, y0, step, project=None, check=None, max_steps=10_000_000):
    """Classic fixed-step RK4; each grid interval is split into equal substeps."""
    t_grid = np.asarray(t_grid, dtype=float)
    y = np.array(y0, dtype=complex)
    out = np.empty((len(t_grid),) + y.shape, dtype=complex)
    out[0] = y
    stats = Stats(steps=0, rejected=0, evaluations=0, max_correction=0.0)
    k = 0
    t = t_grid[0]
    try:
        if check is not None:
            check(t, y)
        for k in range(1, len(t_grid)):
            span = t_grid[k] - t_grid[k - 1]
            nsub = max(1, int(np.ceil(abs(span) / step - 1e-12)))
            h = span / nsub
            for i in range(nsub):
                t = t_grid[k - 1] + i * h
                k1 = f(t, y)
                k2 = f(t + h / 2, y + h / 2 * k1)
                k3 = f(t + h / 2, y + h / 2 * k2)
                k4 = f(t + h, y + h * k3)
                y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
                stats["evaluations"] += 4
                stats["steps"] += 1
                if stats["steps"] > max_steps:
                    raise StepLimitError(f"exceeded {max_steps} steps")
                if project is not None:
                    y, corr = project(y)
                    stats["max_correction"] = max(stats["max_correction"], corr)
                if check is not None:
                    check(t + h, y)
            out[k] = y
        k = len(t_grid)
    except SingularityError as exc:
        raise _partial(t_grid, out, k, exc, t) from exc
    return out, stats
