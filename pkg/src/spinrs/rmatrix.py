"""Hyperbolic dynamical r-matrices on sl(n+1) attached to a subset of simple roots.

For a subset ``pi'`` of the simple roots,

    (R(q) X)_ij = -phi_ij(q) X_ij,    i != j,

with ``phi_ij = coth((q_i - q_j)/2) / 2`` for roots in the span of ``pi'`` and
``phi_ij = +1/2`` (``-1/2``) for the remaining positive (negative) roots. The
diagonal of ``R(q) X`` is zero. ``R(q)`` satisfies the modified dynamical
Yang-Baxter equation with ``K = kappa * id`` and ``kappa = 1/2``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, SingularityError
from .lie import SimpleSubset, commutator, proj_cartan

WALL_TOL = 1e-8


@dataclass(frozen=True)
class RMatrixSpec:
    """Parameters of the r-matrix: rank, subset of simple roots, ``K`` scale."""

    n: int
    subset: SimpleSubset = None
    k_scale: float = 0.5
    wall_tol: float = WALL_TOL
    _mask: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.subset is None:
            object.__setattr__(self, "subset", SimpleSubset.full(self.n))
        if self.subset.n != self.n:
            raise DimensionError(f"subset is for n={self.subset.n}, spec has n={self.n}")
        if self.k_scale == 0:
            raise ValueError("k_scale must be nonzero")
        object.__setattr__(self, "_mask", self.subset.span_mask())

    @property
    def size(self):
        return self.n + 1

    @property
    def is_full(self):
        return self.subset.is_full


def _root_differences(spec, q):
    q = np.asarray(q)
    if q.shape != (spec.size,):
        raise DimensionError(f"q has shape {q.shape}, expected ({spec.size},)")
    return q[:, None] - q[None, :]


def check_regular(spec, q):
    """Raise :class:`SingularityError` if ``q`` is within ``wall_tol`` of a wall."""
    a = _root_differences(spec, q)
    # distance of alpha(q) to 2*pi*i*Z
    a = np.asarray(a, dtype=complex)
    shift = 2j * np.pi * np.round(a.imag / (2 * np.pi))
    dist = np.abs(a - shift)
    bad = spec._mask & (dist < spec.wall_tol)
    if bad.any():
        i, j = (int(v) for v in np.argwhere(bad)[0])
        raise SingularityError(
            f"q is on the wall of root ({i}, {j}): q_i - q_j = {a[i, j]:.3g}", root=(i, j))


def first_wall_event(spec, times, qs):
    """First sample of a sampled path ``qs`` that is on or past a wall.

    Returns ``None`` or ``(index, time, root)``. For real paths a sign change
    of ``q_i - q_j`` between samples counts as a crossing; its time is
    interpolated linearly.
    """
    prev = None
    for k, q in enumerate(qs):
        try:
            check_regular(spec, q)
        except SingularityError as exc:
            return k, float(times[k]), exc.root
        if np.isrealobj(q):
            a = q[:, None] - q[None, :]
            if prev is not None:
                crossed = spec._mask & (np.sign(a) != np.sign(prev))
                if crossed.any():
                    i, j = (int(v) for v in np.argwhere(crossed)[0])
                    a0, a1 = prev[i, j], a[i, j]
                    tc = times[k - 1] + (times[k] - times[k - 1]) * a0 / (a0 - a1)
                    return k, float(tc), (i, j)
            prev = a
    return None


def wall_distance(spec, q):
    """Smallest ``|q_i - q_j|`` over roots in the span (``inf`` if none)."""
    if not spec._mask.any():
        return np.inf
    a = np.abs(_root_differences(spec, q))
    return float(a[spec._mask].min())


def phi_matrix(spec, q):
    """All coefficients ``phi_ij(q)`` as a matrix with zero diagonal."""
    check_regular(spec, q)
    a = _root_differences(spec, q)
    m = spec.size
    P = np.where(np.triu(np.ones((m, m), dtype=bool), 1), 0.5, -0.5).astype(complex)
    np.fill_diagonal(P, 0)
    mask = spec._mask
    if mask.any():
        P[mask] = 0.5 / np.tanh(a[mask] / 2)
    if np.isrealobj(a):
        return P.real
    return P


def dphi_matrix(spec, q):
    """Derivatives ``d phi_ij / d(q_i - q_j)``; zero off the span."""
    check_regular(spec, q)
    a = _root_differences(spec, q)
    out = np.zeros(a.shape, dtype=a.dtype if np.iscomplexobj(a) else float)
    mask = spec._mask
    if mask.any():
        out[mask] = -0.25 / np.sinh(a[mask] / 2) ** 2
    return out


def phi_alpha(spec, q, alpha):
    i, j = alpha
    if i == j:
        raise ValueError("a root needs i != j")
    return phi_matrix(spec, q)[i, j]


def apply_R(spec, q, X):
    X = np.asarray(X)
    if X.shape != (spec.size, spec.size):
        raise DimensionError(f"X has shape {X.shape}")
    return -phi_matrix(spec, q) * X


def apply_Rpm(spec, q, X, sign):
    """``R(q) X + sign * kappa * X`` with ``sign`` in ``{+1, -1}``."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    return apply_R(spec, q, X) + sign * spec.k_scale * np.asarray(X)


def dR_directional(spec, q, direction, A):
    """Derivative of ``q -> R(q) A`` along the Cartan direction ``direction``."""
    direction = np.asarray(direction)
    ddir = direction[:, None] - direction[None, :]
    return -dphi_matrix(spec, q) * ddir * np.asarray(A)


def grad_pairing_term(spec, q, A, B):
    """Gradient over the Cartan of ``q -> tr(R(q) A B)``, as a zero-sum vector."""
    A = np.asarray(A)
    B = np.asarray(B)
    # tr(R(q)A B) = -sum_ij phi_ij A_ij B_ji
    # symmetrized so that W is exactly symmetric (and the result exactly zero) when A = B
    S = 0.5 * (A * B.T + (B * A.T).T)
    W = -dphi_matrix(spec, q) * S
    grad = (W - W.T).sum(axis=1)
    return grad - grad.mean()


def skew_defect(spec, q, A, B):
    """``tr(R(q)A B) + tr(A R(q)B)``; zero for a skew map."""
    RA = apply_R(spec, q, A)
    RB = apply_R(spec, q, B)
    return np.einsum("ij,ji->", RA, B) + np.einsum("ij,ji->", A, RB)


def mdybe_residual(spec, q, A, B):
    """Left minus right side of the modified dynamical Yang-Baxter equation.

    Coadjoint actions are identified with ``-ad`` and the dual of the
    Cartan inclusion with the diagonal projection.
    """
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    RA = apply_R(spec, q, A)
    RB = apply_R(spec, q, B)
    lhs = commutator(RA, RB)
    lhs = lhs + apply_R(spec, q, -commutator(RA, B) + commutator(RB, A))
    lhs = lhs + dR_directional(spec, q, proj_cartan(A), B)
    lhs = lhs - dR_directional(spec, q, proj_cartan(B), A)
    lhs = lhs + np.diag(grad_pairing_term(spec, q, A, B))
    k = spec.k_scale
    return lhs + k * k * commutator(A, B)


def _check_diagonal(h):
    h = np.asarray(h)
    off = h - np.diag(np.diagonal(h))
    if np.abs(off).max() > 0:
        raise ValueError("h must be diagonal")
    return h


def equivariance_defect(spec, q, h, A):
    """``R(q)(h A h^-1) - h (R(q) A) h^-1`` for diagonal ``h``.

    For diagonal ``h`` the coadjoint action on ``q`` is trivial.
    """
    h = _check_diagonal(h)
    d = np.diagonal(h)
    conj = d[:, None] / d[None, :]
    A = np.asarray(A)
    return apply_R(spec, q, conj * A) - conj * apply_R(spec, q, A)


def theta_defect(spec, q, A):
    """``R^-(q) A - (Ad_{exp q} R^+(q) A - Pi_h A)``.

    Vanishes identically when every root is in the span and ``kappa = 1/2``.
    """
    q = np.asarray(q)
    A = np.asarray(A, dtype=complex)
    conj = np.exp(q[:, None] - q[None, :])
    lhs = apply_Rpm(spec, q, A, -1)
    rhs = conj * apply_Rpm(spec, q, A, +1) - np.diag(proj_cartan(A))
    return lhs - rhs
