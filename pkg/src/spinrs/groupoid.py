"""The trivial groupoid U x G x U with its coboundary dynamical Poisson bracket.

Gradients of an observable ``phi(u, g, v)``:

* ``d1``, ``d2`` -- zero-sum vectors, derivatives in ``u`` and ``v``;
* ``D``  -- left gradient, ``tr(D X) = d/dt phi(u, exp(tX) g, v)``;
* ``Dp`` -- right gradient, ``tr(Dp X) = d/dt phi(u, g exp(tX), v)``.
"""

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import ComposabilityError
from .lie import commutator, traceless
from .rmatrix import apply_R

GAUGE_TOL = 1e-10
FD_STEP = 1e-6


@dataclass(frozen=True, eq=False)
class GroupoidPoint:
    u: np.ndarray
    g: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "u", np.asarray(self.u))
        object.__setattr__(self, "g", np.asarray(self.g, dtype=complex))
        object.__setattr__(self, "v", np.asarray(self.v))

    @property
    def on_gauge_bundle(self):
        return bool(np.abs(self.u - self.v).max() < GAUGE_TOL)

    def replace(self, u=None, g=None, v=None):
        return GroupoidPoint(self.u if u is None else u,
                             self.g if g is None else g,
                             self.v if v is None else v)


class Gradients(NamedTuple):
    d1: np.ndarray
    d2: np.ndarray
    D: np.ndarray
    Dp: np.ndarray
    approximate: bool


@dataclass(frozen=True)
class Observable:
    """A function on the groupoid with optional analytic gradients.

    Any gradient left as ``None`` is computed by central differences with
    step ``fd_step`` (optionally Richardson-extrapolated).
    """

    func: Callable
    d1: Optional[Callable] = None
    d2: Optional[Callable] = None
    D: Optional[Callable] = None
    Dp: Optional[Callable] = None
    fd_step: float = FD_STEP
    richardson: bool = False
    name: str = ""

    @property
    def analytic_gradients(self):
        return None not in (self.d1, self.d2, self.D, self.Dp)

    def __call__(self, p):
        return self.func(p)

    def gradients(self, p):
        fd = None if self.analytic_gradients else _fd_gradients(
            self.func, p, self.fd_step, self.richardson)
        return Gradients(
            self.d1(p) if self.d1 else fd.d1,
            self.d2(p) if self.d2 else fd.d2,
            self.D(p) if self.D else fd.D,
            self.Dp(p) if self.Dp else fd.Dp,
            not self.analytic_gradients,
        )

    def __mul__(self, other):
        if np.isscalar(other):
            return linear_combination([(other, self)])
        return product(self, other)

    __rmul__ = __mul__

    def __add__(self, other):
        return linear_combination([(1.0, self), (1.0, other)])


def _central(f, h, richardson):
    d = (f(h) - f(-h)) / (2 * h)
    if richardson:
        d2 = (f(h / 2) - f(-h / 2)) / h
        d = (4 * d2 - d) / 3
    return d


def _fd_gradients(func, p, h, richardson):
    m = p.g.shape[0]
    eye = np.eye(m)

    def cartan_grad(which):
        out = np.empty(m, dtype=complex)
        base = p.u if which == "u" else p.v
        for k in range(m):
            e = eye[k] - 1.0 / m

            def f(t, e=e):
                x = base + t * e
                return func(p.replace(u=x) if which == "u" else p.replace(v=x))
            out[k] = _central(f, h, richardson)
        return out

    def group_grad(side):
        G = np.empty((m, m), dtype=complex)
        for i in range(m):
            for j in range(m):
                def f(t, i=i, j=j):
                    if i == j:
                        step = np.eye(m, dtype=complex)
                        step[i, i] = np.exp(t)
                    else:
                        step = np.eye(m, dtype=complex)
                        step[i, j] = t
                    g = step @ p.g if side == "left" else p.g @ step
                    return func(p.replace(g=g))
                # derivative along E_ij pairs with the (j, i) entry
                G[j, i] = _central(f, h, richardson)
        return traceless(G)

    return Gradients(cartan_grad("u"), cartan_grad("v"),
                     group_grad("left"), group_grad("right"), True)


# ---------------------------------------------------------------------------
# observable constructors
# ---------------------------------------------------------------------------

def pullback(ham):
    """``(u, g, v) -> f(g)`` for a central function ``f``."""
    zero = lambda p: np.zeros(len(p.u), dtype=complex)
    grad = lambda p: ham.gradient(p.g)
    return Observable(lambda p: ham.value(p.g), zero, zero, grad, grad, name="pullback")


def cartan_linear(w, side="u"):
    """``<w, u>`` or ``<w, v>``."""
    w = np.asarray(w, dtype=complex)
    w0 = w - w.mean()
    zero = lambda p: np.zeros(len(p.u), dtype=complex)
    zmat = lambda p: np.zeros_like(p.g)
    if side == "u":
        return Observable(lambda p: complex(w @ p.u), lambda p: w0, zero, zmat, zmat,
                          name="linear_u")
    return Observable(lambda p: complex(w @ p.v), zero, lambda p: w0, zmat, zmat,
                      name="linear_v")


def matrix_coefficient(P):
    """``tr(P g)``."""
    P = np.asarray(P, dtype=complex)
    zero = lambda p: np.zeros(len(p.u), dtype=complex)
    return Observable(lambda p: complex(np.einsum("ij,ji->", P, p.g)), zero, zero,
                      lambda p: traceless(p.g @ P), lambda p: traceless(P @ p.g),
                      name="matrix_coefficient")


def exp_cartan(w, side="u"):
    """``exp(<w, u>)`` (or of ``v``); a nonlinear observable with exact gradients."""
    lin = cartan_linear(w, side)
    f = lambda p: np.exp(lin(p))
    zero = lambda p: np.zeros(len(p.u), dtype=complex)
    zmat = lambda p: np.zeros_like(p.g)
    w0 = np.asarray(w, dtype=complex) - np.mean(w)
    if side == "u":
        return Observable(f, lambda p: f(p) * w0, zero, zmat, zmat, name="exp_u")
    return Observable(f, zero, lambda p: f(p) * w0, zmat, zmat, name="exp_v")


def product(a, b):
    """Pointwise product with Leibniz-rule gradients."""
    def leibniz(ga, gb):
        if ga is None or gb is None:
            return None
        return lambda p: a(p) * gb(p) + b(p) * ga(p)
    return Observable(lambda p: a(p) * b(p),
                      leibniz(a.d1, b.d1), leibniz(a.d2, b.d2),
                      leibniz(a.D, b.D), leibniz(a.Dp, b.Dp),
                      fd_step=min(a.fd_step, b.fd_step), name=f"({a.name}*{b.name})")


def linear_combination(terms):
    """``sum_k c_k phi_k`` for ``terms = [(c_k, phi_k), ...]``."""
    terms = list(terms)

    def combine(attr):
        parts = [getattr(o, attr) for _, o in terms]
        if any(p is None for p in parts):
            return None
        return lambda p: sum(c * g(p) for (c, _), g in zip(terms, parts))
    return Observable(lambda p: sum(c * o(p) for c, o in terms),
                      combine("d1"), combine("d2"), combine("D"), combine("Dp"),
                      fd_step=min(o.fd_step for _, o in terms),
                      name="+".join(o.name for _, o in terms))


def function_observable(func, fd_step=FD_STEP, richardson=False, name="fd"):
    """Wrap a plain function; every gradient comes from finite differences."""
    return Observable(func, fd_step=fd_step, richardson=richardson, name=name)


# ---------------------------------------------------------------------------
# brackets
# ---------------------------------------------------------------------------

def _pair(X, Y):
    return np.einsum("ij,ji->", X, Y)


def bracket_eval(spec, phi, psi, p, rescale=1.0):
    """Evaluate the coboundary dynamical bracket ``{phi, psi}`` at ``p``.

    ``rescale`` multiplies the whole bracket (``1/2`` gives the normalization
    whose Hamiltonian flows are the spin RS equations of motion).
    """
    a = phi.gradients(p)
    b = psi.gradients(p)
    u = np.asarray(p.u)
    v = np.asarray(p.v)
    # the Cartan subalgebra is abelian, so these two terms vanish identically
    t_u = np.diagonal(commutator(np.diag(a.d1), np.diag(b.d1))) @ u
    t_v = np.diagonal(commutator(np.diag(a.d2), np.diag(b.d2))) @ v
    total = t_u - t_v
    total -= a.d1 @ np.diagonal(b.D)
    total -= a.d2 @ np.diagonal(b.Dp)
    total += b.d1 @ np.diagonal(a.D)
    total += b.d2 @ np.diagonal(a.Dp)
    total += _pair(apply_R(spec, v, a.Dp), b.Dp)
    total -= _pair(apply_R(spec, u, a.D), b.D)
    return complex(rescale * total)


def _as_ham(f):
    if hasattr(f, "gradient"):
        return f
    from .hamiltonian import HamiltonianSpec
    return HamiltonianSpec(power=tuple(f))


def invariant_pair_bracket(spec, f1, f2, p, rescale=1.0):
    """Closed form of ``{f1(g), f2(g)}`` for central ``f1``, ``f2``.

    ``f1``, ``f2`` are :class:`HamiltonianSpec` or power-trace lists.
    Equals ``tr((R(v) - R(u)) Df1(g) Df2(g))``.
    """
    D1 = _as_ham(f1).gradient(p.g)
    D2 = _as_ham(f2).gradient(p.g)
    diff = apply_R(spec, p.v, D1) - apply_R(spec, p.u, D1)
    return complex(rescale * _pair(diff, D2))


def bracket_observable(spec, phi, psi, rescale=1.0, fd_step=1e-4, richardson=False):
    """``{phi, psi}`` as an observable with finite-difference gradients."""
    return function_observable(lambda p: bracket_eval(spec, phi, psi, p, rescale),
                               fd_step=fd_step, richardson=richardson,
                               name=f"{{{phi.name},{psi.name}}}")


# ---------------------------------------------------------------------------
# groupoid structure and the Cartan action
# ---------------------------------------------------------------------------

def _check_diagonal_det1(h):
    h = np.asarray(h, dtype=complex)
    if np.abs(h - np.diag(np.diagonal(h))).max() > 0:
        raise ValueError("h must be diagonal")
    if abs(np.prod(np.diagonal(h)) - 1) > 1e-10:
        raise ValueError("h must have unit determinant")
    return np.diagonal(h)


def h_action(h, p):
    """Conjugation action of a diagonal ``h``; ``u`` and ``v`` are fixed."""
    d = _check_diagonal_det1(h)
    return p.replace(g=(d[:, None] / d[None, :]) * p.g)


def momentum_gamma(p):
    """Target minus source, ``u - v``."""
    return p.u - p.v


def groupoid_multiply(p1, p2):
    if np.abs(np.asarray(p1.v) - np.asarray(p2.u)).max() > 1e-10:
        raise ComposabilityError("source of the first factor differs from target of the second")
    return GroupoidPoint(p1.u, p1.g @ p2.g, p2.v)


def groupoid_inverse(p):
    return GroupoidPoint(p.v, np.linalg.inv(p.g), p.u)


def identity_at(u):
    u = np.asarray(u)
    return GroupoidPoint(u, np.eye(len(u), dtype=complex), u)
