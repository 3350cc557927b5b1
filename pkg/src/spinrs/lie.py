"""Type-A primitives for sl(n+1) / SL(n+1).

Cartan elements are stored as length ``n+1`` zero-sum vectors (the
diagonal of a traceless diagonal matrix), so that the trace form restricted
to the Cartan subalgebra is the Euclidean dot product of those vectors.
Algebra and group elements are plain ``(n+1, n+1)`` complex arrays; the
constructors below only project and validate.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (ContinuityError, DimensionError, InvariantError,
                     RangeError, SingularityError)

ZERO_SUM_TOL = 1e-12
DET_TOL = 1e-10
HARD_TOL = 1e-6


# ---------------------------------------------------------------------------
# roots and subsets of simple roots
# ---------------------------------------------------------------------------

def roots(n):
    """All roots of sl(n+1) as ordered index pairs ``(i, j)``, ``i != j``."""
    m = n + 1
    return [(i, j) for i in range(m) for j in range(m) if i != j]


def is_positive(root):
    return root[0] < root[1]


@dataclass(frozen=True)
class SimpleSubset:
    """A subset of the simple roots ``{1, ..., n}``.

    Simple root ``k`` is ``e_{k-1} - e_k`` in 0-based matrix indices, so the
    root ``(i, j)`` lies in the span of the subset iff every simple root
    ``min(i,j)+1, ..., max(i,j)`` is a member.
    """

    n: int
    members: frozenset

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        bad = [k for k in self.members if not 1 <= k <= self.n]
        if bad:
            raise ValueError(f"simple root indices out of range 1..{self.n}: {bad}")
        object.__setattr__(self, "members", frozenset(self.members))

    @classmethod
    def full(cls, n):
        return cls(n, frozenset(range(1, n + 1)))

    @classmethod
    def empty(cls, n):
        return cls(n, frozenset())

    @property
    def is_full(self):
        return len(self.members) == self.n

    def contains_root(self, root):
        i, j = root
        lo, hi = min(i, j), max(i, j)
        return all(k in self.members for k in range(lo + 1, hi + 1))

    def span_mask(self):
        """Boolean ``(n+1, n+1)`` matrix, True where the root is in the span."""
        m = self.n + 1
        mask = np.zeros((m, m), dtype=bool)
        for i, j in roots(self.n):
            mask[i, j] = self.contains_root((i, j))
        return mask

    @classmethod
    def all_subsets(cls, n):
        """Iterate over all ``2**n`` subsets."""
        for bits in range(2 ** n):
            yield cls(n, frozenset(k + 1 for k in range(n) if bits >> k & 1))


# ---------------------------------------------------------------------------
# element constructors
# ---------------------------------------------------------------------------

def unit(i, j, m):
    """The matrix unit ``E_ij`` of size ``m``."""
    e = np.zeros((m, m), dtype=complex)
    e[i, j] = 1.0
    return e


def cartan_vector(x, real=False):
    """Validate and project ``x`` onto the zero-sum hyperplane.

    Raises
    ------
    InvariantError
        If the entries sum to more than ``1e-6`` in absolute value.
    """
    x = np.asarray(x, dtype=float if real else complex)
    if x.ndim != 1:
        raise DimensionError(f"Cartan vector must be 1-d, got shape {x.shape}")
    s = x.sum()
    if abs(s) > HARD_TOL * max(1, len(x)):
        raise InvariantError(f"Cartan vector has nonzero sum {s}")
    return x - s / len(x)


def traceless(X):
    X = np.asarray(X, dtype=complex)
    m = X.shape[-1]
    return X - np.trace(X, axis1=-2, axis2=-1)[..., None, None] / m * np.eye(m)


def algebra_element(X):
    """Validate a traceless matrix, projecting away roundoff."""
    X = np.asarray(X, dtype=complex)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {X.shape}")
    tr = np.trace(X)
    if abs(tr) > HARD_TOL * max(1.0, np.abs(X).max()):
        raise InvariantError(f"algebra element has trace {tr}")
    return traceless(X)


def group_element(g):
    """Validate a unit-determinant matrix, rescaling away roundoff.

    The rescaling uses the principal ``m``-th root of ``det g``.
    """
    g = np.asarray(g, dtype=complex)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {g.shape}")
    det = np.linalg.det(g)
    if abs(det - 1) > HARD_TOL:
        raise InvariantError(f"group element has determinant {det}")
    if abs(det - 1) > 0:
        g = g / det ** (1.0 / g.shape[0])
    return g


def normalize_det(g):
    """Rescale an invertible matrix to unit determinant (principal root).

    Returns the rescaled matrix and ``|det g - 1|`` before rescaling.
    """
    det = np.linalg.det(g)
    if det == 0:
        raise SingularityError("matrix is singular")
    return g / det ** (1.0 / g.shape[0]), abs(det - 1)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def trace_pairing(X, Y):
    """The invariant form ``tr(X Y)``."""
    X = np.asarray(X)
    Y = np.asarray(Y)
    if X.shape != Y.shape:
        raise DimensionError(f"shape mismatch {X.shape} vs {Y.shape}")
    # tr(XY) = sum_ij X_ij Y_ji
    return complex(np.einsum("ij,ji->", X, Y))


def proj_cartan(X):
    """Orthogonal projection onto the Cartan subalgebra, as a vector."""
    return np.diagonal(np.asarray(X)).copy()


def commutator(X, Y):
    return X @ Y - Y @ X


def matrix_exp(X):
    """Matrix exponential (scaling and squaring, via :func:`scipy.linalg.expm`).

    For traceless input the result is rescaled to determinant exactly one.
    """
    X = np.asarray(X, dtype=complex)
    if not np.all(np.isfinite(X)):
        raise RangeError("non-finite matrix entries")
    norm = np.linalg.norm(X, 1)
    if norm > 700:
        raise RangeError(f"matrix norm {norm:.3g} too large for exponentiation")
    E = scipy.linalg.expm(X)
    if not np.all(np.isfinite(E)):
        raise RangeError("matrix exponential overflowed")
    if abs(np.trace(X)) <= 1e-12 * max(1.0, np.abs(X).max()):
        E, _ = normalize_det(E)
    return E


def log_diagonal_continuous(path, u0):
    """Branch-continuous logarithm of a path of diagonal group elements.

    Parameters
    ----------
    path : array_like
        Either ``(T, m, m)`` diagonal matrices or ``(T, m)`` diagonals.
    u0 : array_like
        Anchor; ``path[0]`` must equal ``exp(u0)`` to 1e-8.

    Returns
    -------
    u : ndarray, shape (T, m)
        Zero-sum logarithms, each branch chosen nearest to the previous one.
    removed : ndarray, shape (T,)
        The trace removed from each raw logarithm. Vanishes for unit
        determinant input.
    """
    d = np.asarray(path, dtype=complex)
    if d.ndim == 3:
        d = np.diagonal(d, axis1=1, axis2=2)
    u0 = np.asarray(u0, dtype=complex)
    if d.shape[1:] != u0.shape:
        raise DimensionError(f"path entries {d.shape[1:]} vs anchor {u0.shape}")
    if np.any(d == 0):
        k = int(np.argwhere(np.any(d == 0, axis=1))[0, 0])
        raise SingularityError(f"zero diagonal entry at sample {k}")
    if np.abs(d[0] - np.exp(u0)).max() > 1e-8 * max(1.0, np.abs(d[0]).max()):
        raise ContinuityError("path does not start at exp(u0)")
    ratios = d[1:] / d[:-1]
    jumps = np.abs(ratios - 1)
    if jumps.size and jumps.max() >= 0.5:
        k = int(np.argmax(jumps.max(axis=1))) + 1
        raise ContinuityError(f"diagonal entries jump too far at sample {k}; refine the grid")

    raw = np.empty_like(d)
    raw[0] = u0
    for k in range(1, len(d)):
        w = np.log(d[k])
        turns = np.round((raw[k - 1].imag - w.imag) / (2 * np.pi))
        raw[k] = w + 2j * np.pi * turns
    removed = raw.sum(axis=1)
    u = raw - removed[:, None] / d.shape[1]
    return u, removed


def power_traces(g, kmax):
    """``[tr g, tr g^2, ..., tr g^kmax]``."""
    out = np.empty(kmax, dtype=complex)
    p = np.eye(g.shape[0], dtype=complex)
    for k in range(kmax):
        p = p @ g
        out[k] = np.trace(p)
    return out


def invariant_gradient(g, poly):
    """Gradient of ``f(g) = sum_k c_k tr(g^k)`` under the trace form.

    ``poly`` is an iterable of ``(k, c_k)``; negative powers are allowed.
    The result is central: it commutes with ``g``.
    """
    g = np.asarray(g, dtype=complex)
    m = g.shape[0]
    out = np.zeros((m, m), dtype=complex)
    for k, c in poly:
        if k == 0 or c == 0:
            continue
        gk = np.linalg.matrix_power(g, k)
        out += c * k * (gk - np.trace(gk) / m * np.eye(m))
    return out


def _elementary_from_power(p):
    # Newton: k e_k = sum_{i=1}^k (-1)^{i-1} e_{k-i} p_i
    e = [1.0 + 0j]
    for k in range(1, len(p) + 1):
        s = sum((-1) ** (i - 1) * e[k - i] * p[i - 1] for i in range(1, k + 1))
        e.append(s / k)
    return np.array(e[1:])


def fundamental_characters(g):
    """Characters ``chi_k(g) = e_k(spec g)`` for ``k = 1..n`` via Newton's identities."""
    g = np.asarray(g, dtype=complex)
    n = g.shape[0] - 1
    return _elementary_from_power(power_traces(g, n))


def character_gradients(g):
    """Values and trace-form gradients of the fundamental characters.

    Forward-mode differentiation of Newton's recursion.

    Returns
    -------
    values : ndarray, shape (n,)
    grads : ndarray, shape (n, m, m)
    """
    g = np.asarray(g, dtype=complex)
    m = g.shape[0]
    n = m - 1
    p = power_traces(g, n)
    dp = np.array([invariant_gradient(g, [(k, 1.0)]) for k in range(1, n + 1)])
    e = [1.0 + 0j]
    de = [np.zeros((m, m), dtype=complex)]
    for k in range(1, n + 1):
        s = 0j
        ds = np.zeros((m, m), dtype=complex)
        for i in range(1, k + 1):
            sign = (-1) ** (i - 1)
            s += sign * e[k - i] * p[i - 1]
            ds += sign * (de[k - i] * p[i - 1] + e[k - i] * dp[i - 1])
        e.append(s / k)
        de.append(ds / k)
    return np.array(e[1:]), np.array(de[1:])
