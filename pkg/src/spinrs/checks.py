"""Randomized verification suites for the algebraic identities.

Each ``check_*`` function draws ``samples`` random inputs from a seeded
generator and returns a :class:`CheckResult` holding the worst residual.
Draws that land on a wall are resampled and counted.
"""

from dataclasses import asdict, dataclass

import numpy as np

from .errors import SingularityError
from .groupoid import (GroupoidPoint, bracket_eval, bracket_observable,
                       cartan_linear, exp_cartan, invariant_pair_bracket,
                       matrix_coefficient, pullback)
from .hamiltonian import HamiltonianSpec
from .lie import SimpleSubset, traceless
from .rmatrix import (RMatrixSpec, apply_Rpm, equivariance_defect,
                      mdybe_residual, skew_defect, theta_defect)

TOLERANCES = {
    "skew": 1e-12,
    "equivariance": 1e-12,
    "mdybe": 1e-10,
    "commute": 1e-10,
    "jacobi": 1e-4,
    "theta": 1e-10,
}
SUITES = tuple(TOLERANCES)


@dataclass
class CheckResult:
    suite: str
    n: int
    subset: tuple
    kappa: float
    samples: int
    max_residual: float
    tolerance: float
    resampled: int = 0
    note: str = ""

    @property
    def passed(self):
        return bool(self.max_residual < self.tolerance)

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        sub = "full" if self.subset is None else list(self.subset)
        return (f"[{status}] {self.suite:<12} n={self.n} pi'={sub} kappa={self.kappa:g} "
                f"samples={self.samples} max={self.max_residual:.3e} tol={self.tolerance:.0e}"
                + (f" resampled={self.resampled}" if self.resampled else "")
                + (f" ({self.note})" if self.note else ""))

    def to_dict(self):
        d = asdict(self)
        d["passed"] = self.passed
        return d


# ---------------------------------------------------------------------------
# random inputs
# ---------------------------------------------------------------------------

def random_cartan(n, rng, scale=3.0, min_gap=0.3):
    """Real zero-sum vector with all pairwise gaps at least ``min_gap``."""
    while True:
        q = rng.uniform(-scale, scale, n + 1)
        q -= q.mean()
        if np.diff(np.sort(q)).min() >= min_gap:
            return q


def random_traceless(n, rng):
    m = n + 1
    return traceless(rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m)))


def random_group(n, rng, hermitian=False, off_scale=0.3):
    """Random unit-determinant matrix near a positive diagonal."""
    m = n + 1
    X = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    if hermitian:
        X = (X + X.conj().T) / 2
    off = X - np.diag(np.diagonal(X))
    g = np.diag(rng.uniform(0.6, 1.6, m)) + off_scale * off / max(1.0, np.abs(off).max())
    det = np.linalg.det(g)
    if hermitian:
        return g / abs(det) ** (1.0 / m)
    return g / det ** (1.0 / m)


def random_diagonal_h(n, rng):
    z = rng.normal(size=n + 1) + 1j * rng.uniform(-np.pi, np.pi, n + 1)
    return np.diag(np.exp(z - z.mean()))


def _subset(n, pi_prime):
    if pi_prime is None or pi_prime == "full":
        return SimpleSubset.full(n)
    return SimpleSubset(n, frozenset(pi_prime))


def _subset_tag(subset):
    return None if subset.is_full else tuple(sorted(subset.members))


def _run(suite, n, pi_prime, kappa, samples, seed, draw, note=""):
    rng = np.random.default_rng(seed)
    subset = _subset(n, pi_prime)
    spec = RMatrixSpec(n, subset, kappa)
    worst = 0.0
    resampled = 0
    done = 0
    while done < samples:
        try:
            value = float(draw(spec, rng))
            # NaN must fail the check, not vanish under max()
            worst = max(worst, value if np.isfinite(value) else np.inf)
        except SingularityError:
            resampled += 1
            continue
        done += 1
    return CheckResult(suite, n, _subset_tag(subset), kappa, samples, float(worst),
                       TOLERANCES[suite], resampled, note)


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------

def check_skew(n, pi_prime="full", kappa=0.5, samples=1000, seed=0, corrupt=False):
    """Skew-symmetry of ``R(q)``. ``corrupt=True`` tests ``R + kappa`` instead."""
    def draw(spec, rng):
        q = random_cartan(n, rng)
        A, B = random_traceless(n, rng), random_traceless(n, rng)
        if corrupt:
            RA = apply_Rpm(spec, q, A, +1)
            RB = apply_Rpm(spec, q, B, +1)
            return abs(np.einsum("ij,ji->", RA, B) + np.einsum("ij,ji->", A, RB))
        return abs(skew_defect(spec, q, A, B))
    return _run("skew", n, pi_prime, kappa, samples, seed, draw,
                "negative control: R + kappa" if corrupt else "")


def check_equivariance(n, pi_prime="full", kappa=0.5, samples=1000, seed=0):
    def draw(spec, rng):
        q = random_cartan(n, rng)
        A = random_traceless(n, rng)
        h = random_diagonal_h(n, rng)
        return np.abs(equivariance_defect(spec, q, h, A)).max()
    return _run("equivariance", n, pi_prime, kappa, samples, seed, draw)


def check_mdybe(n, pi_prime="full", kappa=0.5, samples=1000, seed=0):
    def draw(spec, rng):
        q = random_cartan(n, rng)
        A, B = random_traceless(n, rng), random_traceless(n, rng)
        return np.linalg.norm(mdybe_residual(spec, q, A, B))
    return _run("mdybe", n, pi_prime, kappa, samples, seed, draw)


def check_theta(n, pi_prime="full", kappa=0.5, samples=1000, seed=0):
    def draw(spec, rng):
        q = random_cartan(n, rng, scale=1.5)
        A = random_traceless(n, rng)
        return np.abs(theta_defect(spec, q, A)).max()
    return _run("theta", n, pi_prime, kappa, samples, seed, draw)


def power_trace_pairs(n):
    return [(j, k) for j in range(1, n + 1) for k in range(1, n + 1)]


def check_commute(n, pi_prime="full", kappa=0.5, samples=500, seed=0, rescale=1.0):
    """Power-trace pullbacks commute on the gauge bundle.

    Both the closed form and the full bracket are evaluated; the larger of
    the two is recorded. The median off-bundle magnitude (over distinct
    pairs) is reported in ``note``.
    """
    off_values = []

    def draw(spec, rng):
        u = random_cartan(n, rng)
        g = random_group(n, rng)
        p = GroupoidPoint(u, g, u)
        v = random_cartan(n, rng)
        off = GroupoidPoint(u, g, v)
        worst = 0.0
        for j, k in power_trace_pairs(n):
            f1, f2 = HamiltonianSpec(((j, 1.0),)), HamiltonianSpec(((k, 1.0),))
            closed = invariant_pair_bracket(spec, f1, f2, p, rescale)
            full = bracket_eval(spec, pullback(f1), pullback(f2), p, rescale)
            worst = max(worst, abs(closed), abs(full))
            if j != k:
                off_values.append(abs(invariant_pair_bracket(spec, f1, f2, off, rescale)))
        return worst

    res = _run("commute", n, pi_prime, kappa, samples, seed, draw)
    if off_values:
        res.note = f"median off-bundle |bracket| = {np.median(off_values):.3e}"
    return res


def jacobi_observables(n, rng):
    """Three nonlinear observables with analytic gradients."""
    m = n + 1
    w = [rng.normal(size=m) * 0.5 for _ in range(3)]
    P = [rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m)) for _ in range(3)]
    phi = exp_cartan(w[0], "u") * matrix_coefficient(P[0])
    psi = matrix_coefficient(P[1]) * cartan_linear(w[1], "v") * matrix_coefficient(P[2])
    chi = pullback(HamiltonianSpec(((2, 1.0),))) * exp_cartan(w[2], "v") \
        * matrix_coefficient(P[0] + P[1])
    return phi, psi, chi


def jacobi_cyclic_sum(spec, phi, psi, chi, p, step=1e-4, rescale=1.0, richardson=True):
    """Cyclic sum of nested brackets; inner brackets are differentiated numerically.

    Individual terms reach ``1e4`` for the default observables, so plain
    central differences at ``step = 1e-4`` leave a truncation error close to
    the tolerance; Richardson extrapolation removes it.
    """
    def outer(a, b, c):
        inner = bracket_observable(spec, b, c, rescale, fd_step=step, richardson=richardson)
        return bracket_eval(spec, a, inner, p, rescale)
    return outer(phi, psi, chi) + outer(psi, chi, phi) + outer(chi, phi, psi)


def check_jacobi(n, pi_prime="full", kappa=0.5, samples=100, seed=0, step=1e-4):
    def draw(spec, rng):
        u = random_cartan(n, rng, scale=2.0, min_gap=0.5)
        v = random_cartan(n, rng, scale=2.0, min_gap=0.5)
        g = random_group(n, rng)
        phi, psi, chi = jacobi_observables(n, rng)
        return abs(jacobi_cyclic_sum(spec, phi, psi, chi, GroupoidPoint(u, g, v), step))
    return _run("jacobi", n, pi_prime, kappa, samples, seed, draw)


CHECKS = {
    "skew": check_skew,
    "equivariance": check_equivariance,
    "mdybe": check_mdybe,
    "commute": check_commute,
    "jacobi": check_jacobi,
    "theta": check_theta,
}


def run_suite(suite, n, pi_prime="full", kappa=0.5, seed=0, samples=None, **kwargs):
    """Run one suite (or ``"all"``) and return a list of results."""
    names = SUITES if suite == "all" else (suite,)
    out = []
    for name in names:
        if name not in CHECKS:
            raise ValueError(f"unknown suite {name!r}")
        if name == "theta" and not _subset(n, pi_prime).is_full:
            continue
        kw = dict(kwargs)
        if samples is not None:
            kw["samples"] = samples
        out.append(CHECKS[name](n, pi_prime, kappa, seed=seed, **kw))
    return out
