"""Acceptance criteria 1-10, each at its stated tolerance.

Every test prints one ``[PASS]``/``[FAIL]`` line (shown even under output
capture). Run just this file with ``pytest tests/test_acceptance.py -v -s``
or directly with ``python3 tests/test_acceptance.py``.
"""

import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))
from conftest import hermitian_state  # noqa: E402

from spinrs import checks  # noqa: E402
from spinrs.dynamics import (IntegratorConfig, RSState, conserved_report,  # noqa: E402
                             eom_componentwise, eom_field, integrate)
from spinrs.factorization import factorization_residual, solve  # noqa: E402
from spinrs.hamiltonian import HamiltonianSpec  # noqa: E402
from spinrs.lie import SimpleSubset  # noqa: E402
from spinrs.rmatrix import RMatrixSpec  # noqa: E402

TR = HamiltonianSpec.trace()
GRID = np.linspace(0.0, 1.0, 201)
SEED = 20240501

_capsys = {}


@pytest.fixture(autouse=True)
def _uncaptured(capsys):
    _capsys["c"] = capsys
    yield
    _capsys.clear()


def report(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title}: {detail}"
    with _capsys["c"].disabled():
        print("\n" + line)
    assert ok, line


def sup_err(a, b):
    err = float(max(np.abs(np.asarray(a.q) - np.asarray(b.q)).max(),
                    np.abs(a.g - b.g).max()))
    return err if np.isfinite(err) else np.inf


def ode(spec, ham, s0, t, rtol):
    return integrate(spec, ham, s0, t, IntegratorConfig(rtol=rtol, atol=rtol * 1e-2))


# Initial data shared by criteria 5, 7 and 9: Hermitian, off-diagonal <= 0.2.
def _runs():
    rng = np.random.default_rng(SEED)
    return [(n, hermitian_state(n, rng, off=0.2)) for n in (1, 2, 3)]


_cache = {}


def factorization_runs():
    if "fact" not in _cache:
        out = []
        for n, s0 in _runs():
            res = solve(RMatrixSpec(n), TR, s0, GRID)
            out.append((n, s0, res))
        _cache["fact"] = out
    return _cache["fact"]


# ---------------------------------------------------------------------------

def test_criterion_01_mdybe_all_subsets():
    start = time.perf_counter()
    worst, count = 0.0, 0
    for n in (1, 2, 3):
        for sub in SimpleSubset.all_subsets(n):
            pi = "full" if sub.is_full else tuple(sorted(sub.members))
            r = checks.check_mdybe(n, pi, 0.5, samples=1000, seed=SEED + n)
            worst = max(worst, r.max_residual)
            count += 1
    elapsed = time.perf_counter() - start
    report(1, "mDYBE residual", worst < 1e-10 and elapsed < 60,
           f"{count} (n, subset) pairs x 1000 samples, max {worst:.2e} < 1e-10, "
           f"{elapsed:.1f} s < 60 s")


def test_criterion_02_skew_and_equivariance():
    worst_s = worst_e = 0.0
    for n in (1, 2, 3):
        for sub in SimpleSubset.all_subsets(n):
            pi = "full" if sub.is_full else tuple(sorted(sub.members))
            worst_s = max(worst_s, checks.check_skew(n, pi, samples=1000, seed=SEED).max_residual)
            worst_e = max(worst_e, checks.check_equivariance(n, pi, samples=1000,
                                                             seed=SEED).max_residual)
    report(2, "skew-symmetry and H-equivariance", worst_s < 1e-12 and worst_e < 1e-12,
           f"skew max {worst_s:.2e}, equivariance max {worst_e:.2e} (< 1e-12)")


def test_criterion_03_commute_on_gauge_bundle():
    worst, medians = 0.0, []
    for n in (1, 2, 3):
        r = checks.check_commute(n, samples=500, seed=SEED)
        worst = max(worst, r.max_residual)
        if n >= 2:
            medians.append(float(r.note.split("=")[-1]))
    ok = worst < 1e-10 and min(medians) > 1e-4
    report(3, "commutation on the gauge bundle", ok,
           f"max on-bundle {worst:.2e} < 1e-10; off-bundle medians "
           f"{', '.join(f'{m:.2e}' for m in medians)} > 1e-4")


def test_criterion_04_componentwise_oracle():
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for n in (1, 2, 3):
        spec = RMatrixSpec(n)
        for _ in range(1000):
            s = hermitian_state(n, rng, off=rng.uniform(0.05, 0.5))
            dq, dg = eom_field(spec, TR, s)
            ddq, dg2 = eom_componentwise(spec, s)
            assert np.isfinite(dg).all() and np.isfinite(dg2).all()
            worst = max(worst, np.abs(dg - dg2).max(),
                        np.abs(ddq + 0.5 * np.diagonal(dg)).max())
    report(4, "componentwise equations", worst < 1e-12,
           f"3000 Hermitian states, max {worst:.2e} < 1e-12")


def test_criterion_05_solver_agreement():
    start = time.perf_counter()
    errs = []
    for n, s0, res in factorization_runs():
        assert res.breakdown is None
        errs.append(sup_err(res.traj, ode(RMatrixSpec(n), TR, s0, GRID, 1e-11)))
    elapsed = time.perf_counter() - start
    report(5, "factorization vs RK45", max(errs) < 1e-6 and elapsed < 120,
           f"sup-errors n=1,2,3: {', '.join(f'{e:.2e}' for e in errs)} < 1e-6, "
           f"{elapsed:.1f} s < 120 s")


def test_criterion_06_diagonal_closed_form():
    s0 = RSState(np.array([1.0, -1.0]), np.diag([2.0, 0.5]))
    t = np.linspace(0, 2, 41)
    q_exact = np.stack([1 - 0.375 * t, -1 + 0.375 * t], axis=1)
    errs = {}
    errs["rk45"] = ode(RMatrixSpec(1), TR, s0, t, 1e-11)
    errs["factorization"] = solve(RMatrixSpec(1), TR, s0, t).traj
    # a second, n = 2 instance of q(t) = q0 - (t/2) Pi_h Df(g0)
    s2 = RSState(np.array([1.5, 0.0, -1.5]), np.diag([1.6, 1.25, 0.5]))
    d = np.diag(TR.gradient(s2.g)).real
    q2 = s2.q - 0.5 * t[:, None] * (d - d.mean())
    out = {}
    for name, traj in errs.items():
        out[name] = max(np.abs(traj.q - q_exact).max(), np.abs(traj.g - s0.g).max())
    for name, traj in (("rk45 n=2", ode(RMatrixSpec(2), TR, s2, t, 1e-11)),
                       ("factorization n=2", solve(RMatrixSpec(2), TR, s2, t).traj)):
        out[name] = max(np.abs(traj.q - q2).max(), np.abs(traj.g - s2.g).max())
    report(6, "diagonal closed form", max(out.values()) < 1e-10,
           ", ".join(f"{k} {v:.2e}" for k, v in out.items()) + " (< 1e-10)")


def test_criterion_07_isospectrality():
    fact = []
    for n, s0, res in factorization_runs():
        rep = conserved_report(res.traj)
        fact.append(max(rep["spectrum"], rep["power_traces"].max()))
    rk = []
    for n, s0 in _runs():
        rep = conserved_report(ode(RMatrixSpec(n), TR, s0, GRID, 1e-9))
        rk.append(max(rep["spectrum"], rep["power_traces"].max()))
    report(7, "isospectrality", max(fact) < 1e-10 and max(rk) < 1e-7,
           f"factorization max drift {max(fact):.2e} < 1e-10; "
           f"RK45 (rtol 1e-9) max drift {max(rk):.2e} < 1e-7")


def test_criterion_08_gauge_backends():
    rng = np.random.default_rng(SEED + 8)
    t = np.linspace(0, 1, 101)
    worst_b = worst_c = 0.0
    for k in range(20):
        n = 1 + k % 3
        s0 = hermitian_state(n, rng, off=0.3)
        spec = RMatrixSpec(n)
        a = solve(spec, TR, s0, t, backend="eigen", convention="unit_diagonal")
        b = solve(spec, TR, s0, t, backend="transport")
        c = solve(spec, TR, s0, t, backend="eigen", convention="unit_norm")
        worst_b = max(worst_b, sup_err(a.traj, b.traj))
        worst_c = max(worst_c, sup_err(a.traj, c.traj))
    report(8, "gauge robustness", max(worst_b, worst_c) < 1e-8,
           f"20 runs: eigen vs transport {worst_b:.2e}, unit_diagonal vs unit_norm "
           f"{worst_c:.2e} (< 1e-8)")


def test_criterion_09_residuals_and_ablation():
    worst_f = worst_g = 0.0
    for n, s0, res in factorization_runs():
        r = factorization_residual(res, TR, s0)
        worst_f = max(worst_f, r["factorization"])
        worst_g = max(worst_g, r["gauge_condition"])
    ablated = []
    rng = np.random.default_rng(SEED + 9)
    for n in (2, 3):
        s0 = hermitian_state(n, rng, off=0.3)
        res = solve(RMatrixSpec(n), TR, s0, GRID, gauge_integral=False)
        ablated.append(factorization_residual(res, TR, s0)["gauge_condition"])
    ok = worst_f < 1e-8 and worst_g < 1e-8 and min(ablated) > 1e-3
    report(9, "factorization residual", ok,
           f"factorization {worst_f:.2e}, gauge condition {worst_g:.2e} (< 1e-8); "
           f"without the gauge integral (n=2,3) {', '.join(f'{a:.2e}' for a in ablated)} "
           f"(> 1e-3)")


@pytest.mark.slow
def test_criterion_10_jacobi():
    res = [checks.check_jacobi(n, samples=100, seed=SEED) for n in (1, 2)]
    worst = max(r.max_residual for r in res)
    report(10, "Jacobi identity", worst < 1e-4,
           f"100 points each for n=1,2, max cyclic sum "
           f"{', '.join(f'{r.max_residual:.2e}' for r in res)} < 1e-4")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
