import numpy as np
import pytest

from conftest import complex_state, hermitian_state
from spinrs.dynamics import IntegratorConfig, RSState, conserved_report, integrate
from spinrs.errors import AccuracyError
from spinrs.factorization import (build_M, eigen_path, factorization_residual, gauge_correct,
                                  solve)
from spinrs.hamiltonian import HamiltonianSpec
from spinrs.lie import SimpleSubset, log_diagonal_continuous, matrix_exp
from spinrs.rmatrix import RMatrixSpec

TR = HamiltonianSpec.trace()
T201 = np.linspace(0, 1, 201)


def ode(spec, ham, s0, t, rtol=1e-11):
    return integrate(spec, ham, s0, t, IntegratorConfig(rtol=rtol, atol=rtol * 1e-2))


def sup_err(a, b):
    return max(np.abs(np.asarray(a.q) - np.asarray(b.q)).max(), np.abs(a.g - b.g).max())


# -- M(t) -----------------------------------------------------------------------

def test_build_M(rng):
    s0 = hermitian_state(2, rng)
    np.testing.assert_allclose(build_M(TR, s0, 0.5, 0.0), np.diag(np.exp(s0.q)), atol=1e-15)
    eps = 1e-5
    fd = (build_M(TR, s0, 0.5, eps) - build_M(TR, s0, 0.5, -eps)) / (2 * eps)
    np.testing.assert_allclose(fd, -0.5 * TR.gradient(s0.g) @ np.diag(np.exp(s0.q)), atol=1e-7)
    gd = RSState(np.array([1.0, 0.0, -1.0]), np.diag([2.0, 0.8, 0.625]))
    D = np.diag(TR.gradient(gd.g))
    np.testing.assert_allclose(build_M(TR, gd, 0.5, 0.7),
                               np.diag(np.exp(gd.q - 0.7 * 0.5 * D)), atol=1e-14)


# -- eigen paths ------------------------------------------------------------------

def test_eigen_path_constant_diagonal():
    d = np.array([2.0, 1.0, 0.5])
    path = eigen_path(lambda t: np.diag(d), np.linspace(0, 1, 5), anchor=d)
    np.testing.assert_allclose(path.x_plus, np.broadcast_to(np.eye(3), path.x_plus.shape),
                               atol=1e-15)
    np.testing.assert_allclose(path.d, np.broadcast_to(d, path.d.shape))


def test_eigen_path_rotation_family():
    def rot(t):
        return np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])

    def lam(t):
        return np.array([np.exp(1 + 0.2 * t), np.exp(-1 - 0.2 * t)])

    def M(t):
        return rot(t) @ np.diag(lam(t)) @ rot(t).T
    t = np.linspace(0, 1, 51)
    path = eigen_path(M, t, anchor=lam(0))
    np.testing.assert_allclose(path.d, np.array([lam(s) for s in t]), rtol=1e-13)
    for k, s in enumerate(t):
        x = path.x_plus[k] / path.x_plus[k][0, 0]
        np.testing.assert_allclose(x, [[1, -np.tan(s)], [np.tan(s), 1]], atol=1e-12)
    assert np.abs(np.diff(path.x_plus, axis=0)).max() < 0.05


def test_reversed_grid_same_reconstruction(rng):
    s0 = hermitian_state(2, rng, off=0.2)
    D0 = TR.gradient(s0.g)

    def M(t):
        return matrix_exp(-0.5 * t * D0) @ np.diag(np.exp(s0.q))

    def Mdot(t):
        return -0.5 * D0 @ M(t)
    t = np.linspace(0, 1, 101)
    fwd = eigen_path(M, t, Mdot, anchor=np.exp(s0.q))
    rev = eigen_path(M, t[::-1], Mdot, anchor=fwd.d[-1])
    np.testing.assert_allclose(rev.d[::-1], fwd.d, rtol=1e-12)
    np.testing.assert_allclose(rev.gauge_rate[::-1], fwd.gauge_rate, atol=1e-12)
    xr = rev.x_plus[::-1]
    col = np.diagonal(fwd.x_plus, axis1=1, axis2=2) / np.diagonal(xr, axis1=1, axis2=2)
    np.testing.assert_allclose(xr * col[:, None, :], fwd.x_plus, atol=1e-12)

    u_f, _ = log_diagonal_continuous(fwd.d, s0.q)
    k_f, _ = gauge_correct(fwd, s0.q, u=u_f)
    k_r, _ = gauge_correct(rev, u_f[-1], u=u_f[::-1])
    k_r = k_r[::-1] @ np.linalg.inv(k_r[-1])[None]  # renormalize so that k(0) = 1
    g_f = np.linalg.solve(k_f, s0.g[None] @ k_f)
    g_r = np.linalg.solve(k_r, s0.g[None] @ k_r)
    np.testing.assert_allclose(g_r, g_f, atol=1e-9)


def test_gauge_correct_diagonal():
    s0 = RSState(np.array([1.0, 0.0, -1.0]), np.diag([2.0, 0.8, 0.625]))
    res = solve(RMatrixSpec(2), TR, s0, np.linspace(0, 1, 11))
    expected = np.exp(0.5 * (res.u_path - s0.q))
    np.testing.assert_allclose(res.k_plus, np.einsum("ti,ij->tij", expected, np.eye(3)),
                               atol=1e-14)


# -- solve ----------------------------------------------------------------------

def test_solve_worked_diagonal_example():
    s0 = RSState(np.array([1.0, -1.0]), np.diag([2.0, 0.5]))
    t = np.linspace(0, 2, 21)
    for backend in ("eigen", "transport"):
        res = solve(RMatrixSpec(1), TR, s0, t, backend=backend)
        np.testing.assert_allclose(res.traj.q, np.stack([1 - 0.375 * t, -1 + 0.375 * t], 1),
                                   atol=1e-10)
        np.testing.assert_allclose(res.traj.g, np.broadcast_to(s0.g, res.traj.g.shape),
                                   atol=1e-10)
        assert factorization_residual(res, TR, s0)["max"] < 1e-12


def test_solve_initial_point_exact(rng):
    s0 = complex_state(2, rng)
    for backend in ("eigen", "transport"):
        res = solve(RMatrixSpec(2), TR, s0, np.linspace(0, 0.5, 11), backend=backend)
        assert np.array_equal(res.traj.q[0], s0.q)
        assert np.array_equal(res.traj.g[0], s0.g)
        assert np.array_equal(res.k_plus[0], np.eye(3))


def test_solve_n1_matches_ode():
    a = np.sqrt(1.01)
    s0 = RSState(np.array([1.0, -1.0]), np.array([[a, 0.1], [0.1, a]]))
    spec = RMatrixSpec(1)
    res = solve(spec, TR, s0, T201)
    assert sup_err(res.traj, ode(spec, TR, s0, T201)) < 1e-6


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("backend,convention", [("eigen", "unit_diagonal"),
                                                ("eigen", "unit_norm"),
                                                ("transport", "unit_diagonal")])
def test_solve_matches_ode(rng, n, backend, convention):
    spec = RMatrixSpec(n)
    s0 = hermitian_state(n, rng)
    res = solve(spec, TR, s0, T201, backend=backend, convention=convention)
    assert res.breakdown is None
    assert sup_err(res.traj, ode(spec, TR, s0, T201)) < 1e-8
    r = factorization_residual(res, TR, s0)
    assert r["factorization"] < 1e-8 and r["gauge_condition"] < 1e-8
    assert r["constructive_ode"] < 1e-8


def test_solve_complex_mode(rng):
    spec = RMatrixSpec(2)
    s0 = complex_state(2, rng)
    t = np.linspace(0, 0.5, 51)
    for backend in ("eigen", "transport"):
        res = solve(spec, TR, s0, t, backend=backend)
        assert sup_err(res.traj, ode(spec, TR, s0, t)) < 1e-8


def test_solve_other_hamiltonians(rng):
    spec = RMatrixSpec(2)
    s0 = hermitian_state(2, rng)
    t = np.linspace(0, 0.5, 51)
    for ham in (HamiltonianSpec(((1, 1.0), (2, 0.25))), HamiltonianSpec.character(2)):
        res = solve(spec, ham, s0, t)
        assert sup_err(res.traj, ode(spec, ham, s0, t)) < 1e-8


def test_conventions_agree(rng):
    spec = RMatrixSpec(3)
    s0 = hermitian_state(3, rng)
    a = solve(spec, TR, s0, T201, convention="unit_diagonal")
    b = solve(spec, TR, s0, T201, convention="unit_norm")
    assert sup_err(a.traj, b.traj) < 1e-8
    # different frames, same physical trajectory
    assert np.abs(a.k_plus - b.k_plus).max() < 1e-8
    path_a = eigen_path(lambda t: build_M(TR, s0, 0.5, t), T201, anchor=np.exp(s0.q),
                        convention="unit_diagonal")
    path_b = eigen_path(lambda t: build_M(TR, s0, 0.5, t), T201, anchor=np.exp(s0.q),
                        convention="unit_norm")
    assert np.abs(path_a.x_plus[-1] - path_b.x_plus[-1]).max() > 1e-6


def test_isospectral_and_conserved(rng):
    s0 = hermitian_state(3, rng, off=0.3)
    res = solve(RMatrixSpec(3), TR, s0, T201)
    rep = conserved_report(res.traj)
    assert rep["spectrum"] < 1e-10 and rep["power_traces"].max() < 1e-10


def test_semigroup(rng):
    spec = RMatrixSpec(2)
    s0 = hermitian_state(2, rng)
    full = solve(spec, TR, s0, np.linspace(0, 1, 101))
    first = solve(spec, TR, s0, np.linspace(0, 0.4, 41))
    second = solve(spec, TR, first.traj.state(-1), np.linspace(0, 0.6, 61))
    np.testing.assert_allclose(second.traj.q[-1], full.traj.q[-1], atol=1e-7)
    np.testing.assert_allclose(second.traj.g[-1], full.traj.g[-1], atol=1e-7)


def test_kappa_one_disagrees_with_ode(rng):
    """Only kappa = 1/2 in the exponent reproduces the equations of motion."""
    s0 = hermitian_state(2, rng)
    t = np.linspace(0, 1, 51)
    ref = ode(RMatrixSpec(2), TR, s0, t)
    good = solve(RMatrixSpec(2, k_scale=0.5), TR, s0, t)
    bad = solve(RMatrixSpec(2, k_scale=1.0), TR, s0, t)
    assert sup_err(good.traj, ref) < 1e-8
    assert sup_err(bad.traj, ref) > 1e-2


def test_ablation_breaks_gauge_condition(rng):
    s0 = hermitian_state(2, rng, off=0.3)
    res = solve(RMatrixSpec(2), TR, s0, T201, gauge_integral=False)
    r = factorization_residual(res, TR, s0)
    assert r["factorization"] < 1e-8  # still a factorization, just badly normalized
    assert r["gauge_condition"] > 1e-3


def test_collision_gives_partial_result():
    s0 = RSState(np.array([0.2, -0.2]), np.diag([2.0, 0.5]))
    for backend in ("eigen", "transport"):
        res = solve(RMatrixSpec(1), TR, s0, np.linspace(0, 1, 11), backend=backend)
        assert res.breakdown == pytest.approx(0.4 / 0.75, rel=1e-9)
        assert res.breakdown_root == (0, 1)
        assert len(res.traj) == 6


def test_solve_rejects_bad_input(rng):
    s0 = hermitian_state(2, rng)
    with pytest.raises(ValueError):
        solve(RMatrixSpec(2, SimpleSubset(2, frozenset({1}))), TR, s0, T201)
    with pytest.raises(ValueError):
        solve(RMatrixSpec(2), TR, s0, np.linspace(0.1, 1, 5))
    with pytest.raises(ValueError):
        solve(RMatrixSpec(2), TR, s0, T201, backend="qr")


def test_unreachable_quadrature_tolerance(rng):
    s0 = hermitian_state(2, rng, off=0.3)
    with pytest.raises(AccuracyError) as info:
        solve(RMatrixSpec(2), TR, s0, np.linspace(0, 1, 5), quad_tol=1e-30, max_refine=2)
    assert info.value.suggested_refinement is not None
