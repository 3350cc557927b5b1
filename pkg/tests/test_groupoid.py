import numpy as np
import pytest

from spinrs.checks import (jacobi_cyclic_sum, jacobi_observables, random_cartan,
                           random_diagonal_h, random_group)
from spinrs.errors import ComposabilityError
from spinrs.groupoid import (GroupoidPoint, bracket_eval, cartan_linear, exp_cartan,
                             function_observable, groupoid_inverse, groupoid_multiply,
                             h_action, identity_at, invariant_pair_bracket,
                             matrix_coefficient, momentum_gamma, pullback)
from spinrs.hamiltonian import HamiltonianSpec
from spinrs.rmatrix import RMatrixSpec, apply_R

TR = HamiltonianSpec(((1, 1.0),))
TR2 = HamiltonianSpec(((2, 1.0),))


def point(n, rng, gauge=False):
    u = random_cartan(n, rng)
    v = u if gauge else random_cartan(n, rng)
    return GroupoidPoint(u, random_group(n, rng), v)


def observables(n, rng):
    m = n + 1
    P = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    Q = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    w = rng.normal(size=m)
    return [
        matrix_coefficient(P),
        matrix_coefficient(Q) * exp_cartan(w, "v"),
        cartan_linear(w, "u") * matrix_coefficient(P + Q),
        pullback(TR2) * exp_cartan(-w, "u"),
    ]


def test_bracket_self_is_zero(rng):
    spec = RMatrixSpec(2)
    p = point(2, rng)
    for phi in observables(2, rng):
        assert abs(bracket_eval(spec, phi, phi, p)) < 1e-12


def test_pullbacks_commute_on_gauge_bundle(rng):
    spec = RMatrixSpec(2)
    for _ in range(20):
        p = point(2, rng, gauge=True)
        assert abs(bracket_eval(spec, pullback(TR), pullback(TR2), p)) < 1e-10


def test_pullbacks_off_bundle_match_closed_form(rng):
    spec = RMatrixSpec(2)
    for _ in range(20):
        p = point(2, rng)
        D1, D2 = TR.gradient(p.g), TR2.gradient(p.g)
        closed = np.trace((apply_R(spec, p.v, D1) - apply_R(spec, p.u, D1)) @ D2)
        val = bracket_eval(spec, pullback(TR), pullback(TR2), p)
        assert val == pytest.approx(closed, abs=1e-10)
        assert abs(val) > 1e-6


def test_invariant_pair_bracket_examples(rng):
    spec = RMatrixSpec(2)
    p = point(2, rng, gauge=True)
    assert abs(invariant_pair_bracket(spec, TR, TR2, p)) < 1e-12
    q = point(2, rng)
    assert abs(invariant_pair_bracket(spec, TR2, TR2, q)) < 1e-12
    # n = 1 instance; v = (0, 0) would sit on the wall, so a nearby regular v is used
    spec1 = RMatrixSpec(1)
    g = np.array([[1.2, 0.3], [-0.4, 0.0]])
    g[1, 1] = (1 + 0.3 * -0.4) / 1.2
    p1 = GroupoidPoint(np.array([1.0, -1.0]), g, np.array([0.25, -0.25]))
    a = invariant_pair_bracket(spec1, [(1, 1.0)], [(2, 0.5), (3, 1.0)], p1)
    b = bracket_eval(spec1, pullback(TR), pullback(HamiltonianSpec(((2, 0.5), (3, 1.0)))), p1)
    assert a == pytest.approx(b, abs=1e-9)


def test_closed_form_matches_general_bracket_many_points(rng):
    for n in (1, 2, 3):
        spec = RMatrixSpec(n)
        fs = [HamiltonianSpec(((k, 1.0),)) for k in range(1, n + 1)]
        for _ in range(40):
            p = point(n, rng)
            for f1 in fs:
                for f2 in fs:
                    a = invariant_pair_bracket(spec, f1, f2, p)
                    b = bracket_eval(spec, pullback(f1), pullback(f2), p)
                    assert abs(a - b) < 1e-9


def test_antisymmetry_and_bilinearity(rng):
    spec = RMatrixSpec(2)
    for _ in range(10):
        p = point(2, rng)
        a, b, c, d = observables(2, rng)
        ab = bracket_eval(spec, a, b, p)
        assert abs(ab + bracket_eval(spec, b, a, p)) < 1e-10
        combo = 2.0 * b + (-1.5j) * c
        lhs = bracket_eval(spec, a, combo, p)
        rhs = 2.0 * ab - 1.5j * bracket_eval(spec, a, c, p)
        assert abs(lhs - rhs) < 1e-10 * max(1, abs(lhs))
        lhs = bracket_eval(spec, a + d, c, p)
        rhs = bracket_eval(spec, a, c, p) + bracket_eval(spec, d, c, p)
        assert abs(lhs - rhs) < 1e-10 * max(1, abs(lhs))


def test_leibniz(rng):
    spec = RMatrixSpec(2)
    for _ in range(10):
        p = point(2, rng)
        a, b, c, _ = observables(2, rng)
        lhs = bracket_eval(spec, a, b * c, p)
        rhs = bracket_eval(spec, a, b, p) * c(p) + b(p) * bracket_eval(spec, a, c, p)
        assert abs(lhs - rhs) < 1e-8 * max(1, abs(lhs))


def test_analytic_gradients_match_finite_differences(rng):
    p = point(2, rng)
    for obs in observables(2, rng) + [exp_cartan(rng.normal(size=3), "u")]:
        exact = obs.gradients(p)
        fd = function_observable(obs.func, fd_step=1e-5, richardson=True).gradients(p)
        for x, y in zip(exact[:4], fd[:4]):
            np.testing.assert_allclose(x - np.mean(x) if x.ndim == 1 else x,
                                       y - np.mean(y) if y.ndim == 1 else y, atol=1e-7)


def test_finite_difference_bracket_agrees(rng):
    spec = RMatrixSpec(2)
    p = point(2, rng)
    a, b, _, _ = observables(2, rng)
    exact = bracket_eval(spec, a, b, p)
    fa = function_observable(a.func, fd_step=1e-4, richardson=True)
    fb = function_observable(b.func, fd_step=1e-4, richardson=True)
    assert abs(bracket_eval(spec, fa, fb, p) - exact) < 1e-7 * max(1, abs(exact))


@pytest.mark.parametrize("n", [1, 2])
def test_jacobi_sampled(rng, n):
    spec = RMatrixSpec(n)
    for _ in range(3):
        p = point(n, rng)
        phi, psi, chi = jacobi_observables(n, rng)
        assert abs(jacobi_cyclic_sum(spec, phi, psi, chi, p)) < 1e-4


def test_jacobi_detects_a_broken_bracket(rng, monkeypatch):
    """Doubling R destroys the Yang-Baxter property and hence Jacobi."""
    import spinrs.groupoid as gp
    original = gp.apply_R
    monkeypatch.setattr(gp, "apply_R", lambda spec, q, X: 2 * original(spec, q, X))
    spec = RMatrixSpec(2)
    worst = 0.0
    for _ in range(3):
        p = point(2, rng)
        phi, psi, chi = jacobi_observables(2, rng)
        worst = max(worst, abs(jacobi_cyclic_sum(spec, phi, psi, chi, p)))
    assert worst > 1e-2


def test_h_action_axioms(rng):
    p = point(2, rng, gauge=True)
    h1, h2 = random_diagonal_h(2, rng), random_diagonal_h(2, rng)
    np.testing.assert_allclose(h_action(np.eye(3), p).g, p.g)
    np.testing.assert_allclose(h_action(h1, h_action(h2, p)).g, h_action(h1 @ h2, p).g,
                               rtol=1e-12)
    np.testing.assert_allclose(h_action(h1, p).g, h1 @ p.g @ np.linalg.inv(h1), rtol=1e-12)
    assert h_action(h1, p).on_gauge_bundle
    with pytest.raises(ValueError):
        h_action(np.ones((3, 3)), p)


def test_bracket_is_h_invariant(rng):
    """The H-action is Poisson on invariant-looking functions of g."""
    spec = RMatrixSpec(2)
    p = point(2, rng)
    h = random_diagonal_h(2, rng)
    f1 = pullback(TR)
    f2 = pullback(TR2)
    assert bracket_eval(spec, f1, f2, h_action(h, p)) == pytest.approx(
        bracket_eval(spec, f1, f2, p), abs=1e-10)


def test_momentum_gamma(rng):
    p = point(2, rng, gauge=True)
    np.testing.assert_array_equal(momentum_gamma(p), 0)
    p = GroupoidPoint(np.array([1.0, -1.0]), np.eye(2), np.zeros(2))
    np.testing.assert_array_equal(momentum_gamma(p), [1, -1])
    h = np.diag([2.0, 0.5])
    np.testing.assert_array_equal(momentum_gamma(h_action(h, p)), [1, -1])


def test_groupoid_laws(rng):
    u, v, w, x = (random_cartan(2, rng) for _ in range(4))
    g1, g2, g3 = (random_group(2, rng) for _ in range(3))
    a, b, c = GroupoidPoint(u, g1, v), GroupoidPoint(v, g2, w), GroupoidPoint(w, g3, x)
    left = groupoid_multiply(groupoid_multiply(a, b), c)
    right = groupoid_multiply(a, groupoid_multiply(b, c))
    np.testing.assert_allclose(left.g, right.g, rtol=1e-12)
    np.testing.assert_array_equal(left.u, u)
    np.testing.assert_array_equal(left.v, x)
    e = groupoid_multiply(a, groupoid_inverse(a))
    np.testing.assert_allclose(e.g, np.eye(3), atol=1e-12)
    np.testing.assert_array_equal(e.u, u)
    np.testing.assert_array_equal(e.v, u)
    np.testing.assert_allclose(groupoid_multiply(identity_at(u), a).g, a.g)
    with pytest.raises(ComposabilityError):
        groupoid_multiply(a, c)
