"""Built-in problems: derivative consistency, grids, and the registry."""

import numpy as np
import pytest

from rok.errors import JvpFailureError
from rok.problems import (
    AllenCahnSpec,
    OdeProblem,
    get_problem,
    make_allen_cahn,
    make_dahlquist,
    make_random_linear,
    make_smooth_nonlinear,
    register_problem,
)


def finite_difference_jvp(prob, y, v, eps=1e-7):
    return (prob.f(y + eps * v) - prob.f(y - eps * v)) / (2.0 * eps)


@pytest.mark.parametrize(
    "factory",
    [
        make_smooth_nonlinear,
        lambda: make_allen_cahn(AllenCahnSpec(nx=8, ny=6, alpha=0.5, gamma_rc=2.0)),
        lambda: make_random_linear(7, seed=1),
    ],
)
def test_jvp_matches_finite_differences(factory):
    prob = factory()
    rng = np.random.default_rng(30)
    y = prob.y0 + 0.1 * rng.standard_normal(prob.dim)
    for _ in range(3):
        v = rng.standard_normal(prob.dim)
        fd = finite_difference_jvp(prob, y, v)
        assert np.allclose(prob.jv(y, v), fd, rtol=1e-6, atol=1e-6)


def test_dense_jacobian_matches_jvp_columns():
    prob = make_allen_cahn(AllenCahnSpec(nx=5, ny=4, alpha=1.0))
    y = prob.y0
    jac = prob.jacobian(y)
    for j in range(prob.dim):
        e = np.eye(prob.dim)[:, j]
        assert np.allclose(jac[:, j], prob.jv(y, e), atol=1e-12)


def test_sparse_jacobian_matches_dense():
    prob = make_allen_cahn(AllenCahnSpec(nx=6, ny=5, alpha=0.3))
    y = prob.y0
    assert np.allclose(prob.sparse_jacobian(y).toarray(), prob.jacobian(y), atol=1e-13)


def test_allen_cahn_constant_field_has_zero_diffusion():
    # With mirror-ghost (zero-flux) closure the discrete Laplacian
    # annihilates constants, so the derivative of a constant field is the
    # reaction term alone.
    spec = AllenCahnSpec(nx=9, ny=7, alpha=2.0, gamma_rc=3.0)
    prob = make_allen_cahn(spec)
    u = np.full(prob.dim, 0.3)
    expected = 3.0 * (0.3 - 0.3**3)
    assert np.allclose(prob.f(u), expected, atol=1e-12)


def test_allen_cahn_initial_field():
    spec = AllenCahnSpec(nx=4, ny=3, alpha=1.0)
    prob = make_allen_cahn(spec)
    # corner cell center (x, y) = (1/8, 1/6)
    x, y = 0.5 / 4, 0.5 / 3
    expected = 0.4 + 0.1 * (x + y) + 0.1 * np.sin(10 * x) * np.sin(20 * y)
    assert prob.y0[0] == pytest.approx(expected, abs=1e-14)
    assert prob.t_span == (0.0, 0.2)
    assert prob.dim == 12


def test_allen_cahn_spec_validation():
    with pytest.raises(ValueError):
        AllenCahnSpec(nx=2, ny=8, alpha=1.0)
    with pytest.raises(ValueError):
        AllenCahnSpec(nx=8, ny=8, alpha=0.0)


def test_dahlquist_has_known_solution():
    prob = make_dahlquist(-1.0)
    assert prob.dim == 1
    assert prob.f(np.array([2.0]))[0] == -2.0


def test_random_linear_is_seed_reproducible():
    a = make_random_linear(9, seed=7)
    b = make_random_linear(9, seed=7)
    c = make_random_linear(9, seed=8)
    y = np.linspace(0.0, 1.0, 9)
    assert np.array_equal(a.f(y), b.f(y))
    assert not np.array_equal(a.f(y), c.f(y))


def test_counters_and_reset():
    prob = make_smooth_nonlinear()
    prob.f(prob.y0)
    prob.jv(prob.y0, np.ones(2))
    prob.jv(prob.y0, np.ones(2))
    assert (prob.n_rhs, prob.n_jvp) == (1, 2)
    prob.reset_counters()
    assert (prob.n_rhs, prob.n_jvp) == (0, 0)


def test_jvp_failure_is_wrapped():
    bad = OdeProblem(dim=2, rhs=lambda y: y, jvp=lambda y, v: 1 / 0)
    with pytest.raises(JvpFailureError):
        bad.jv(np.ones(2), np.ones(2))
    nonfinite = OdeProblem(dim=2, rhs=lambda y: y, jvp=lambda y, v: np.array([np.nan, 0.0]))
    with pytest.raises(JvpFailureError):
        nonfinite.jv(np.ones(2), np.ones(2))


def test_missing_dense_jacobian_raises():
    prob = OdeProblem(dim=2, rhs=lambda y: y, jvp=lambda y, v: v)
    with pytest.raises(ValueError):
        prob.jacobian(np.ones(2))


def test_registry_round_trip():
    prob = get_problem("allen-cahn", nx=8, ny=8, alpha=0.5)
    assert prob.dim == 64
    with pytest.raises(KeyError):
        get_problem("no-such-problem")
    register_problem("custom-test-problem", lambda k=1.0: make_dahlquist(-float(k)))
    assert get_problem("custom-test-problem", k=2.0).dim == 1
