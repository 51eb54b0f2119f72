"""Shared fixtures and randomized-problem factories for the test suite."""

import numpy as np
import pytest

from rok.problems import OdeProblem
from rok.tableau import default_tableau


@pytest.fixture(scope="session")
def tab():
    return default_tableau()


def make_random_nonlinear(n: int, rng: np.random.Generator, stiffness: float = 4.0) -> OdeProblem:
    """Random stable linear part plus a smooth elementwise nonlinearity.

    f(y) = A y + 0.5 sin(y), so J(y) = A + 0.5 diag(cos(y)) is available
    exactly for both the matrix-free product and the dense oracle.
    """
    a = rng.standard_normal((n, n)) / np.sqrt(n) - stiffness * np.eye(n)

    return OdeProblem(
        dim=n,
        rhs=lambda y: a @ y + 0.5 * np.sin(y),
        jvp=lambda y, v: a @ v + 0.5 * np.cos(y) * v,
        dense_jacobian=lambda y: a + 0.5 * np.diag(np.cos(y)),
        name=f"random-nonlinear-{n}",
        y0=rng.standard_normal(n),
        t_span=(0.0, 1.0),
    )


def random_state(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal(n)


def make_poisoned_problem(name: str = "poisoned") -> OdeProblem:
    """RHS finite only at the initial state: the basis builds, every step
    attempt hits a non-finite stage value, and the controller must shrink
    the step until it underflows."""
    y0 = np.ones(2)

    def rhs(y):
        if np.array_equal(y, y0):
            return -y
        return np.full(2, np.nan)

    return OdeProblem(dim=2, rhs=rhs, jvp=lambda y, v: -v, name=name,
                      y0=y0, t_span=(0.0, 1.0))
