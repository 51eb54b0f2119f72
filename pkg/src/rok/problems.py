"""ODE problem abstraction and the built-in test problems.

All problems are autonomous: f maps a state vector to its derivative and
the Jacobian-vector product is the only access to J the integrator needs.
Nonautonomous systems must be augmented by the caller (append t as a
state with dt/dt = 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import JvpFailureError


class OdeProblem:
    """Autonomous ODE with matrix-free Jacobian access.

    rhs(y) returns dy/dt; jvp(y, v) returns J(y) @ v.  dense_jacobian and
    sparse_jacobian are optional callables used by diagnostics and by the
    full-space reference integrator.  The f/jv wrappers count evaluations;
    reset_counters() clears them.
    """

    def __init__(self, dim, rhs, jvp, dense_jacobian=None, sparse_jacobian=None,
                 name="problem", y0=None, t_span=None):
        self.dim = dim
        self._rhs = rhs
        self._jvp = jvp
        self._dense_jacobian = dense_jacobian
        self._sparse_jacobian = sparse_jacobian
        self.name = name
        self.y0 = None if y0 is None else np.asarray(y0, dtype=float)
        self.t_span = t_span
        self.n_rhs = 0
        self.n_jvp = 0

    def f(self, y):
        self.n_rhs += 1
        return np.asarray(self._rhs(y), dtype=float)

    def jv(self, y, v):
        self.n_jvp += 1
        try:
            out = np.asarray(self._jvp(y, v), dtype=float)
        except Exception as exc:
            raise JvpFailureError(f"jvp callback failed: {exc}") from exc
        if not np.all(np.isfinite(out)):
            raise JvpFailureError("jvp returned non-finite values")
        return out

    @property
    def has_dense_jacobian(self):
        return self._dense_jacobian is not None

    @property
    def has_sparse_jacobian(self):
        return self._sparse_jacobian is not None

    def jacobian(self, y):
        if self._dense_jacobian is None:
            raise ValueError(f"problem {self.name!r} has no dense Jacobian")
        return np.asarray(self._dense_jacobian(y), dtype=float)

    def sparse_jacobian(self, y):
        if self._sparse_jacobian is not None:
            return sp.csc_matrix(self._sparse_jacobian(y))
        return sp.csc_matrix(self.jacobian(y))

    def reset_counters(self):
        self.n_rhs = 0
        self.n_jvp = 0


def make_linear(jac: np.ndarray, name: str = "linear") -> OdeProblem:
    """y' = J y with y0 = all-ones."""
    jac = np.asarray(jac, dtype=float)
    n = jac.shape[0]
    return OdeProblem(
        dim=n,
        rhs=lambda y: jac @ y,
        jvp=lambda y, v: jac @ v,
        dense_jacobian=lambda y: jac,
        sparse_jacobian=lambda y: sp.csc_matrix(jac),
        name=name,
        y0=np.ones(n),
        t_span=(0.0, 1.0),
    )


def make_dahlquist(lam: float = -1.0) -> OdeProblem:
    """Scalar y' = lam*y, y0 = 1."""
    prob = make_linear(np.array([[lam]]), name="dahlquist")
    return prob


@dataclass(frozen=True)
class AllenCahnSpec:
    """Grid and coefficients for the 2D reaction-diffusion test problem.

    alpha is the diffusion coefficient; gamma_rc the reaction coefficient
    (named to avoid clashing with the tableau diagonal gamma).  The domain
    is [0,1]^2 with homogeneous Neumann boundaries; the simulated time
    interval is [0, 0.2].
    """

    nx: int
    ny: int
    alpha: float
    gamma_rc: float = 1.0

    def __post_init__(self):
        if self.nx < 3 or self.ny < 3:
            raise ValueError("grid must be at least 3x3")
        if self.alpha <= 0.0:
            raise ValueError("diffusion coefficient must be positive")


def _laplacian_1d(n: int, h: float) -> sp.csr_matrix:
    # Cell-centered second difference with mirror ghost cells (Neumann).
    main = -2.0 * np.ones(n)
    main[0] = main[-1] = -1.0
    lap = sp.diags([np.ones(n - 1), main, np.ones(n - 1)], offsets=[-1, 0, 1])
    return (lap / h**2).tocsr()


def make_allen_cahn(spec: AllenCahnSpec) -> OdeProblem:
    """du/dt = alpha*lap(u) + gamma_rc*(u - u^3) on a cell-centered grid.

    The Laplacian is the 5-point stencil with mirror ghost-cell closure,
    so constants are in its null space.  The initial field is
    0.4 + 0.1(x+y) + 0.1 sin(10x) sin(20y) sampled at cell centers.
    """
    nx, ny = spec.nx, spec.ny
    hx, hy = 1.0 / nx, 1.0 / ny
    alpha, gam = spec.alpha, spec.gamma_rc

    def lap2d(u):
        g = u.reshape(ny, nx)
        p = np.pad(g, 1, mode="edge")
        out = (p[1:-1, :-2] - 2.0 * g + p[1:-1, 2:]) / hx**2
        out += (p[:-2, 1:-1] - 2.0 * g + p[2:, 1:-1]) / hy**2
        return out.reshape(-1)

    def rhs(u):
        return alpha * lap2d(u) + gam * (u - u**3)

    def jvp(u, v):
        return alpha * lap2d(v) + gam * (1.0 - 3.0 * u**2) * v

    lap_matrix = sp.kronsum(_laplacian_1d(nx, hx), _laplacian_1d(ny, hy)).tocsr()

    def sparse_jac(u):
        return alpha * lap_matrix + sp.diags(gam * (1.0 - 3.0 * u**2))

    def dense_jac(u):
        return sparse_jac(u).toarray()

    xc = (np.arange(nx) + 0.5) * hx
    yc = (np.arange(ny) + 0.5) * hy
    x, y = np.meshgrid(xc, yc)
    u0 = 0.4 + 0.1 * (x + y) + 0.1 * np.sin(10.0 * x) * np.sin(20.0 * y)

    return OdeProblem(
        dim=nx * ny,
        rhs=rhs,
        jvp=jvp,
        dense_jacobian=dense_jac if nx * ny <= 4096 else None,
        sparse_jacobian=sparse_jac,
        name=f"allen-cahn-{nx}x{ny}-a{spec.alpha:g}",
        y0=u0.reshape(-1),
        t_span=(0.0, 0.2),
    )


def make_smooth_nonlinear() -> OdeProblem:
    """Damped pendulum: y0' = y1, y1' = -sin(y0) - 0.3*y1.

    Smooth, non-stiff, two-dimensional, with an equilibrium at the origin;
    used for convergence-order verification.
    """

    def rhs(y):
        return np.array([y[1], -np.sin(y[0]) - 0.3 * y[1]])

    def jvp(y, v):
        return np.array([v[1], -np.cos(y[0]) * v[0] - 0.3 * v[1]])

    def jac(y):
        return np.array([[0.0, 1.0], [-np.cos(y[0]), -0.3]])

    return OdeProblem(
        dim=2,
        rhs=rhs,
        jvp=jvp,
        dense_jacobian=jac,
        name="smooth-nonlinear",
        y0=np.array([1.2, 0.0]),
        t_span=(0.0, 2.0),
    )


def make_random_linear(n: int, seed: int, stiffness: float = 4.0) -> OdeProblem:
    """Seeded random stable linear system, used by the stability CLI."""
    rng = np.random.default_rng(seed)
    q = rng.standard_normal((n, n)) / np.sqrt(n)
    jac = q - stiffness * np.eye(n)
    return OdeProblem(
        dim=n,
        rhs=lambda y: jac @ y,
        jvp=lambda y, v: jac @ v,
        dense_jacobian=lambda y: jac,
        name=f"linear-random-{n}-s{seed}",
        y0=np.ones(n),
        t_span=(0.0, 1.0),
    )


# Problem registry: the CLI resolves problems by name.  A plugin registers
# a factory taking keyword parameters and returning an OdeProblem.
_REGISTRY: dict[str, callable] = {}


def register_problem(name: str, factory) -> None:
    _REGISTRY[name] = factory


def get_problem(name: str, **params) -> OdeProblem:
    if name not in _REGISTRY:
        raise KeyError(f"unknown problem {name!r}; registered: {sorted(_REGISTRY)}")
    return _REGISTRY[name](**params)


register_problem("dahlquist", lambda lam=-1.0: make_dahlquist(lam))
register_problem("smooth-nonlinear", lambda: make_smooth_nonlinear())
register_problem(
    "allen-cahn",
    lambda nx=64, ny=64, alpha=1.0, gamma_rc=1.0: make_allen_cahn(
        AllenCahnSpec(nx=int(nx), ny=int(ny), alpha=float(alpha), gamma_rc=float(gamma_rc))
    ),
)
register_problem(
    "linear-random",
    lambda n=8, seed=0, stiffness=4.0: make_random_linear(int(n), int(seed), float(stiffness)),
)
