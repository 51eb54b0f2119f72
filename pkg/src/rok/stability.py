"""Linear stability diagnostics for approximate-Jacobian Rosenbrock steps.

On the linear test problem y' = J y a step with stage matrix A (instead of
the exact J) acts as y_{n+1} = R_eff(hJ, hA) y_n.  This module assembles
the effective transfer matrix from the s-stage block system

    K = h (I_s x J) Y + h [(alpha x J) + (gamma x A)] K,
    y_{n+1} = y_n + (b^T x I) K,

splits it as R_eff = R + S where R is the classical stability matrix
(A = J) and S the stage stability term, and verifies the resolvent
identity the split rests on.  Everything here materializes Kronecker
blocks densely and is meant for small diagnostic problems only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import arnoldi as _arnoldi
from .linalg import spectral_radius
from .problems import make_linear
from .step import rok_step
from .tableau import Tableau

#: Dense block assembly guard: refuse N*s beyond this.
MAX_BLOCK_DIM = 2000


@dataclass(frozen=True)
class StabilityReport:
    rho_classic: float
    rho_effective: float
    h: float
    basis_size: int


def _check_sizes(jac: np.ndarray, a: np.ndarray, tableau: Tableau) -> int:
    n = jac.shape[0]
    if jac.shape != (n, n) or a.shape != (n, n):
        raise ValueError("J and A must be square with matching sizes")
    if n * tableau.s > MAX_BLOCK_DIM:
        raise ValueError(f"N*s = {n * tableau.s} exceeds dense assembly guard {MAX_BLOCK_DIM}")
    return n


def basis_approximation(basis: _arnoldi.KrylovBasis) -> np.ndarray:
    """Dense A = V H V^T from a Krylov basis."""
    return basis.v @ basis.h @ basis.v.T


def _stage_system(jac, a, tableau, h):
    n = jac.shape[0]
    s = tableau.s
    return np.eye(n * s) - np.kron(tableau.alpha, h * jac) - np.kron(tableau.gamma_full, h * a)


def _stage_supervector(jac, a, tableau, h, y):
    """K solving the block stage system for initial state y."""
    n = jac.shape[0]
    s = tableau.s
    rhs = np.tile(h * (jac @ y), s)
    return np.linalg.solve(_stage_system(jac, a, tableau, h), rhs)


def transfer_matrix_analytic(jac: np.ndarray, a: np.ndarray, tableau: Tableau, h: float) -> np.ndarray:
    """Effective transfer matrix R_eff(hJ, hA) by dense block assembly."""
    n = _check_sizes(jac, a, tableau)
    s = tableau.s
    rhs = np.kron(np.ones((s, 1)), h * jac)  # (Ns, N): columns are stage supervectors per unit state
    x = np.linalg.solve(_stage_system(jac, a, tableau, h), rhs)
    r = np.eye(n)
    for i in range(s):
        r += tableau.b[i] * x[i * n : (i + 1) * n, :]
    return r


def transfer_matrix_empirical(jac: np.ndarray, approx, tableau: Tableau, h: float) -> np.ndarray:
    """Transfer matrix column-by-column from one-step runs on y' = J y.

    approx may be a KrylovBasis (columns come from rok_step with that
    basis) or a dense matrix A (columns come from the A-substituted stage
    recursion solved directly).
    """
    n = jac.shape[0]
    cols = np.empty((n, n))
    if isinstance(approx, _arnoldi.KrylovBasis):
        problem = make_linear(jac)
        for j in range(n):
            y = np.eye(n)[:, j]
            cols[:, j] = rok_step(problem, y, h, tableau, approx, f0=jac @ y).y_new
        return cols

    a = np.asarray(approx, dtype=float)
    _check_sizes(jac, a, tableau)
    ident = np.eye(n)
    lhs = ident - h * tableau.gamma * a
    for j in range(n):
        y = ident[:, j]
        ks = []
        for i in range(tableau.s):
            yi = y + sum(tableau.alpha[i, jj] * ks[jj] for jj in range(i))
            rhs = h * (jac @ yi) + h * (a @ sum(
                (tableau.gamma_lower[i, jj] * ks[jj] for jj in range(i)), np.zeros(n)))
            ks.append(np.linalg.solve(lhs, rhs))
        cols[:, j] = y + sum(tableau.b[i] * ks[i] for i in range(tableau.s))
    return cols


def stage_stability_term(jac: np.ndarray, a: np.ndarray, tableau: Tableau, h: float,
                         y: np.ndarray) -> np.ndarray:
    """S(hJ, hA) y via the block formula

    -(b^T x I) [I - beta x hJ]^{-1} [gamma x (hJ - hA)] K

    with K the supervector of stage values of the linear test problem
    (K itself solves [I - alpha x hJ - gamma x hA] K = h (1_s x J) y, so
    K = [I - gamma x hA]^{-1} h F with F the supervector of stage RHS
    values).
    """
    n = _check_sizes(jac, a, tableau)
    s = tableau.s
    k = _stage_supervector(jac, a, tableau, h, y)
    mid = np.kron(tableau.gamma_full, jac - a) @ k
    g_beta = np.eye(n * s) - np.kron(tableau.beta, h * jac)
    w = np.linalg.solve(g_beta, h * mid)
    out = np.zeros(n)
    for i in range(s):
        out -= tableau.b[i] * w[i * n : (i + 1) * n]
    return out


def stage_stability_term_resolvent(jac: np.ndarray, a: np.ndarray, tableau: Tableau,
                                   h: float, y: np.ndarray) -> np.ndarray:
    """S(hJ, hA) y by the resolvent difference

    (b^T x I) ([I - alpha x hJ - gamma x hA]^{-1} - [I - beta x hJ]^{-1}) h (1_s x J) y,

    an independent route to the same quantity used to cross-check
    stage_stability_term.
    """
    n = _check_sizes(jac, a, tableau)
    s = tableau.s
    rhs = np.tile(h * (jac @ y), s)
    g_full = _stage_system(jac, a, tableau, h)
    g_beta = np.eye(n * s) - np.kron(tableau.beta, h * jac)
    diff = np.linalg.solve(g_full, rhs) - np.linalg.solve(g_beta, rhs)
    out = np.zeros(n)
    for i in range(s):
        out += tableau.b[i] * diff[i * n : (i + 1) * n]
    return out


def check_block_identity(jac: np.ndarray, a: np.ndarray, tableau: Tableau, h: float) -> float:
    """Max-abs deviation between the two sides of the resolvent identity

    [I - alpha x hJ - gamma x hA]^{-1} - [I - beta x hJ]^{-1}
        = -[I - beta x hJ]^{-1} [gamma x (hJ - hA)] [I - alpha x hJ - gamma x hA]^{-1}.
    """
    n = _check_sizes(jac, a, tableau)
    s = tableau.s
    g_full = _stage_system(jac, a, tableau, h)
    g_beta = np.eye(n * s) - np.kron(tableau.beta, h * jac)
    inv_full = np.linalg.inv(g_full)
    inv_beta = np.linalg.inv(g_beta)
    lhs = inv_full - inv_beta
    rhs = -inv_beta @ np.kron(tableau.gamma_full, h * (jac - a)) @ inv_full
    return float(np.max(np.abs(lhs - rhs)))


def stability_report(jac: np.ndarray, a: np.ndarray, tableau: Tableau, h: float,
                     basis_size: int = 0) -> StabilityReport:
    rho_classic = spectral_radius(transfer_matrix_analytic(jac, jac, tableau, h))
    rho_effective = spectral_radius(transfer_matrix_analytic(jac, a, tableau, h))
    return StabilityReport(rho_classic=rho_classic, rho_effective=rho_effective,
                           h=h, basis_size=basis_size)


def max_stable_step(jac: np.ndarray, a: np.ndarray, tableau: Tableau,
                    h_grid) -> float:
    """Largest h in the grid with rho(R_eff) <= 1 + 1e-12 (0.0 if none)."""
    best = 0.0
    for h in sorted(h_grid):
        rho = spectral_radius(transfer_matrix_analytic(jac, a, tableau, h))
        if rho <= 1.0 + 1e-12:
            best = h
    return best
