"""Krylov basis construction: fixed-size, residual-adaptive, and extended.

The basis V spans K_M(J, f) = span{f, Jf, ..., J^{M-1}f} and carries the
projected Jacobian H = V^T J V together with the overflow pair
(h_{M+1,M}, v_{M+1}) from the Arnoldi recurrence

    J V = V H + h_{M+1,M} v_{M+1} e_M^T.

Beyond the pure Arnoldi loop, arbitrary vectors can be appended to the
basis while maintaining H = V^T J V; appended columns add a zero row under
the old Hessenberg block, so H stays upper Hessenberg.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import linalg
from .errors import SingularMatrixError, ZeroStartVectorError

#: Default residual test indices for the adaptive Arnoldi process.
DEFAULT_TEST_INDICES = (1, 2, 3, 4, 6, 8, 11, 15, 20, 27, 36, 48)

#: ||f|| at or below this is treated as an equilibrium (zero start vector).
ZERO_START_THRESHOLD = 1e-300

#: h_{i+1,i} <= BREAKDOWN_REL_TOL * beta declares happy breakdown.
BREAKDOWN_REL_TOL = 1e-12

#: Remainder norm <= DROP_REL_TOL * ||w|| makes extend() a no-op.
DROP_REL_TOL = 1e-12


@dataclass(frozen=True)
class KrylovBasis:
    """Orthonormal basis with projected Jacobian and extension bookkeeping.

    v has orthonormal columns; the first core_size columns are the pure
    Arnoldi part, the remaining ext_count columns were appended from
    outside the Krylov sequence.  h_next/v_next are the Arnoldi overflow
    pair of the core part (h_next == 0 and v_next is None on breakdown).
    beta is the norm of the start vector, so v[:, 0] * beta recovers it.
    """

    v: np.ndarray
    h: np.ndarray
    h_next: float
    v_next: np.ndarray | None
    beta: float
    core_size: int
    ext_count: int = 0
    ext_jv: tuple = ()
    hit_cap: bool = False

    @property
    def size(self) -> int:
        return self.core_size + self.ext_count

    @property
    def dim(self) -> int:
        return self.v.shape[0]

    @property
    def start_vector(self) -> np.ndarray:
        return self.beta * self.v[:, 0]


def _orthogonalize(zeta: np.ndarray, v: np.ndarray, ncols: int) -> tuple[np.ndarray, np.ndarray, float]:
    """One modified-Gram-Schmidt pass against v[:, :ncols], with a second
    pass when cancellation ate more than half the norm."""
    coeffs = np.zeros(ncols)
    norm_before = np.linalg.norm(zeta)
    for j in range(ncols):
        c = float(v[:, j] @ zeta)
        coeffs[j] += c
        zeta = zeta - c * v[:, j]
    norm_after = np.linalg.norm(zeta)
    if norm_after < 0.5 * norm_before:
        for j in range(ncols):
            c = float(v[:, j] @ zeta)
            coeffs[j] += c
            zeta = zeta - c * v[:, j]
        norm_after = np.linalg.norm(zeta)
    return zeta, coeffs, float(norm_after)


class _ArnoldiState:
    """Incrementally grown Arnoldi factorization (work arrays oversized by one)."""

    def __init__(self, problem, y, f, m_max):
        self.problem = problem
        self.y = y
        beta = float(np.linalg.norm(f))
        if beta <= ZERO_START_THRESHOLD:
            raise ZeroStartVectorError("start vector norm below threshold")
        self.beta = beta
        n = f.shape[0]
        self.v = np.zeros((n, m_max + 1))
        self.h = np.zeros((m_max + 1, m_max))
        self.v[:, 0] = f / beta
        self.broke_down = False
        self.m = 0

    def advance(self) -> bool:
        """Add one Krylov vector; returns False on happy breakdown."""
        i = self.m
        zeta = self.problem.jv(self.y, self.v[:, i])
        zeta, coeffs, hnorm = _orthogonalize(zeta, self.v, i + 1)
        self.h[: i + 1, i] = coeffs
        self.h[i + 1, i] = hnorm
        if hnorm <= BREAKDOWN_REL_TOL * self.beta:
            self.broke_down = True
            self.m = i + 1
            return False
        self.v[:, i + 1] = zeta / hnorm
        self.m = i + 1
        return True

    def snapshot(self, size: int, hit_cap: bool = False) -> KrylovBasis:
        if self.broke_down and size >= self.m:
            size = self.m
            h_next, v_next = 0.0, None
        else:
            h_next = float(self.h[size, size - 1])
            v_next = self.v[:, size].copy()
        return KrylovBasis(
            v=self.v[:, :size].copy(),
            h=self.h[:size, :size].copy(),
            h_next=h_next,
            v_next=v_next,
            beta=self.beta,
            core_size=size,
            ext_count=0,
            hit_cap=hit_cap,
        )


def build_fixed(problem, y: np.ndarray, f: np.ndarray, m: int) -> KrylovBasis:
    """Build a basis of fixed target size m (truncated at happy breakdown)."""
    if m < 1:
        raise ValueError("basis size must be >= 1")
    m = min(m, problem.dim)
    state = _ArnoldiState(problem, y, f, m)
    for _ in range(m):
        if not state.advance():
            break
    return state.snapshot(state.m)


def build_adaptive(
    problem,
    y: np.ndarray,
    f: np.ndarray,
    h: float,
    gamma: float,
    resid_tol: float,
    m_max: int,
    test_indices=DEFAULT_TEST_INDICES,
) -> KrylovBasis:
    """Grow the basis until the first-stage residual passes resid_tol.

    At each test index i the reduced first-stage system
    (I - h*gamma*H_i) lambda_1 = h*beta*e_1 is solved and the monitored
    residual norm |h*gamma*h_{i+1,i}| * |e_i^T lambda_1| compared against
    resid_tol.  Returns the basis at the first passing index, at the
    breakdown index, or at m_max with hit_cap set when no index passed.
    """
    m_max = min(m_max, problem.dim)
    tests = sorted(i for i in set(test_indices) if 1 <= i <= m_max)
    state = _ArnoldiState(problem, y, f, m_max)
    for i in range(1, m_max + 1):
        if not state.advance():
            return state.snapshot(state.m)
        if i in tests or i == m_max:
            try:
                fac = linalg.lu_factor(state.h[:i, :i], h * gamma)
                lam1 = linalg.lu_solve(fac, h * state.beta * np.eye(1, i, 0)[0])
            except SingularMatrixError:
                continue
            resid = abs(h * gamma * state.h[i, i - 1]) * abs(lam1[i - 1])
            if resid <= resid_tol:
                return state.snapshot(i)
    return state.snapshot(m_max, hit_cap=True)


def extend(basis: KrylovBasis, problem, y: np.ndarray, w: np.ndarray) -> KrylovBasis:
    """Append the component of w orthogonal to span(V).

    Returns the basis unchanged when w is already in the span (remainder
    below the drop threshold).  Otherwise the normalized remainder v_bar
    becomes a new column and H grows by one row and column: the column is
    V^T (J v_bar), the row is zero under the core Arnoldi block but picks
    up v_bar^T (J v_bar_k) under every previously appended column, which
    is what keeps the extended Arnoldi relation exact.  (The resulting H
    differs from V^T J V in the last core column by h_{M+1,M} times the
    overlap of appended vectors with v_{M+1}; the extended relation, not
    the projection identity, is the property the residual theory needs.)
    The J-products of appended vectors are retained so later appends can
    fill in their rows.
    """
    w = np.asarray(w, dtype=float)
    wnorm = float(np.linalg.norm(w))
    if wnorm == 0.0:
        return basis
    m = basis.size
    rem, _, remnorm = _orthogonalize(w.copy(), basis.v, m)
    if remnorm <= DROP_REL_TOL * wnorm:
        return basis
    vbar = rem / remnorm
    jvbar = problem.jv(y, vbar)
    v_new = np.column_stack([basis.v, vbar])
    h_new = np.zeros((m + 1, m + 1))
    h_new[:m, :m] = basis.h
    h_new[:, m] = v_new.T @ jvbar
    for k, jv_k in enumerate(basis.ext_jv):
        h_new[m, basis.core_size + k] = float(vbar @ jv_k)
    return replace(
        basis,
        v=v_new,
        h=h_new,
        ext_count=basis.ext_count + 1,
        ext_jv=basis.ext_jv + (jvbar,),
    )


def first_stage_residual_norm(h: float, gamma: float, basis: KrylovBasis, lambda1: np.ndarray) -> float:
    """||r_1|| = |h*gamma*h_{M+1,M}| * |e_M^T lambda_1| with M the core size."""
    if basis.h_next == 0.0:
        return 0.0
    return abs(h * gamma * basis.h_next) * abs(float(lambda1[basis.core_size - 1]))
