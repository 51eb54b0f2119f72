"""Single Rosenbrock-Krylov step and stage-residual diagnostics.

One step solves, for each stage i in the reduced space of a Krylov basis
(V, H):

    F_i      = f(y + sum_j alpha_ij k_j)
    psi_i    = V^T F_i
    (I - h*gamma*H) lambda_i = h psi_i + h H sum_{j<i} gamma_ij lambda_j
    k_i      = V lambda_i + h (F_i - V psi_i)

and combines y_new = y + sum b_i k_i with the embedded y_embedded from
b_hat.  With the extension variant, the basis is extended with F_i before
stage i is solved, the reduced factorization grows by a column append,
and earlier lambda_j are zero-padded; the correction term F_i - V psi_i
then vanishes by construction.

The residual of stage i is its defect in the full-space stage equation
k_i = h F_i + h J sum_j gamma_ij k_j.  direct_stage_residual evaluates
the defect literally (the brute-force route); stage_residual_formula and
stage_residual_formula_extended evaluate the closed forms built from the
Arnoldi overflow pair and the out-of-span components.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import arnoldi, linalg
from .errors import NonFiniteError, SingularMatrixError
from .tableau import Tableau


@dataclass
class StepStats:
    basis_core: int = 0
    basis_total: int = 0
    extensions: int = 0
    first_stage_residual: float = 0.0
    refactorized: bool = False
    hit_cap: bool = False


@dataclass
class StepInternals:
    """Per-stage data retained for residual diagnostics."""

    y: np.ndarray
    h: float
    tableau: Tableau
    basis: arnoldi.KrylovBasis
    extended: bool
    stage_dims: list = field(default_factory=list)
    lambdas: list = field(default_factory=list)
    f_stages: list = field(default_factory=list)
    psi_stages: list = field(default_factory=list)
    k_stages: list = field(default_factory=list)


@dataclass
class StepResult:
    y_new: np.ndarray
    y_embedded: np.ndarray
    stats: StepStats
    internals: StepInternals | None = None


def _padded(vec: np.ndarray, size: int) -> np.ndarray:
    if vec.shape[0] == size:
        return vec
    out = np.zeros(size)
    out[: vec.shape[0]] = vec
    return out


def rok_step(
    problem,
    y: np.ndarray,
    h: float,
    tableau: Tableau,
    basis: arnoldi.KrylovBasis,
    extend: bool = False,
    keep_internals: bool = False,
    f0: np.ndarray | None = None,
) -> StepResult:
    """Advance one step of size h from y using a prebuilt Krylov basis.

    The basis must have been built from f(y); stage 1 reuses its start
    vector instead of re-evaluating the RHS.  Pass f0 to override the
    stage-1 RHS when the basis was built from a different vector (used by
    the stability diagnostics, which probe unit states against a basis
    built elsewhere).  Raises SingularMatrixError
    if the reduced system cannot be factored and NonFiniteError if a stage
    RHS produces NaN/Inf (the driver treats that as "step too large").
    """
    tab = tableau
    gamma_full = tab.gamma_full
    stats = StepStats(basis_core=basis.core_size, hit_cap=basis.hit_cap)
    internals = StepInternals(y=y, h=h, tableau=tab, basis=basis, extended=extend)

    fac = linalg.lu_factor(basis.h, h * tab.gamma)
    v = basis.v
    ks: list[np.ndarray] = []
    lambdas: list[np.ndarray] = []
    f_prev = None

    for i in range(tab.s):
        if i == 0:
            f_i = basis.start_vector if f0 is None else np.asarray(f0, dtype=float)
        elif i > 0 and np.array_equal(tab.alpha[i], tab.alpha[i - 1]):
            f_i = f_prev  # identical stage argument: reuse the evaluation
        else:
            yi = y + sum(tab.alpha[i, j] * ks[j] for j in range(i))
            f_i = problem.f(yi)
            if not np.all(np.isfinite(f_i)):
                raise NonFiniteError(f"stage {i + 1} RHS is not finite")
        f_prev = f_i

        if extend and i > 0:
            grown = arnoldi.extend(basis, problem, y, f_i)
            if grown.size > basis.size:
                try:
                    fac = linalg.lu_append_column(
                        fac, grown.h[:-1, -1], grown.h[-1, -1], grown.h[-1, :-1]
                    )
                except SingularMatrixError:
                    fac = linalg.lu_factor(grown.h, h * tab.gamma)
                    stats.refactorized = True
                basis = grown
                v = basis.v
                stats.extensions += 1

        m = basis.size
        psi = v.T @ f_i
        acc = np.zeros(m)
        for j in range(i):
            acc += gamma_full[i, j] * _padded(lambdas[j], m)
        lam = linalg.lu_solve(fac, h * psi + h * (basis.h @ acc))
        k_i = v @ lam + h * (f_i - v @ psi)

        lambdas.append(lam)
        ks.append(k_i)
        if keep_internals:
            internals.stage_dims.append(m)
            internals.f_stages.append(f_i)
            internals.psi_stages.append(psi)
        if i == 0:
            stats.first_stage_residual = arnoldi.first_stage_residual_norm(h, tab.gamma, basis, lam)

    y_new = y + sum(tab.b[i] * ks[i] for i in range(tab.s))
    y_embedded = y + sum(tab.b_hat[i] * ks[i] for i in range(tab.s))
    if not (np.all(np.isfinite(y_new)) and np.all(np.isfinite(y_embedded))):
        raise NonFiniteError("step produced a non-finite state")

    stats.basis_total = basis.size
    if keep_internals:
        internals.basis = basis
        internals.lambdas = lambdas
        internals.k_stages = ks
    return StepResult(
        y_new=y_new,
        y_embedded=y_embedded,
        stats=stats,
        internals=internals if keep_internals else None,
    )


def direct_stage_residual(problem, internals: StepInternals, i: int) -> np.ndarray:
    """Brute-force residual r_i = k_i - h F_i - h J sum_j gamma_ij k_j.

    Evaluated with a single Jacobian-vector product; this is the oracle
    the closed-form residual expressions are checked against.
    """
    tab = internals.tableau
    h = internals.h
    gamma_full = tab.gamma_full
    ksum = sum(gamma_full[i, j] * internals.k_stages[j] for j in range(i + 1))
    jk = problem.jv(internals.y, ksum)
    return internals.k_stages[i] - h * internals.f_stages[i] - h * jk


def stage_residual_formula(problem, internals: StepInternals, i: int) -> np.ndarray:
    """Closed-form stage residual for the unextended step.

    r_i = - sum_{j<=i} h^2 gamma_ij J (F_j - V psi_j)
          - h h_{M+1,M} v_{M+1} e_M^T sum_{j<=i} gamma_ij lambda_j
    """
    if internals.extended:
        raise ValueError("step was run with extension; use stage_residual_formula_extended")
    tab = internals.tableau
    h = internals.h
    basis = internals.basis
    gamma_full = tab.gamma_full

    r = np.zeros(basis.dim)
    for j in range(i + 1):
        gij = gamma_full[i, j]
        if gij == 0.0:
            continue
        out_of_span = internals.f_stages[j] - basis.v @ internals.psi_stages[j]
        if np.any(out_of_span):
            r -= h * h * gij * problem.jv(internals.y, out_of_span)
    if basis.h_next != 0.0:
        lam_sum = sum(gamma_full[i, j] * internals.lambdas[j] for j in range(i + 1))
        r -= h * basis.h_next * basis.v_next * lam_sum[basis.core_size - 1]
    return r


def stage_residual_formula_extended(problem, internals: StepInternals, i: int) -> np.ndarray:
    """Closed-form stage residual when the basis was extended per stage.

    Both terms are out-of-span components: the core Arnoldi overflow
    h_{M+1,M} v_{M+1} weighted by component M of the gamma-combined
    zero-padded reduced solutions, and the projection of J applied to the
    appended vectors present at stage i, weighted by their components.
    """
    if not internals.extended:
        raise ValueError("step was run without extension; use stage_residual_formula")
    tab = internals.tableau
    h = internals.h
    basis = internals.basis
    gamma_full = tab.gamma_full
    m_core = basis.core_size
    dim_i = internals.stage_dims[i]

    lam_sum = np.zeros(dim_i)
    for j in range(i + 1):
        lam_sum += gamma_full[i, j] * _padded(internals.lambdas[j], dim_i)

    r = np.zeros(basis.dim)
    if basis.h_next != 0.0:
        r -= h * basis.h_next * basis.v_next * lam_sum[m_core - 1]
    if dim_i > m_core:
        v_i = basis.v[:, :dim_i]
        w = v_i[:, m_core:dim_i] @ lam_sum[m_core:dim_i]
        if np.any(w):
            z = problem.jv(internals.y, w)
            r -= h * (z - v_i @ (v_i.T @ z))
    return r
