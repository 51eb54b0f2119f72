"""Reference solutions: full-space integration, an independent fixed-step
oracle, and the binary reference-state file format.

The reference integrator is the suite's full-space mode: a classical
Rosenbrock step whose stage systems use the exact Jacobian with a direct
(sparse or dense) factorization, equivalent to a Krylov step with M = N
but without building a basis.  Cross-validation uses classical fixed-step
RK4 with step halving, which shares nothing with the Rosenbrock path.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .errors import NonFiniteError, StepSizeUnderflowError
from .tableau import Tableau

MAGIC = b"ROKREF1"


def write_reference(path, y: np.ndarray, metadata: dict) -> None:
    """Binary layout: magic, uint64 LE dimension, float64 LE state, JSON trailer."""
    y = np.asarray(y, dtype="<f8")
    blob = MAGIC + struct.pack("<Q", y.shape[0]) + y.tobytes()
    blob += json.dumps(metadata, sort_keys=True).encode("utf-8")
    Path(path).write_bytes(blob)


def read_reference(path) -> tuple[np.ndarray, dict]:
    raw = Path(path).read_bytes()
    if raw[: len(MAGIC)] != MAGIC:
        raise ValueError(f"{path}: not a reference file (bad magic)")
    off = len(MAGIC)
    (dim,) = struct.unpack_from("<Q", raw, off)
    off += 8
    y = np.frombuffer(raw, dtype="<f8", count=dim, offset=off).copy()
    off += 8 * dim
    metadata = json.loads(raw[off:].decode("utf-8")) if len(raw) > off else {}
    return y, metadata


def rk4_integrate(problem, t0: float, tf: float, y0: np.ndarray, n_steps: int) -> np.ndarray:
    """Classical fixed-step RK4; the independent cross-validation oracle."""
    y = np.asarray(y0, dtype=float).copy()
    h = (tf - t0) / n_steps
    for _ in range(n_steps):
        k1 = problem.f(y)
        k2 = problem.f(y + 0.5 * h * k1)
        k3 = problem.f(y + 0.5 * h * k2)
        k4 = problem.f(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y


def _full_space_step(problem, y, h, tab: Tableau):
    """One classical Rosenbrock step with a direct stage-system solve."""
    n = problem.dim
    if problem.has_sparse_jacobian and n > 64:
        jac = problem.sparse_jacobian(y)
        lhs = scipy.sparse.identity(n, format="csc") - h * tab.gamma * jac
        solver = scipy.sparse.linalg.splu(lhs.tocsc())
        solve = solver.solve
        jmul = jac.dot
    else:
        jac = problem.jacobian(y)
        lu = scipy.linalg.lu_factor(np.eye(n) - h * tab.gamma * jac)
        solve = lambda b: scipy.linalg.lu_solve(lu, b)
        jmul = jac.dot
    ks = []
    f_prev = None
    for i in range(tab.s):
        if i > 0 and np.array_equal(tab.alpha[i], tab.alpha[i - 1]):
            f_i = f_prev
        else:
            f_i = problem.f(y + sum(tab.alpha[i, j] * ks[j] for j in range(i)))
        f_prev = f_i
        acc = sum((tab.gamma_lower[i, j] * ks[j] for j in range(i)), np.zeros(n))
        ks.append(solve(h * f_i + h * jmul(acc)))
    y_new = y + sum(tab.b[i] * ks[i] for i in range(tab.s))
    y_emb = y + sum(tab.b_hat[i] * ks[i] for i in range(tab.s))
    return y_new, y_emb


def full_space_integrate(problem, t0: float, tf: float, y0: np.ndarray, tab: Tableau,
                         rtol: float = 1e-12, atol: float = 1e-12,
                         h_init: float = 1e-4, h_min: float = 1e-14) -> np.ndarray:
    """Adaptive classical Rosenbrock integration with exact-Jacobian stages."""
    y = np.asarray(y0, dtype=float).copy()
    t = t0
    h = min(h_init, tf - t0)
    exponent = -1.0 / (min(tab.order, tab.embedded_order) + 1)
    t_edge = 1e-14 * max(1.0, abs(tf))
    while tf - t > t_edge:
        clipped = False
        if t + h >= tf:
            h = tf - t
            clipped = True
        try:
            y_new, y_emb = _full_space_step(problem, y, h, tab)
            if not np.all(np.isfinite(y_new)):
                raise NonFiniteError("non-finite reference state")
            w = (y_new - y_emb) / (atol + rtol * np.abs(y_new))
            err = float(np.sqrt(np.mean(w * w)))
        except (NonFiniteError, RuntimeError):
            err = np.inf
        if err <= 1.0:
            y = y_new
            t = tf if clipped else t + h
        factor = 0.5 if np.isinf(err) else (0.9 * err**exponent if err > 0.0 else 5.0)
        h *= min(5.0, max(0.2, factor))
        if h < h_min:
            raise StepSizeUnderflowError(f"reference integration stalled at t={t:.6g}", t=t)
    return y


def compute_reference(problem, t0: float, tf: float, y0: np.ndarray, tab: Tableau,
                      rtol: float = 1e-12, atol: float = 1e-12,
                      cross_validate: bool = True, rk4_steps: int = 20000,
                      cross_tol: float = 1e-9) -> np.ndarray:
    """Full-space reference, cross-validated against step-halving RK4.

    Raises ValueError when the RK4 oracle at rk4_steps and 2*rk4_steps
    disagrees with the reference beyond cross_tol (relative L2).
    """
    y_ref = full_space_integrate(problem, t0, tf, y0, tab, rtol=rtol, atol=atol)
    if cross_validate:
        scale = np.linalg.norm(y_ref)
        coarse = rk4_integrate(problem, t0, tf, y0, rk4_steps)
        fine = rk4_integrate(problem, t0, tf, y0, 2 * rk4_steps)
        self_err = np.linalg.norm(fine - coarse) / max(scale, 1e-300)
        ref_err = np.linalg.norm(fine - y_ref) / max(scale, 1e-300)
        if self_err > cross_tol or ref_err > cross_tol:
            raise ValueError(
                f"reference cross-validation failed: rk4 self-error {self_err:.3e}, "
                f"reference mismatch {ref_err:.3e}, tolerance {cross_tol:.1e}"
            )
    return y_ref
