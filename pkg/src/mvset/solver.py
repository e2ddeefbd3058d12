"""Iterative solvers: preconditioned CG and projected SOR for the LCP.

Both solvers operate on symmetric positive definite CSR matrices with
strictly positive diagonals, as produced by the operator assembly.  They
start from the zero iterate, making every run deterministic for a fixed
build, and they own their scratch arrays so independent solves can run
concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels


class SolverError(RuntimeError):
    """Non-finite values or an invalid solver request."""


@dataclass
class SolveReport:
    """Outcome of one linear or complementarity solve.

    final_residual is relative to the right hand side scale.  The
    complementarity gap (LCP only, None for plain solves) is the largest
    w_i (A w - q)_i normalized by max|w| max|q|.  residual_history records
    the relative residual after each iteration for convergence diagnostics.
    """

    iterations: int
    final_residual: float
    converged: bool
    complementarity_gap: float | None = None
    residual_history: list = field(default_factory=list, repr=False)


def _csr_parts(matrix: sp.csr_matrix):
    matrix = matrix.tocsr()
    matrix.sort_indices()
    indptr = matrix.indptr.astype(np.int32, copy=False)
    indices = matrix.indices.astype(np.int32, copy=False)
    data = matrix.data.astype(np.float64, copy=False)
    diag = matrix.diagonal()
    if np.any(diag <= 0):
        raise SolverError("matrix diagonal must be strictly positive")
    return matrix, indptr, indices, data, diag


def _sgs_preconditioner(indptr, indices, data, diag):
    """Apply z = M^-1 r for the symmetric Gauss-Seidel splitting M = (D+L) D^-1 (D+U)."""

    def apply(r):
        t = np.empty_like(r)
        kernels.forward_subst(indptr, indices, data, diag, r, t)
        t *= diag
        z = np.empty_like(r)
        kernels.backward_subst(indptr, indices, data, diag, t, z)
        return z

    return apply


def solve_spd(matrix: sp.csr_matrix, rhs: np.ndarray, tol: float = 1e-10,
              max_iter: int | None = None) -> tuple[np.ndarray, SolveReport]:
    """Conjugate gradients with symmetric Gauss-Seidel preconditioning.

    Stops when ||rhs - A x|| <= tol ||rhs||.  A zero right hand side returns
    the zero vector immediately.  If max_iter is exhausted the best iterate
    is still returned with converged=False.
    """
    matrix, indptr, indices, data, diag = _csr_parts(matrix)
    rhs = np.asarray(rhs, dtype=float)
    if not np.all(np.isfinite(rhs)):
        raise SolverError("right hand side contains non-finite values")
    n = len(rhs)
    if max_iter is None:
        max_iter = max(1000, 20 * n)
    bnorm = float(np.linalg.norm(rhs))
    if bnorm == 0.0:
        return np.zeros(n), SolveReport(0, 0.0, True, residual_history=[0.0])

    precond = _sgs_preconditioner(indptr, indices, data, diag)
    x = np.zeros(n)
    r = rhs.copy()
    z = precond(r)
    p = z.copy()
    rz = float(r @ z)
    history = []
    for it in range(1, max_iter + 1):
        ap = matrix @ p
        pap = float(p @ ap)
        if pap <= 0 or not np.isfinite(pap):
            raise SolverError("matrix is not positive definite along a search direction")
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        rel = float(np.linalg.norm(r)) / bnorm
        history.append(rel)
        if not np.isfinite(rel):
            raise SolverError("solver produced non-finite values")
        if rel <= tol:
            return x, SolveReport(it, rel, True, residual_history=history)
        z = precond(r)
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, SolveReport(max_iter, history[-1], False, residual_history=history)


def _lcp_metrics(matrix, w, q, qscale):
    r = matrix @ w - q
    active = w > 0.0
    act = float(np.max(np.abs(r[active]))) if active.any() else 0.0
    infeas = float(max(0.0, -np.min(r[~active]))) if (~active).any() else 0.0
    wscale = float(np.max(w)) if active.any() else 1.0
    gap = float(np.max(w * np.abs(r))) / (wscale * qscale) if active.any() else 0.0
    return max(act, infeas) / qscale, gap


def solve_lcp(matrix: sp.csr_matrix, q: np.ndarray, tol: float = 1e-8,
              max_iter: int = 30000, omega: float = 1.8,
              w0: np.ndarray | None = None,
              check_every: int = 8) -> tuple[np.ndarray, SolveReport]:
    """Projected SOR for w >= 0, A w - q >= 0, w (A w - q) = 0.

    Lexicographic sweeps with relaxation factor omega in (1, 2) run until
    the residual on the active set, the feasibility defect on the inactive
    set and the complementarity gap all drop below tol (relative to max|q|).
    A direct solve on the final active set then polishes w, re-shrinking the
    set if the exact solve drives entries negative.
    """
    matrix, indptr, indices, data, diag = _csr_parts(matrix)
    q = np.asarray(q, dtype=float)
    if not np.all(np.isfinite(q)):
        raise SolverError("LCP data contains non-finite values")
    if not 1.0 < omega < 2.0:
        raise SolverError(f"omega must lie in (1, 2), got {omega}")
    n = len(q)
    qscale = float(np.max(np.abs(q)))
    if qscale == 0.0:
        return np.zeros(n), SolveReport(0, 0.0, True, complementarity_gap=0.0)
    if np.all(q <= 0.0):
        # w = 0 is feasible and complementary
        return np.zeros(n), SolveReport(0, 0.0, True, complementarity_gap=0.0)

    w = np.zeros(n) if w0 is None else np.array(w0, dtype=float)
    w[w < 0] = 0.0
    sweeps = 0
    converged = False
    residual = np.inf
    gap = np.inf
    while sweeps < max_iter:
        for _ in range(check_every):
            kernels.psor_sweep(indptr, indices, data, diag, w, q, omega)
            sweeps += 1
            if sweeps >= max_iter:
                break
        if not np.all(np.isfinite(w)):
            raise SolverError("projected SOR produced non-finite values")
        residual, gap = _lcp_metrics(matrix, w, q, qscale)
        if residual <= tol and gap <= tol:
            converged = True
            break

    w = _active_set_polish(matrix, w, q)
    residual, gap = _lcp_metrics(matrix, w, q, qscale)
    converged = converged and residual <= 10 * tol and gap <= 10 * tol
    return w, SolveReport(sweeps, residual, converged, complementarity_gap=gap)


def _active_set_polish(matrix, w, q, rounds: int = 4):
    """Exact solve on the active set {w > 0}, dropping entries that turn negative."""
    active = w > 0.0
    for _ in range(rounds):
        if not active.any():
            return np.zeros_like(w)
        ids = np.flatnonzero(active)
        sub = matrix[ids][:, ids].tocsc()
        try:
            w_act = spla.spsolve(sub, q[ids])
        except Exception:
            return w  # keep the PSOR iterate if the sub-solve fails
        if not np.all(np.isfinite(w_act)):
            return w
        negative = w_act < 0.0
        w = np.zeros_like(w)
        w[ids] = np.where(negative, 0.0, w_act)
        if not negative.any():
            return w
        active = w > 0.0
    return w
