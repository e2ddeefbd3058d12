"""Timing comparison of the kernel backends.

Runs the projected relaxation sweep and the triangular substitution pair on
one assembled stiffness matrix, once with the compiled extension and once
with the pure Python fallback, and reports wall times and the speedup.  The
final sweep iterates are compared so a fast-but-wrong kernel cannot pass
unnoticed.
"""

import argparse
import time

import numpy as np

from mvset import _kernels_py
from mvset.coefficients import identity_field
from mvset.grid import build_grid
from mvset.operator import assemble

try:
    from mvset import _kernels
    IMPLS = [("compiled", _kernels), ("python", _kernels_py)]
except ImportError:
    IMPLS = [("python", _kernels_py)]


def run_impl(impl, mat, diag, q, sweeps):
    indptr, indices, data = mat.indptr, mat.indices, mat.data
    w = np.zeros_like(q)
    t0 = time.perf_counter()
    for _ in range(sweeps):
        impl.psor_sweep(indptr, indices, data, diag, w, q, 1.5)
    t_psor = time.perf_counter() - t0

    b = np.ones_like(q)
    tmp = np.empty_like(q)
    out = np.empty_like(q)
    t0 = time.perf_counter()
    for _ in range(sweeps):
        impl.forward_subst(indptr, indices, data, diag, b, tmp)
        impl.backward_subst(indptr, indices, data, diag, tmp, out)
    t_subst = time.perf_counter() - t0
    return t_psor, t_subst, w


def main():
    ap = argparse.ArgumentParser(description="kernel backend timings")
    ap.add_argument("--nodes", type=int, default=129,
                    help="grid nodes per axis (default 129)")
    ap.add_argument("--sweeps", type=int, default=50,
                    help="relaxation sweeps to time (default 50)")
    args = ap.parse_args()

    grid = build_grid(2, (0.0, 0.0), (1.0, 1.0), args.nodes)
    op = assemble(identity_field(grid))
    mat = op.matrix.tocsr()
    diag = mat.diagonal()
    rng = np.random.default_rng(7)
    q = rng.standard_normal(mat.shape[0])

    print(f"matrix: {mat.shape[0]} unknowns, {mat.nnz} nonzeros, "
          f"{args.sweeps} sweeps")
    print(f"{'backend':<10} {'psor_sweep':>12} {'subst pair':>12}")
    results = {}
    for name, impl in IMPLS:
        t_psor, t_subst, w = run_impl(impl, mat, diag, q.copy(), args.sweeps)
        results[name] = (t_psor, t_subst, w)
        print(f"{name:<10} {t_psor:>11.4f}s {t_subst:>11.4f}s")

    if len(results) == 2:
        tp_c, ts_c, w_c = results["compiled"]
        tp_p, ts_p, w_p = results["python"]
        print(f"speedup    {tp_p / tp_c:>11.1f}x {ts_p / ts_c:>11.1f}x")
        gap = float(np.abs(w_c - w_p).max())
        scale = max(1.0, float(np.abs(w_c).max()))
        print(f"iterate agreement: max |dw| = {gap:.3e}")
        if gap > 1e-10 * scale:
            raise SystemExit("backends disagree beyond roundoff")
    else:
        print("compiled extension not importable; timed the fallback only")


if __name__ == "__main__":
    main()
