"""Discrete Green's functions with homogeneous Dirichlet data.

The field G solves A G = e_{x0} on interior nodes, the discrete version of
L G = -delta_{x0} with G = 0 on the box boundary.  With the M-matrix
assembly G is nonnegative, peaks at the source, and the row sums of A G
recover the unit delta mass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridError, ScalarField
from .operator import DiscreteOperator
from .solver import SolverError, solve_spd


@dataclass(frozen=True, eq=False)
class GreenField:
    """Green's function for one source node.

    mass is the computed sum of (A G)_i over interior nodes, equal to one up
    to the solver tolerance; it is stored as a conservation diagnostic.
    """

    field: ScalarField
    source: int
    mass: float


def compute_green(op: DiscreteOperator, x0: int, tol: float = 1e-10,
                  max_iter: int | None = None) -> GreenField:
    """Solve for the Green's function with source at interior node x0."""
    grid = op.grid
    if not 0 <= x0 < grid.n_nodes:
        raise GridError(f"source node {x0} outside grid with {grid.n_nodes} nodes")
    if grid.boundary_mask()[x0]:
        raise GridError(f"source node {x0} lies on the boundary")
    pos = int(np.searchsorted(op.interior, x0))
    rhs = np.zeros(op.n_interior)
    rhs[pos] = 1.0
    g_int, report = solve_spd(op.matrix, rhs, tol=tol, max_iter=max_iter)
    if not report.converged:
        raise SolverError(
            f"Green solve did not converge: residual {report.final_residual:.3e}"
        )
    values = np.zeros(grid.n_nodes)
    values[op.interior] = g_int
    mass = float(np.sum(op.matrix @ g_int))
    return GreenField(field=ScalarField(grid, values), source=x0, mass=mass)


def series_oracle_square(point, source, side: float, terms: int = 4000) -> float:
    """Continuum Green's function of -Laplace on the square [0, side]^2.

    Separated sine series, summed in log space so large arguments cannot
    overflow.  Terms decay like exp(-k pi |y - y0| / side), so the oracle is
    accurate to machine precision whenever the evaluation point is off the
    horizontal line through the source.  Serves as an independent reference
    for discrete Green solves.
    """
    x, y = float(point[0]), float(point[1])
    x0, y0 = float(source[0]), float(source[1])
    a = float(side)
    y_lo, y_hi = min(y, y0), max(y, y0)
    if y_hi - y_lo < 1e-9 * a:
        raise ValueError("evaluation point on the source line, series decays too slowly")
    total = 0.0
    for k in range(1, terms + 1):
        lam = k * np.pi / a
        u, v, w = lam * y_lo, lam * (a - y_hi), k * np.pi
        ratio = np.exp(u + v - w) * (1 - np.exp(-2 * u)) * (1 - np.exp(-2 * v)) \
            / (2 * (1 - np.exp(-2 * w)))
        term = (2.0 / (k * np.pi)) * np.sin(lam * x) * np.sin(lam * x0) * ratio
        total += term
        if k > 20 and abs(ratio) < 1e-18:
            break
    return total
