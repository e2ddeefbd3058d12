"""Obstacle problem for mean value sets.

The mean value set of radius r around a source node is recovered from the
height function w, the solution of the linear complementarity problem

    w >= 0,    A w - q >= 0,    w . (A w - q) = 0,

where q carries a unit point mass at the source minus the constant density
r^{-dim} integrated over cells.  The set itself is the region where w is
positive, cleaned up by a thresholding rule and an areal fill that removes
lower-dimensional defects.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .grid import GridError, ScalarField
from .operator import DiscreteOperator
from .solver import SolveReport, solve_lcp


class ExtractionError(RuntimeError):
    """Raised when no nonempty set can be extracted from a height function."""


@dataclass(frozen=True)
class ObstacleSolution:
    """Height function of one obstacle solve, with its source and radius."""

    source: int
    radius: float
    height: ScalarField
    report: SolveReport

    @property
    def grid(self):
        return self.height.grid


@dataclass(frozen=True)
class MeanValueSet:
    source: int
    radius: float
    mask: np.ndarray
    volume: float
    inradius: float
    outradius: float
    threshold: float
    touches_boundary: bool
    n_components: int

    def mask_flat(self) -> np.ndarray:
        return self.mask.reshape(-1)


@dataclass(frozen=True)
class MeanValueFamily:
    """Obstacle solutions and extracted sets for an increasing radius list."""

    solutions: tuple
    sets: tuple

    @property
    def radii(self) -> np.ndarray:
        return np.array([s.radius for s in self.sets])

    @property
    def volumes(self) -> np.ndarray:
        return np.array([s.volume for s in self.sets])


def obstacle_rhs(op: DiscreteOperator, source: int, radius: float) -> np.ndarray:
    """Interior right-hand side: point mass at the source minus r^{-dim} V."""
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    pos = np.searchsorted(op.interior, source)
    if pos >= op.interior.size or op.interior[pos] != source:
        raise GridError("source must be an interior node")
    q = -op.interior_volumes() / radius**op.grid.dim
    q[pos] += 1.0
    return q


def solve_obstacle(op: DiscreteOperator, source: int, radius: float,
                   tol: float = 1e-10, max_iter: int = 200000,
                   omega: float = 1.8) -> ObstacleSolution:
    """Solve the height-function complementarity problem for one radius."""
    q = obstacle_rhs(op, source, radius)
    w_int, report = solve_lcp(op.matrix, q, tol=tol, max_iter=max_iter, omega=omega)
    values = np.zeros(op.grid.n_nodes)
    values[op.interior] = w_int
    return ObstacleSolution(source=source, radius=float(radius),
                            height=ScalarField(op.grid, values), report=report)


def areal_fill(mask: np.ndarray) -> np.ndarray:
    """Fill nodes every one of whose surrounding 2^dim blocks meets the mask.

    A block is a cell of the dual grid: 2x2 nodes in 2d, 2x2x2 in 3d.  A node
    outside the mask is added when each block containing it already intersects
    the mask, which removes one-node-wide slits and punctures while leaving a
    convex pixelated region unchanged.  Single pass.
    """
    dim = mask.ndim
    # block_hit[c] = any mask node in the block with lower corner c
    hit = mask
    for axis in range(dim):
        lo = [slice(None)] * dim
        hi = [slice(None)] * dim
        lo[axis] = slice(0, -1)
        hi[axis] = slice(1, None)
        hit = hit[tuple(lo)] | hit[tuple(hi)]
    # node filled iff all containing blocks hit; pad with False so nodes at
    # the domain edge only quantify over blocks that exist
    all_hit = np.ones(mask.shape, dtype=bool)
    for offsets in np.ndindex(*(2,) * dim):
        padded = np.zeros(mask.shape, dtype=bool)
        dst = []
        for axis, off in enumerate(offsets):
            n = mask.shape[axis]
            # block corner c = node - off must lie in [0, n-2]
            dst.append(slice(off, n - 1 + off))
        padded[tuple(dst)] = hit
        all_hit &= padded
    return mask | all_hit


def extract_set(op: DiscreteOperator, solution: ObstacleSolution,
                fill: bool = True) -> MeanValueSet:
    """Extract the mean value set from a height function.

    The positivity threshold is a fixed fraction of h^2 times the height
    scale away from the source peak, so discretization noise of order tol
    stays below it while genuinely positive nodes stay above.
    """
    grid = solution.grid
    w = solution.height.reshaped()
    src_mi = np.unravel_index(solution.source, grid.shape)
    near_src = np.zeros(grid.shape, dtype=bool)
    block = tuple(slice(max(0, i - 1), min(n, i + 2))
                  for i, n in zip(src_mi, grid.shape))
    near_src[block] = True
    scale = float(w[~near_src].max())
    if scale <= 0.0:
        scale = float(w.max())
    if scale <= 0.0:
        raise ExtractionError(
            "height function vanishes identically, no set to extract "
            f"(radius {solution.radius:g}, spacing {grid.h:g})")
    threshold = 0.01 * grid.h**2 * scale
    mask = w > threshold
    labels, n_components = ndimage.label(mask)
    if not mask[src_mi]:
        raise ExtractionError("source node fell below the extraction threshold")
    mask = labels == labels[src_mi]
    if fill:
        mask = areal_fill(mask)
    volumes = op.grid.cell_volumes().reshape(grid.shape)
    volume = float(volumes[mask].sum())

    x0 = grid.node_coords(solution.source)
    coords = [grid.origin[k] + grid.h * np.arange(grid.shape[k])
              for k in range(grid.dim)]
    mesh = np.meshgrid(*coords, indexing="ij")
    dist = np.sqrt(sum((m - c)**2 for m, c in zip(mesh, x0)))
    outradius = float(dist[mask].max()) + grid.h / 2.0
    inradius = max(float(dist[~mask].min()) - grid.h / 2.0, 0.0)

    edge = np.zeros(grid.shape, dtype=bool)
    for axis in range(grid.dim):
        sl = [slice(None)] * grid.dim
        sl[axis] = slice(0, 3)
        edge[tuple(sl)] = True
        sl[axis] = slice(-3, None)
        edge[tuple(sl)] = True
    touches = bool((mask & edge).any())

    return MeanValueSet(source=solution.source, radius=solution.radius,
                        mask=mask, volume=volume, inradius=inradius,
                        outradius=outradius, threshold=threshold,
                        touches_boundary=touches, n_components=int(n_components))


def thread_count() -> int:
    """Worker count for family solves, from the MVSET_THREADS variable.

    0 means auto (one worker per cpu); unset means 1.
    """
    raw = os.environ.get("MVSET_THREADS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ValueError(f"MVSET_THREADS must be an integer, got {raw!r}") from exc
    if n < 0:
        raise ValueError(f"MVSET_THREADS must be nonnegative, got {n}")
    if n == 0:
        return os.cpu_count() or 1
    return n


def compute_family(op: DiscreteOperator, source: int, radii,
                   tol: float = 1e-10, fill: bool = True) -> MeanValueFamily:
    """Solve the obstacle problem for every radius, smallest to largest.

    Radii are solved independently (threaded when MVSET_THREADS > 1; the
    relaxation kernels release the GIL) and the results are ordered by
    radius, so the output does not depend on the worker count.
    """
    radii = sorted(float(r) for r in radii)
    if not radii:
        raise ValueError("need at least one radius")
    if radii[0] <= 0.0:
        raise ValueError("radii must be positive")

    def one(r: float):
        sol = solve_obstacle(op, source, r, tol=tol)
        return sol, extract_set(op, sol, fill=fill)

    workers = thread_count()
    if workers > 1 and len(radii) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pairs = list(pool.map(one, radii))
    else:
        pairs = [one(r) for r in radii]
    return MeanValueFamily(solutions=tuple(p[0] for p in pairs),
                           sets=tuple(p[1] for p in pairs))
