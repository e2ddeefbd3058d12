"""Uniform axis-aligned grids and node-based scalar fields."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class GridError(ValueError):
    """Invalid grid construction or node lookup."""


MIN_NODES_PER_AXIS = 17
_ISOTROPY_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class GridSpec:
    """Axis-aligned box grid with identical node count and spacing on every axis.

    Nodes are indexed row-major, so in 2D the node with multi-index (i, j)
    has flat index i * nodes_per_axis + j and coordinates
    (origin[0] + i * h, origin[1] + j * h).  Treated as immutable: derived
    arrays are recomputed on demand and callers must not modify them in place.
    """

    dim: int
    origin: tuple
    extent: tuple
    nodes_per_axis: int
    h: float

    @property
    def shape(self) -> tuple:
        return (self.nodes_per_axis,) * self.dim

    @property
    def n_nodes(self) -> int:
        return self.nodes_per_axis ** self.dim

    def multi_indices(self) -> np.ndarray:
        """Integer multi-indices of all nodes, shape (n_nodes, dim), row-major order."""
        grids = np.meshgrid(*[np.arange(self.nodes_per_axis)] * self.dim, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def coords(self) -> np.ndarray:
        """Node coordinates, shape (n_nodes, dim)."""
        return np.asarray(self.origin) + self.h * self.multi_indices()

    def node_coords(self, node: int) -> np.ndarray:
        idx = np.unravel_index(node, self.shape)
        return np.asarray(self.origin) + self.h * np.asarray(idx, dtype=float)

    def boundary_mask(self) -> np.ndarray:
        """Boolean mask over nodes, True where any index sits on a box face."""
        idx = self.multi_indices()
        last = self.nodes_per_axis - 1
        return np.any((idx == 0) | (idx == last), axis=1)

    def interior_ids(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary_mask())

    def boundary_ids(self) -> np.ndarray:
        return np.flatnonzero(self.boundary_mask())

    def cell_volumes(self) -> np.ndarray:
        """Trapezoid cell volume per node: h^dim, halved once per boundary-touching axis.

        The volumes sum exactly to the box volume.
        """
        idx = self.multi_indices()
        last = self.nodes_per_axis - 1
        touching = ((idx == 0) | (idx == last)).sum(axis=1)
        return self.h ** self.dim * 0.5 ** touching


def build_grid(dim: int, origin, extent, nodes_per_axis: int) -> GridSpec:
    """Construct a grid over the box [origin, origin + extent].

    The box must be a cube (equal extent on every axis within 1e-12 relative)
    so that the spacing is isotropic; anything else is rejected.
    """
    if dim not in (2, 3):
        raise GridError(f"dim must be 2 or 3, got {dim}")
    origin = tuple(float(v) for v in origin)
    extent = tuple(float(v) for v in extent)
    if len(origin) != dim or len(extent) != dim:
        raise GridError("origin and extent must have one entry per axis")
    if any(e <= 0 for e in extent):
        raise GridError(f"extent must be positive, got {extent}")
    if nodes_per_axis < MIN_NODES_PER_AXIS:
        raise GridError(
            f"nodes_per_axis must be at least {MIN_NODES_PER_AXIS}, got {nodes_per_axis}"
        )
    spacings = [e / (nodes_per_axis - 1) for e in extent]
    h = spacings[0]
    for s in spacings[1:]:
        if abs(s - h) > _ISOTROPY_RTOL * abs(h):
            raise GridError(
                f"anisotropic spacing requested: per-axis spacings {spacings} differ"
            )
    return GridSpec(dim=dim, origin=origin, extent=extent,
                    nodes_per_axis=int(nodes_per_axis), h=h)


def locate_node(grid: GridSpec, point) -> int:
    """Flat index of the node nearest to point; ties resolve toward lower index.

    The point must lie inside the closed box.
    """
    point = np.asarray(point, dtype=float)
    if point.shape != (grid.dim,):
        raise GridError(f"point must have {grid.dim} coordinates")
    lo = np.asarray(grid.origin)
    hi = lo + np.asarray(grid.extent)
    pad = 1e-12 * max(1.0, float(np.max(np.abs(hi))))
    if np.any(point < lo - pad) or np.any(point > hi + pad):
        raise GridError(f"point {tuple(point)} outside box [{tuple(lo)}, {tuple(hi)}]")
    idx = []
    last = grid.nodes_per_axis - 1
    for k in range(grid.dim):
        t = (point[k] - lo[k]) / grid.h
        i = math.ceil(t - 0.5)  # round half toward the lower index
        idx.append(min(max(i, 0), last))
    return int(np.ravel_multi_index(tuple(idx), grid.shape))


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Values attached to every grid node, stored flat in row-major order."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n_nodes,):
            raise GridError(
                f"field has {values.shape} values, grid has {self.grid.n_nodes} nodes"
            )
        if not np.all(np.isfinite(values)):
            raise GridError("field contains non-finite values")
        object.__setattr__(self, "values", values)

    def reshaped(self) -> np.ndarray:
        """View of the values arranged on the grid shape."""
        return self.values.reshape(self.grid.shape)


def same_grid(a: GridSpec, b: GridSpec) -> bool:
    return (
        a.dim == b.dim
        and a.nodes_per_axis == b.nodes_per_axis
        and a.origin == b.origin
        and a.extent == b.extent
    )
