"""Symmetric elliptic coefficient tensors sampled at grid nodes."""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .grid import GridSpec


class EllipticityError(ValueError):
    """Coefficient tensor violates symmetry or the stated eigenvalue bounds."""


_SYMMETRY_ATOL = 1e-12
_EIG_SLACK = 1e-9
_MAX_EIG_SAMPLE = 32768


@dataclass(frozen=True, eq=False)
class CoefficientField:
    """One symmetric dim x dim tensor per node with eigenvalues in [lam, Lam].

    tensors has shape (n_nodes, dim, dim).  Validation happens at
    construction; assembly re-runs it so a mutated array cannot slip through.
    """

    grid: GridSpec
    tensors: np.ndarray
    lam: float
    Lam: float
    family: str = "custom"

    def __post_init__(self):
        tensors = np.asarray(self.tensors, dtype=float)
        object.__setattr__(self, "tensors", tensors)
        self.validate()

    def validate(self):
        n, d = self.grid.n_nodes, self.grid.dim
        if self.tensors.shape != (n, d, d):
            raise EllipticityError(
                f"tensors shape {self.tensors.shape}, expected {(n, d, d)}"
            )
        if not (0 < self.lam <= self.Lam):
            raise EllipticityError(f"need 0 < lam <= Lam, got {self.lam}, {self.Lam}")
        scale = max(1.0, self.Lam)
        asym = np.max(np.abs(self.tensors - np.swapaxes(self.tensors, 1, 2)))
        if asym > _SYMMETRY_ATOL * scale:
            raise EllipticityError(f"tensor asymmetry {asym:.3e} exceeds tolerance")
        sample = self.tensors
        if n > _MAX_EIG_SAMPLE:
            stride = -(-n // _MAX_EIG_SAMPLE)
            sample = self.tensors[::stride]
        eigs = np.linalg.eigvalsh(sample)
        slack = _EIG_SLACK * scale
        lo, hi = float(eigs.min()), float(eigs.max())
        if lo < self.lam - slack or hi > self.Lam + slack:
            raise EllipticityError(
                f"eigenvalues span [{lo:.6g}, {hi:.6g}], outside [{self.lam}, {self.Lam}]"
            )


def identity_field(grid: GridSpec) -> CoefficientField:
    tensors = np.broadcast_to(np.eye(grid.dim), (grid.n_nodes, grid.dim, grid.dim)).copy()
    return CoefficientField(grid, tensors, 1.0, 1.0, family="identity")


def anisotropic_field(grid: GridSpec, ratio: float) -> CoefficientField:
    """Constant diagonal tensor diag(ratio, 1[, 1])."""
    if ratio <= 0:
        raise EllipticityError(f"anisotropy ratio must be positive, got {ratio}")
    diag = np.ones(grid.dim)
    diag[0] = ratio
    tensors = np.broadcast_to(np.diag(diag), (grid.n_nodes, grid.dim, grid.dim)).copy()
    return CoefficientField(grid, tensors, min(1.0, ratio), max(1.0, ratio),
                            family=f"anisotropic({ratio:g})")


def checkerboard_field(grid: GridSpec, lam: float, Lam: float,
                       period: float) -> CoefficientField:
    """Scalar tensor s(x) * I alternating between lam and Lam on cubic blocks.

    The pattern is fixed in physical coordinates, so refining the grid samples
    the same coefficient.
    """
    if period <= 0:
        raise EllipticityError(f"checkerboard period must be positive, got {period}")
    coords = grid.coords()
    blocks = np.floor(coords / period + 1e-12).astype(np.int64).sum(axis=1)
    s = np.where(blocks % 2 == 0, lam, Lam).astype(float)
    tensors = s[:, None, None] * np.eye(grid.dim)
    return CoefficientField(grid, tensors, min(lam, Lam), max(lam, Lam),
                            family=f"checkerboard({lam:g},{Lam:g},{period:g})")


def smooth_rotation_field(grid: GridSpec, ratio: float = 2.0) -> CoefficientField:
    """Anisotropy with eigenframe rotating smoothly across the box.

    Eigenvalues are (ratio, 1[, 1]) and the strong axis turns with
    theta(x) = pi * (x_1 + x_2) / diameter, exercising the full-tensor
    assembly path including mixed second derivatives.
    """
    if ratio <= 0:
        raise EllipticityError(f"anisotropy ratio must be positive, got {ratio}")
    coords = grid.coords()
    span = sum(grid.extent[:2])
    theta = np.pi * (coords[:, 0] + coords[:, 1]) / span
    c, s = np.cos(theta), np.sin(theta)
    n, d = grid.n_nodes, grid.dim
    tensors = np.zeros((n, d, d))
    a, b = float(ratio), 1.0
    tensors[:, 0, 0] = a * c * c + b * s * s
    tensors[:, 1, 1] = a * s * s + b * c * c
    tensors[:, 0, 1] = tensors[:, 1, 0] = (a - b) * c * s
    if d == 3:
        tensors[:, 2, 2] = 1.0
    return CoefficientField(grid, tensors, min(1.0, ratio), max(1.0, ratio),
                            family=f"smooth-rotation({ratio:g})")


_FAMILY_RE = re.compile(r"^\s*([a-z-]+)\s*(?:\(([^)]*)\))?\s*$")


def make_coefficients(grid: GridSpec, family: str) -> CoefficientField:
    """Build a named coefficient family from a compact spec string.

    Accepted forms: identity, anisotropic(ratio), checkerboard(lam,Lam,period),
    smooth-rotation or smooth-rotation(ratio).
    """
    m = _FAMILY_RE.match(family)
    if not m:
        raise EllipticityError(f"unparseable coefficient family {family!r}")
    name, argtext = m.group(1), m.group(2)
    args = []
    if argtext is not None and argtext.strip():
        try:
            args = [float(v) for v in argtext.split(",")]
        except ValueError:
            raise EllipticityError(f"bad arguments in coefficient family {family!r}")
    if name == "identity" and not args:
        return identity_field(grid)
    if name == "anisotropic" and len(args) == 1:
        return anisotropic_field(grid, args[0])
    if name == "checkerboard" and len(args) == 3:
        return checkerboard_field(grid, args[0], args[1], args[2])
    if name == "smooth-rotation" and len(args) in (0, 1):
        return smooth_rotation_field(grid, args[0] if args else 2.0)
    raise EllipticityError(f"unknown coefficient family {family!r}")
