"""Quantitative verification of the mean value property.

Harmonic samples are produced by solving the discrete operator itself with
boundary values from a small datum library, so the samples satisfy A v = 0 to
solver tolerance for whatever coefficients the operator carries.  Two
instruments measure the mean value property:

* check_mean_value: the plain volume average over the extracted mask against
  the value at the source.  First-order accurate, since the mask counts whole
  cells.
* dual_identity_check: the complementarity pairing restricted to the
  noncontact set.  On rows where the height function is positive the residual
  of the obstacle solve vanishes, so this identity holds to solver tolerance
  at every resolution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridError, GridSpec, ScalarField
from .obstacle import MeanValueFamily, MeanValueSet, ObstacleSolution
from .operator import DiscreteOperator, apply as op_apply
from .solver import solve_spd


@dataclass(frozen=True)
class HarmonicSample:
    field: ScalarField
    kind: str  # harmonic, subsolution, supersolution
    boundary_label: str


@dataclass(frozen=True)
class CheckRow:
    label: str
    value_at_x0: float
    average_over_set: float
    discrepancy: float


@dataclass(frozen=True)
class PairRow:
    label: str
    r_small: float
    r_large: float
    margin_source: float  # avg_{D_r} v - v(x0), sign per sample kind
    margin_pair: float    # avg_{D_s} v - avg_{D_r} v, sign per sample kind


@dataclass(frozen=True)
class VerificationReport:
    rows: tuple = ()
    pairs: tuple = ()
    max_discrepancy: float = 0.0
    tolerance: float = float("inf")
    passed: bool = True


def datum_library(dim: int) -> tuple:
    """Names of the standard boundary data, ten per dimension."""
    if dim == 2:
        return ("one", "x1", "x2", "x1x2", "x1sq-minus-x2sq", "cubic-re",
                "cubic-im", "sin-sinh", "random-smooth-0", "random-smooth-1")
    return ("one", "x1", "x2", "x3", "x1x2", "x1x3", "x2x3",
            "x1sq-minus-x2sq", "x2sq-minus-x3sq", "random-smooth-0")


def datum_values(grid: GridSpec, name: str) -> np.ndarray:
    """Evaluate a named boundary datum at every node of the grid."""
    pts = grid.coords()
    x = [pts[:, k] for k in range(grid.dim)]
    if name == "one":
        return np.ones(grid.n_nodes)
    if name == "x1":
        return x[0].copy()
    if name == "x2":
        return x[1].copy()
    if name == "x3" and grid.dim == 3:
        return x[2].copy()
    if name == "x1x2":
        return x[0] * x[1]
    if name == "x1x3" and grid.dim == 3:
        return x[0] * x[2]
    if name == "x2x3" and grid.dim == 3:
        return x[1] * x[2]
    if name == "x1sq-minus-x2sq":
        return x[0] ** 2 - x[1] ** 2
    if name == "x2sq-minus-x3sq" and grid.dim == 3:
        return x[1] ** 2 - x[2] ** 2
    if name == "cubic-re":
        return x[0] ** 3 - 3.0 * x[0] * x[1] ** 2
    if name == "cubic-im":
        return 3.0 * x[0] ** 2 * x[1] - x[1] ** 3
    if name == "sin-sinh":
        span = float(np.max(grid.extent))
        return np.sin(np.pi * x[0] / span) * np.sinh(np.pi * x[1] / span) \
            / np.sinh(np.pi)
    if name.startswith("random-smooth-"):
        seed = int(name.rsplit("-", 1)[1])
        rng = np.random.default_rng(20240 + seed)
        out = np.zeros(grid.n_nodes)
        span = float(np.max(grid.extent))
        for _ in range(4):
            direction = rng.normal(size=grid.dim)
            direction /= np.linalg.norm(direction)
            freq = rng.uniform(0.5, 2.0) * np.pi / span
            phase = rng.uniform(0.0, 2.0 * np.pi)
            amp = rng.uniform(0.3, 1.0)
            out += amp * np.sin(freq * (pts @ direction) + phase)
        return out
    raise ValueError(f"unknown boundary datum {name!r} for dim {grid.dim}")


def sample_harmonic(op: DiscreteOperator, boundary_datum: str,
                    tol: float = 1e-12) -> HarmonicSample:
    """Discrete L-harmonic field with the named boundary values."""
    grid = op.grid
    data = datum_values(grid, boundary_datum)
    rhs = -op.boundary_coupling @ data[op.boundary]
    interior = solve_spd(op.matrix, rhs, tol=tol)[0]
    values = data.copy()
    values[op.interior] = interior
    return HarmonicSample(field=ScalarField(grid, values), kind="harmonic",
                          boundary_label=boundary_datum)


def harmonic_samples(op: DiscreteOperator, tol: float = 1e-12) -> list:
    return [sample_harmonic(op, name, tol=tol)
            for name in datum_library(op.grid.dim)]


def radial_quadratic(grid: GridSpec, source: int) -> ScalarField:
    """v = |x - x0|^2, the standard strict subsolution."""
    x0 = grid.node_coords(source)
    pts = grid.coords()
    return ScalarField(grid, ((pts - x0) ** 2).sum(axis=1))


def make_sample(op: DiscreteOperator, fld: ScalarField, kind: str,
                label: str) -> HarmonicSample:
    """Wrap a field as a sample, checking the sign convention A v <= 0
    for subsolutions (Lv >= 0) and the reverse for supersolutions."""
    if kind not in ("harmonic", "subsolution", "supersolution"):
        raise ValueError(f"unknown sample kind {kind!r}")
    if kind != "harmonic":
        resid = op_apply(op, fld).values[op.interior]
        scale = max(float(np.abs(resid).max()), 1e-300)
        sign = resid if kind == "subsolution" else -resid
        if float(sign.max()) > 1e-10 * scale:
            raise ValueError(f"field is not a {kind}: A v has the wrong sign")
    return HarmonicSample(field=fld, kind=kind, boundary_label=label)


def _average(grid: GridSpec, mask_flat: np.ndarray, values: np.ndarray) -> float:
    vols = grid.cell_volumes()[mask_flat]
    return float((vols * values[mask_flat]).sum() / vols.sum())


def check_mean_value(set_: MeanValueSet, samples, source: int,
                     tolerance: float = float("inf")) -> VerificationReport:
    """Volume average over the set against the value at the source node."""
    mask = set_.mask_flat()
    if not mask.any():
        raise ValueError("empty mask")
    rows = []
    for s in samples:
        v = s.field.values
        at_x0 = float(v[source])
        avg = _average(s.field.grid, mask, v)
        rows.append(CheckRow(label=s.boundary_label, value_at_x0=at_x0,
                             average_over_set=avg,
                             discrepancy=abs(avg - at_x0)))
    worst = max(r.discrepancy for r in rows)
    return VerificationReport(rows=tuple(rows), max_discrepancy=worst,
                              tolerance=tolerance, passed=worst <= tolerance)


def check_monotonicity(family: MeanValueFamily, samples, source: int,
                       slack: float) -> VerificationReport:
    """Ordering of set averages across radii, per sample kind.

    Subsolutions must satisfy v(x0) <= avg_{D_r} v <= avg_{D_s} v for r < s
    up to the given slack; supersolutions the reverse; harmonic samples both
    ways, so their margins are checked in absolute value against the slack.
    """
    if not family.sets:
        raise ValueError("empty family")
    rows = []
    pairs = []
    worst = 0.0
    for s in samples:
        v = s.field.values
        at_x0 = float(v[source])
        grid = s.field.grid
        avgs = [_average(grid, ms.mask_flat(), v) for ms in family.sets]
        orient = -1.0 if s.kind == "supersolution" else 1.0
        for i, ms in enumerate(family.sets):
            m_src = orient * (avgs[i] - at_x0)
            if s.kind == "harmonic":
                worst = max(worst, abs(m_src))
            else:
                worst = max(worst, -m_src)
            if i == 0:
                continue
            m_pair = orient * (avgs[i] - avgs[i - 1])
            if s.kind == "harmonic":
                worst = max(worst, abs(m_pair))
            else:
                worst = max(worst, -m_pair)
            pairs.append(PairRow(label=s.boundary_label,
                                 r_small=family.sets[i - 1].radius,
                                 r_large=ms.radius,
                                 margin_source=m_src, margin_pair=m_pair))
        rows.append(CheckRow(label=s.boundary_label, value_at_x0=at_x0,
                             average_over_set=avgs[-1],
                             discrepancy=abs(avgs[-1] - at_x0)))
    return VerificationReport(rows=tuple(rows), pairs=tuple(pairs),
                              max_discrepancy=worst, tolerance=slack,
                              passed=worst <= slack)


def dual_identity_check(op: DiscreteOperator, sol: ObstacleSolution,
                        sample: HarmonicSample) -> float:
    """Residual of the discrete mean value identity on the noncontact set.

    Pairs the sample against A w over the rows where w > 0.  On those rows
    complementarity forces (A w)_i to equal the source-minus-density data
    exactly, so

        sum_S v (A w)  =  v(x0) - r^{-dim} sum_S V v

    holds to solver tolerance independent of the grid spacing.  Requires the
    noncontact set to stay two cells clear of the domain boundary.
    """
    grid = op.grid
    w = sol.height.values
    active = w > 0.0
    shaped = active.reshape(grid.shape)
    for axis in range(grid.dim):
        sl = [slice(None)] * grid.dim
        sl[axis] = slice(0, 2)
        near = shaped[tuple(sl)].any()
        sl[axis] = slice(-2, None)
        if near or shaped[tuple(sl)].any():
            raise GridError("noncontact set reaches within two cells of the "
                            "domain boundary")
    v = sample.field.values
    aw = op_apply(op, sol.height).values
    vols = grid.cell_volumes()
    pairing = float((v[active] * aw[active]).sum())
    mean_part = float(v[sol.source]
                      - (vols[active] * v[active]).sum() / sol.radius**grid.dim)
    return abs(pairing - mean_part)


def nesting_violations(smaller: MeanValueSet, larger: MeanValueSet):
    """Cells of the smaller set missing from the larger one, split into
    those within a one-cell band of either free boundary and those beyond.

    Returns (n_violations, n_beyond_band).
    """
    from scipy import ndimage

    a, b = smaller.mask, larger.mask
    viol = a & ~b
    if not viol.any():
        return 0, 0
    struct = np.ones((3,) * a.ndim, dtype=bool)

    def band(mask):
        inner = mask & ~ndimage.binary_erosion(mask)
        return ndimage.binary_dilation(inner, structure=struct)

    allowed = band(a) | band(b)
    return int(viol.sum()), int((viol & ~allowed).sum())
