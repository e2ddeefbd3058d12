"""Command-line driver.

Each subcommand reads one config file, writes its artifacts into the output
directory, and appends rows to checks.csv; the exit status is 0 exactly when
every check row passes.  `all` chains the full pipeline over one shared
session so the obstacle solves, Green field, and harmonic samples are reused
across subcommands.  Every artifact is written with fixed ordering and fixed
float formatting, so identical configs produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import os
import sys

import numpy as np

from . import classical, schwarz, verify
from .config import RunConfig, canonical_text, parse_config
from .contour import marching_squares
from .coefficients import make_coefficients
from .fieldio import (read_mask, write_contour, write_field_csv,
                      write_field_raw, write_mask)
from .greens import compute_green
from .grid import ScalarField, build_grid, locate_node
from .obstacle import compute_family
from .operator import assemble

SUBCOMMANDS = ("green", "obstacle", "family", "verify-mvt", "schwarz",
               "uniqueness", "classical", "all")

# Operational bounds for CLI check rows.  The acceptance-grade tolerances
# live in the test suite; these are looser so that any reasonable config
# stays green while a broken kernel still trips them.
GREEN_MASS_BOUND = 1e-6
# Volume defect scales like h/r, so this accommodates radii down to about a
# dozen cells; acceptance-grade configs sit well under it.
VOLUME_DEFECT_BOUND = 0.15
MVT_BOUND = 5e-3
DUAL_IDENTITY_BOUND = 1e-7
VANISH_BOUND = 1e-4
MIN_POTENTIAL_BOUND = -1e-6
AGREEMENT_BOUND = 1e-8
TRUE_UPSILON_BOUND = 1e-9
PERTURBED_UPSILON_FLOOR = 1e-5
CLASSICAL_BOUND = 1e-12
PAIRING_REL_BOUND = 1e-2


def _fmt(v: float) -> str:
    return f"{float(v):.16e}"


class Session:
    """Shared state for one CLI invocation: config, lazily built solver
    objects, accumulated check rows."""

    def __init__(self, cfg: RunConfig, outdir: str):
        self.cfg = cfg
        self.outdir = outdir
        self.checks = []  # (name, value, bound, sense, passed)
        self._cache = {}

    def check(self, name: str, value: float, bound: float, sense: str) -> bool:
        ok = value <= bound if sense == "<=" else value >= bound
        self.checks.append((name, float(value), float(bound), sense, ok))
        return ok

    def path(self, name: str) -> str:
        return os.path.join(self.outdir, name)

    @property
    def op(self):
        if "op" not in self._cache:
            cfg = self.cfg
            grid = build_grid(cfg.dim, cfg.origin, cfg.extent, cfg.nodes)
            coeffs = make_coefficients(grid, cfg.family)
            self._cache["op"] = assemble(coeffs)
        return self._cache["op"]

    @property
    def source(self) -> int:
        if "source" not in self._cache:
            self._cache["source"] = locate_node(self.op.grid, self.cfg.x0)
        return self._cache["source"]

    @property
    def green(self):
        if "green" not in self._cache:
            self._cache["green"] = compute_green(self.op, self.source,
                                                 tol=self.cfg.tol)
        return self._cache["green"]

    @property
    def family(self):
        if "family" not in self._cache:
            self._cache["family"] = compute_family(self.op, self.source,
                                                   self.cfg.radii,
                                                   tol=self.cfg.tol)
        return self._cache["family"]

    @property
    def harmonic(self) -> list:
        if "harmonic" not in self._cache:
            self._cache["harmonic"] = verify.harmonic_samples(self.op,
                                                              tol=1e-12)
        return self._cache["harmonic"]

    def write_field(self, stem: str, field: ScalarField) -> None:
        fmt = self.cfg.field_format
        if fmt in ("csv", "both"):
            write_field_csv(self.path(stem + ".csv"), field)
        if fmt in ("raw", "both"):
            write_field_raw(self.path(stem + ".raw"), field)

    def write_table(self, name: str, header: str, rows) -> None:
        lines = [header]
        for row in rows:
            lines.append(",".join(str(c) if isinstance(c, (str, int))
                                  else _fmt(c) for c in row))
        with open(self.path(name), "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")


def _tag(r: float) -> str:
    return f"r{r:g}"


def _set_contour(s: Session, sol, set_):
    grid = s.op.grid
    return marching_squares(sol.height.reshaped(), set_.threshold,
                            grid.origin, grid.h)


def run_green(s: Session) -> None:
    g = s.green
    s.write_field("green", g.field)
    s.check("green-mass-deviation", abs(g.mass - 1.0), GREEN_MASS_BOUND, "<=")
    # Positivity up to solver residual; exact zeros sit on the boundary.
    s.check("green-min-value", float(g.field.values.min()), -1e-8, ">=")


def run_obstacle(s: Session) -> None:
    fam = s.family
    dim = s.op.grid.dim
    for sol, set_ in zip(fam.solutions, fam.sets):
        tag = _tag(sol.radius)
        s.write_field(f"height_{tag}", sol.height)
        write_mask(s.path(f"mask_{tag}.csv"), s.op.grid, set_.mask)
        s.check(f"height-min-{tag}", float(sol.height.values.min()),
                0.0, ">=")
        ratio = set_.volume / sol.radius ** dim
        s.check(f"volume-ratio-{tag}", ratio, 1.0, "<=")
        s.check(f"volume-defect-{tag}", 1.0 - ratio,
                VOLUME_DEFECT_BOUND, "<=")
        if dim == 2:
            polys = _set_contour(s, sol, set_)
            write_contour(s.path(f"contour_{tag}.csv"), polys)
            n_open = sum(1 for p in polys
                         if np.linalg.norm(p[0] - p[-1]) > 1e-12)
            s.check(f"contour-closed-{tag}", n_open, 0.0, "<=")


def run_family(s: Session) -> None:
    fam = s.family
    for sol, set_ in zip(fam.solutions, fam.sets):
        tag = _tag(sol.radius)
        write_mask(s.path(f"mask_{tag}.csv"), s.op.grid, set_.mask)
        if s.op.grid.dim == 2:
            write_contour(s.path(f"contour_{tag}.csv"),
                          _set_contour(s, sol, set_))
    s.write_table("family.csv",
                  "radius,volume,volume_ratio,inradius,outradius,components",
                  [(set_.radius, set_.volume,
                    set_.volume / set_.radius ** s.op.grid.dim,
                    set_.inradius, set_.outradius, set_.n_components)
                   for set_ in fam.sets])
    rows = []
    for small, large in zip(fam.sets, fam.sets[1:]):
        n_viol, n_beyond = verify.nesting_violations(small, large)
        rows.append((_fmt(small.radius), _fmt(large.radius),
                     n_viol, n_beyond))
        pair = f"{_tag(small.radius)}-{_tag(large.radius)}"
        s.check(f"nesting-violations-{pair}", n_viol, 0.0, "<=")
        s.check(f"nesting-beyond-band-{pair}", n_beyond, 0.0, "<=")
    s.write_table("nesting.csv", "r_small,r_large,violations,beyond_band",
                  rows)
    vols = [set_.volume for set_ in fam.sets]
    if len(vols) > 1:
        worst = min(b - a for a, b in zip(vols, vols[1:]))
        s.check("volumes-increasing", worst, 0.0, ">=")


def run_verify_mvt(s: Session) -> None:
    fam = s.family
    samples = s.harmonic
    rows = []
    for set_ in fam.sets:
        rep = verify.check_mean_value(set_, samples, s.source,
                                      tolerance=MVT_BOUND)
        for row in rep.rows:
            rows.append((_fmt(set_.radius), row.label, row.value_at_x0,
                         row.average_over_set, row.discrepancy))
        s.check(f"mvt-max-discrepancy-{_tag(set_.radius)}",
                rep.max_discrepancy, MVT_BOUND, "<=")
    s.write_table("mvt.csv", "radius,sample,value_at_x0,average,discrepancy",
                  rows)

    quad = verify.radial_quadratic(s.op.grid, s.source)
    extremal = [
        verify.make_sample(s.op, quad, "subsolution", "radial-quadratic"),
        verify.make_sample(s.op, ScalarField(quad.grid, -quad.values),
                           "supersolution", "neg-radial-quadratic"),
    ]
    mono = verify.check_monotonicity(fam, samples + extremal, s.source,
                                     slack=MVT_BOUND)
    s.write_table("monotonicity.csv",
                  "sample,r_small,r_large,margin_source,margin_pair",
                  [(p.label, p.r_small, p.r_large, p.margin_source,
                    p.margin_pair) for p in mono.pairs])
    s.check("monotonicity-worst-margin", mono.max_discrepancy, MVT_BOUND,
            "<=")

    sol = fam.solutions[-1]
    worst = max(verify.dual_identity_check(s.op, sol, sample)
                for sample in samples)
    s.check("dual-identity-max-residual", worst, DUAL_IDENTITY_BOUND, "<=")


def run_schwarz(s: Session) -> None:
    fam = s.family
    sol, set_ = fam.solutions[-1], fam.sets[-1]
    tag = _tag(sol.radius)

    pot = schwarz.potential_from_height(s.op, sol, set_)
    s.write_field(f"potential_{tag}", pot.potential)
    van = schwarz.check_vanishing(s.op, pot)
    s.write_table("vanishing.csv",
                  "construction,max_outside,max_gradient_outside,"
                  "min_value,n_outside",
                  [(pot.construction, van.max_outside,
                    van.max_gradient_outside, van.min_value, van.n_outside)])
    s.check("schwarz-outside-max", van.max_outside, VANISH_BOUND, "<=")
    s.check("schwarz-outside-gradient", van.max_gradient_outside,
            VANISH_BOUND, "<=")
    s.check("schwarz-min-value", van.min_value, MIN_POTENTIAL_BOUND, ">=")

    tight = min(s.cfg.tol, 1e-12)
    green = compute_green(s.op, s.source, tol=tight)
    direct = schwarz.build_potential_direct(s.op, set_.mask, s.source,
                                            tol=tight)
    integral = schwarz.build_potential_integral(s.op, green, set_.mask,
                                                s.source, tol=tight)
    gap = float(np.abs(direct.potential.values
                       - integral.potential.values).max())
    s.check("construction-agreement", gap, AGREEMENT_BOUND, "<=")


def _battery(s: Session, true_set):
    op, source = s.op, s.source
    dim = op.grid.dim
    h = op.grid.h
    true_mask = true_set.mask
    vol = true_set.volume
    # Stretch along the last axis only: an isotropic dilation of a disk can
    # land exactly on the volume-matched set at coarse resolution, but a
    # one-axis stretch cannot coincide with any rotationally balanced set.
    from scipy import ndimage
    stretch_struct = np.ones((1,) * (dim - 1) + (3,), dtype=bool)
    stretched = ndimage.binary_dilation(true_mask, structure=stretch_struct,
                                        iterations=3)
    return [
        ("square", schwarz.candidate_square(op, source, vol)),
        ("shifted-ball",
         schwarz.candidate_shifted_ball(op, source, vol,
                                        (6 * h,) + (0.0,) * (dim - 1))),
        ("stretched", stretched),
        ("one-sided", schwarz.candidate_one_sided(op, true_mask, source,
                                                  cells=2)),
        ("slit", schwarz.candidate_slit(op, true_mask, source)),
    ]


def run_uniqueness(s: Session, candidate_path: str | None = None) -> None:
    op, source = s.op, s.source
    fam = s.family
    true_set = fam.sets[-1]
    tight = min(s.cfg.tol, 1e-12)
    cache = {true_set.radius: (fam.solutions[-1], true_set)}

    rows = []

    def run_one(name, mask, checked):
        rep = schwarz.uniqueness_experiment(op, source, mask, tol=tight,
                                            solve_cache=cache)
        peak = max(abs(rep.max_upsilon), abs(rep.min_upsilon))
        rows.append((name, rep.r_matched, rep.max_upsilon, rep.min_upsilon,
                     rep.symmetric_difference_volume, rep.candidate_volume,
                     rep.matched_volume))
        s.write_field(f"upsilon_{name}", rep.upsilon)
        if checked == "true":
            s.check("uniqueness-true-upsilon", peak, TRUE_UPSILON_BOUND, "<=")
            s.check("uniqueness-true-symdiff",
                    rep.symmetric_difference_volume, 0.0, "<=")
        elif checked == "perturbed":
            s.check(f"uniqueness-{name}-upsilon", peak,
                    PERTURBED_UPSILON_FLOOR, ">=")
            s.check(f"uniqueness-{name}-symdiff",
                    rep.symmetric_difference_volume,
                    0.5 * op.grid.h ** op.grid.dim, ">=")

    run_one("true-set", true_set.mask, "true")
    for name, mask in _battery(s, true_set):
        run_one(name, mask, "perturbed")
    if candidate_path is not None:
        grid, flat = read_mask(candidate_path)
        g = op.grid
        if (grid.dim, grid.nodes_per_axis) != (g.dim, g.nodes_per_axis) or \
                not np.allclose(grid.origin, g.origin, rtol=1e-9, atol=0) or \
                not math.isclose(grid.h, g.h, rel_tol=1e-9):
            raise ValueError(f"candidate mask grid {candidate_path} does not "
                             f"match the run grid")
        run_one("external", flat.reshape(g.shape), "report-only")

    s.write_table("uniqueness.csv",
                  "candidate,r_matched,max_upsilon,min_upsilon,"
                  "symmetric_difference,candidate_volume,matched_volume",
                  rows)


def run_classical(s: Session) -> None:
    dim = s.cfg.dim
    target = 2.0 * math.pi if dim == 2 else 4.0 * math.pi
    rows = []
    for r in s.cfg.radii:
        value = classical.constant_identity(dim, r)
        rows.append((f"constant-identity-{_tag(r)}", value, target,
                     abs(value - target)))
        s.check(f"classical-identity-{_tag(r)}", abs(value - target),
                CLASSICAL_BOUND, "<=")

    phi = classical.build_phi(dim, 0.5, 1.0)
    at_zero = float(phi(np.zeros((1, dim)))[0])
    phi_target = math.log(2.0) if dim == 2 else 1.5
    rows.append(("phi-at-origin", at_zero, phi_target,
                 abs(at_zero - phi_target)))
    s.check("classical-phi-origin", abs(at_zero - phi_target),
            CLASSICAL_BOUND, "<=")

    if dim == 2:
        # Weak pairing of u = |x|^2 against the closed form 3 pi / 4 on a
        # quadrature grid just covering the outer ball.
        qgrid = build_grid(2, (-1.002, -1.002), (2.004, 2.004), 201)
        pts = qgrid.coords()
        u = ScalarField(qgrid, (pts ** 2).sum(axis=1))
        pairing = classical.weak_pairing(u, phi)
        exact = 3.0 * math.pi / 4.0
        rel = abs(pairing - exact) / exact
        rows.append(("weak-pairing-usq", pairing, exact, rel))
        s.check("classical-pairing-relerr", rel, PAIRING_REL_BOUND, "<=")

    s.write_table("classical.csv", "quantity,value,target,deviation", rows)


def _write_checks(s: Session) -> None:
    lines = ["name,value,bound,sense,passed"]
    for name, value, bound, sense, ok in s.checks:
        lines.append(f"{name},{_fmt(value)},{_fmt(bound)},{sense},"
                     f"{'pass' if ok else 'fail'}")
    with open(s.path("checks.csv"), "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def run_subcommand(name: str, cfg: RunConfig, outdir: str | None = None,
                   candidate: str | None = None) -> int:
    """Run one subcommand; returns the process exit status."""
    if name not in SUBCOMMANDS:
        raise ValueError(f"unknown subcommand {name!r}")
    if outdir is not None:
        cfg = dataclasses.replace(cfg, directory=outdir)
    os.makedirs(cfg.directory, exist_ok=True)
    s = Session(cfg, cfg.directory)
    with open(s.path("config.canonical"), "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write(canonical_text(cfg))

    try:
        if name in ("green", "all"):
            run_green(s)
        if name in ("obstacle", "all"):
            run_obstacle(s)
        if name in ("family", "all"):
            run_family(s)
        if name in ("verify-mvt", "all"):
            run_verify_mvt(s)
        if name in ("schwarz", "all"):
            run_schwarz(s)
        if name in ("uniqueness", "all"):
            run_uniqueness(s, candidate_path=candidate)
        if name in ("classical", "all"):
            run_classical(s)
    except Exception as exc:
        with open(s.path("failure.csv"), "w", encoding="utf-8",
                  newline="\n") as fh:
            fh.write("subcommand,error,message\n")
            fh.write(f"{name},{type(exc).__name__},\"{exc}\"\n")
        print(f"mvset {name}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2

    _write_checks(s)
    n_fail = sum(1 for row in s.checks if not row[4])
    for row in s.checks:
        status = "pass" if row[4] else "FAIL"
        print(f"{status}  {row[0]}  value={row[1]:.6g}  {row[3]} "
              f"{row[2]:.6g}")
    if n_fail:
        print(f"mvset {name}: {n_fail} of {len(s.checks)} checks failed",
              file=sys.stderr)
        return 1
    print(f"mvset {name}: all {len(s.checks)} checks passed")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mvset",
        description="Mean value sets for divergence form elliptic operators.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "green": "compute the Green's function at x0",
        "obstacle": "solve the obstacle problem and extract sets",
        "family": "nested family of sets over the radius list",
        "verify-mvt": "mean value and monotonicity checks",
        "schwarz": "potential vanishing and construction agreement",
        "uniqueness": "Upsilon comparison against perturbed candidates",
        "classical": "closed-form Laplacian identities",
        "all": "run the full pipeline",
    }
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("config", help="run configuration file")
        p.add_argument("--out", default=None,
                       help="output directory (overrides the config)")
        if name in ("uniqueness", "all"):
            p.add_argument("--candidate", default=None,
                           help="external candidate mask file")
    args = parser.parse_args(argv)
    try:
        cfg = parse_config(args.config)
    except (OSError, ValueError) as exc:
        print(f"mvset: {exc}", file=sys.stderr)
        return 2
    return run_subcommand(args.command, cfg, outdir=args.out,
                          candidate=getattr(args, "candidate", None))


if __name__ == "__main__":
    sys.exit(main())
