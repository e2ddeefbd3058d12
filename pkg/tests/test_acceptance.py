"""End-to-end acceptance battery.

Thirteen numbered statements, each asserted at a fixed grid and tolerance
and reported as a single pass/fail line.  These are the gate for the whole
library: geometry reproduction against the classical disk, exactness of the
discrete pairing, convergence under refinement, nesting, monotone averages,
inclusion stability, mass balance, potential vanishing, construction
equivalence, uniqueness discrimination, closed-form identities, coefficient
scaling invariance, and bytewise determinism of the pipeline.
"""

import math
import os

import numpy as np
import pytest

from mvset.cli import main as cli_main
from mvset.coefficients import (CoefficientField, checkerboard_field,
                                identity_field)
from mvset.classical import build_phi, build_psi, constant_identity, \
    fundamental_slope, fundamental_value, weak_pairing
from mvset.contour import hausdorff_to_circle, marching_squares
from mvset.grid import ScalarField, build_grid
from mvset.obstacle import compute_family
from mvset.operator import assemble
from mvset.schwarz import (build_potential_direct, build_potential_integral,
                           candidate_dilated, candidate_one_sided,
                           candidate_shifted_ball, candidate_slit,
                           candidate_square, check_vanishing,
                           potential_from_height, uniqueness_experiment)
from mvset.greens import compute_green
from mvset.verify import (check_mean_value, dual_identity_check,
                          harmonic_samples, nesting_violations)

from conftest import center_node, make_checkerboard


def _line(num, name, ok, detail):
    print(f"ACCEPTANCE {num:02d} {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {num} {name}: {detail}"


@pytest.fixture(scope="module")
def samples_lap129(lap129):
    return harmonic_samples(lap129, tol=1e-12)


@pytest.fixture(scope="module")
def samples_chk129(chk129):
    return harmonic_samples(chk129, tol=1e-12)


def test_criterion_01_ball_reproduction(lap257, lap257_family):
    grid = lap257.grid
    sol = lap257_family.solutions[-1]
    set_ = lap257_family.sets[-1]
    assert sol.radius == 0.3
    polys = marching_squares(sol.height.reshaped(), set_.threshold,
                             grid.origin, grid.h)
    d = hausdorff_to_circle(polys, (0.5, 0.5), 0.3 / math.sqrt(math.pi))
    ratio = set_.volume / 0.3**2
    ok = d <= 2 * grid.h and 0.97 <= ratio <= 1.03
    _line(1, "ball-reproduction", ok,
          f"hausdorff={d:.3e} <= {2 * grid.h:.3e}, volume_ratio={ratio:.4f}")


def test_criterion_02_exact_discrete_identity(lap129, lap129_family,
                                              chk129, chk129_family,
                                              samples_lap129, samples_chk129):
    worst = 0.0
    for op, fam, samples in ((lap129, lap129_family, samples_lap129),
                             (chk129, chk129_family, samples_chk129)):
        sol = fam.solutions[-1]
        for sample in samples:
            worst = max(worst, dual_identity_check(op, sol, sample))
    ok = worst <= 1e-7
    _line(2, "exact-discrete-identity", ok,
          f"max residual={worst:.3e} <= 1e-07 over 10 samples x 2 operators")


def test_criterion_03_continuum_convergence(chk129_family, samples_chk129):
    discrepancies = []
    for nodes in (65, 129, 257):
        op = make_checkerboard(nodes)
        src = center_node(op)
        if nodes == 129:
            fam, samples = chk129_family, samples_chk129
            set_ = next(s for s in fam.sets if s.radius == 0.25)
        else:
            set_ = compute_family(op, src, (0.25,), tol=1e-10).sets[0]
            samples = harmonic_samples(op, tol=1e-12)
        rep = check_mean_value(set_, samples, src, tolerance=1.0)
        discrepancies.append(rep.max_discrepancy)
    r1 = discrepancies[1] / discrepancies[0]
    r2 = discrepancies[2] / discrepancies[1]
    ok = r1 <= 0.7 and r2 <= 0.7
    _line(3, "continuum-convergence", ok,
          f"discrepancies={discrepancies[0]:.3e}/{discrepancies[1]:.3e}/"
          f"{discrepancies[2]:.3e}, ratios={r1:.3f},{r2:.3f} <= 0.7")


def test_criterion_04_nesting(chk129_family):
    worst_beyond = 0
    worst_viol = 0
    for small, large in zip(chk129_family.sets, chk129_family.sets[1:]):
        n_viol, n_beyond = nesting_violations(small, large)
        worst_viol = max(worst_viol, n_viol)
        worst_beyond = max(worst_beyond, n_beyond)
    ok = worst_beyond == 0
    _line(4, "nesting", ok,
          f"max in-band violations={worst_viol}, beyond-band={worst_beyond}")


def test_criterion_05_monotone_averages(lap257, lap257_family):
    grid = lap257.grid
    pts = grid.coords()
    d2 = ((pts - np.asarray([0.5, 0.5])) ** 2).sum(axis=1)
    vols = grid.cell_volumes()
    averages = []
    rel_errs = []
    for set_ in lap257_family.sets:
        inside = set_.mask.reshape(-1)
        avg = float((vols * d2)[inside].sum()) / float(vols[inside].sum())
        averages.append(avg)
        R = set_.radius / math.sqrt(math.pi)
        closed = R * R * 2.0 / 4.0  # disk average of |x - x0|^2
        rel_errs.append(abs(avg - closed) / closed)
    increasing = all(b > a for a, b in zip(averages, averages[1:]))
    ok = increasing and max(rel_errs) <= 0.05
    _line(5, "monotone-averages", ok,
          f"strictly increasing={increasing}, "
          f"max closed-form deviation={max(rel_errs):.3%} <= 5%")


def test_criterion_06_inclusion_stability(ani257):
    src = center_node(ani257)
    fam = compute_family(ani257, src, (0.1, 0.15, 0.2, 0.25, 0.3), tol=1e-10)
    ratios = [s.outradius / s.inradius for s in fam.sets]
    med = float(np.median(ratios))
    dev = max(abs(r / med - 1.0) for r in ratios)
    ok = dev <= 0.2
    _line(6, "inclusion-stability", ok,
          f"out/in ratios median={med:.3f}, max deviation={dev:.3%} <= 20%")


def test_criterion_07_mass_balance(lap65_family, lap129_family):
    d65 = abs(next(s for s in lap65_family.sets if s.radius == 0.3).volume
              / 0.3**2 - 1.0)
    d129 = abs(lap129_family.sets[-1].volume / 0.3**2 - 1.0)
    halving = d129 / d65
    # first-order defect: the halving ratio carries a bounded-constant slack
    ok = d129 <= 0.04 and halving <= 0.6
    _line(7, "mass-balance", ok,
          f"defect(h=1/128)={d129:.4f} <= 0.04, "
          f"halving ratio={halving:.3f} <= 0.6")


def test_criterion_08_potential_vanishing(lap129, lap129_family,
                                          lap257, lap257_family):
    reports = []
    for op, fam in ((lap129, lap129_family), (lap257, lap257_family)):
        sol, set_ = fam.solutions[-1], fam.sets[-1]
        pot = potential_from_height(op, sol, set_)
        reports.append(check_vanishing(op, pot))
    fine, coarse = reports[1], reports[0]
    ok = (coarse.max_outside <= 1e-4
          and coarse.max_gradient_outside <= 1e-4
          and coarse.min_value >= -1e-6
          and fine.max_outside <= coarse.max_outside
          and fine.max_gradient_outside <= coarse.max_gradient_outside)
    _line(8, "potential-vanishing", ok,
          f"129: |W|={coarse.max_outside:.1e}, "
          f"|dW|={coarse.max_gradient_outside:.1e}, "
          f"minW={coarse.min_value:.1e}; "
          f"257: |W|={fine.max_outside:.1e}")


def test_criterion_09_construction_equivalence(lap129, lap129_family):
    src = center_node(lap129)
    mask = lap129_family.sets[-1].mask
    green = compute_green(lap129, src, tol=1e-13)
    direct = build_potential_direct(lap129, mask, src, tol=1e-13)
    integral = build_potential_integral(lap129, green, mask, src, tol=1e-13)
    gap = float(np.abs(direct.potential.values
                       - integral.potential.values).max())
    ok = gap <= 1e-8
    _line(9, "construction-equivalence", ok, f"max gap={gap:.3e} <= 1e-08")


def test_criterion_10_uniqueness_discrimination(lapm65):
    src = center_node(lapm65)
    fam = compute_family(lapm65, src, (0.6,), tol=1e-10)
    sol, true_set = fam.solutions[0], fam.sets[0]
    cache = {0.6: (sol, true_set)}
    vol = true_set.volume

    rep = uniqueness_experiment(lapm65, src, true_set.mask, tol=1e-12,
                                solve_cache=cache)
    true_peak = max(abs(rep.max_upsilon), abs(rep.min_upsilon))

    candidates = [
        ("square", candidate_square(lapm65, src, vol)),
        ("shifted-ball", candidate_shifted_ball(lapm65, src, vol, (0.1, 0.0))),
        ("dilated", candidate_dilated(true_set.mask, cells=3)),
        ("one-sided", candidate_one_sided(lapm65, true_set.mask, src,
                                          cells=3)),
        ("slit", candidate_slit(lapm65, true_set.mask, src)),
    ]
    floors = {}
    for name, mask in candidates:
        r = uniqueness_experiment(lapm65, src, mask, tol=1e-12,
                                  solve_cache=cache)
        floors[name] = r.max_upsilon
    ok = true_peak <= 1e-7 and all(v >= 1e-3 for v in floors.values())
    worst = min(floors, key=floors.get)
    _line(10, "uniqueness-discrimination", ok,
          f"true max|U|={true_peak:.1e} <= 1e-07; perturbed min over 5 = "
          f"{floors[worst]:.3e} ({worst}) >= 1e-03")


def test_criterion_11_classical_identities():
    tangency = 0.0
    constancy = 0.0
    for n in (2, 3):
        target = 2.0 * math.pi if n == 2 else 4.0 * math.pi
        for s in (0.1, 1.0, 10.0):
            psi = build_psi(n, s)
            tangency = max(
                tangency,
                abs(psi.alpha - psi.beta * s * s - fundamental_value(n, s)),
                abs(-2.0 * psi.beta * s - fundamental_slope(n, s)))
            constancy = max(constancy, abs(constant_identity(n, s) - target))

    qgrid = build_grid(2, (-1.002, -1.002), (2.004, 2.004), 401)
    pts = qgrid.coords()
    u = ScalarField(qgrid, (pts ** 2).sum(axis=1))
    pairing = weak_pairing(u, build_phi(2, 0.5, 1.0))
    rel = abs(pairing - 3.0 * math.pi / 4.0) / (3.0 * math.pi / 4.0)

    ok = tangency <= 1e-12 and constancy <= 1e-12 and rel <= 0.01
    _line(11, "classical-identities", ok,
          f"tangency={tangency:.1e} <= 1e-12, C(r)|B_r| dev={constancy:.1e} "
          f"<= 1e-12, pairing rel err={rel:.3e} <= 1%")


def test_criterion_12_scaling_invariance():
    grid = build_grid(2, (0.0, 0.0), (1.0, 1.0), 65)
    radii = (0.1, 0.2, 0.3)
    all_equal = True
    for base in (identity_field(grid),
                 checkerboard_field(grid, 1.0, 10.0, 0.25)):
        op1 = assemble(base)
        op3 = assemble(CoefficientField(grid, 3.0 * base.tensors,
                                        3.0 * base.lam, 3.0 * base.Lam))
        src = center_node(op1)
        fam1 = compute_family(op1, src, radii, tol=1e-10)
        fam3 = compute_family(op3, src, radii, tol=1e-10)
        for s1, s3 in zip(fam1.sets, fam3.sets):
            all_equal = all_equal and bool(np.array_equal(s1.mask, s3.mask))
    _line(12, "scaling-invariance", all_equal,
          f"masks identical under a -> 3a for 2 families x {len(radii)} radii")


def test_criterion_13_determinism(tmp_path, monkeypatch):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("[grid]\nnodes = 65\n\n[problem]\nx0 = 0.5, 0.5\n"
                   "radii = 0.2\n\n[output]\nfield_format = both\n")
    dirs = []
    for name in ("first", "second"):
        d = tmp_path / name
        d.mkdir()
        monkeypatch.chdir(d)
        assert cli_main(["all", str(cfg)]) == 0
        dirs.append(d / "out")

    files = sorted(os.listdir(dirs[0]))
    assert files == sorted(os.listdir(dirs[1]))
    n_raw = sum(1 for f in files if f.endswith(".raw"))
    diffs = [f for f in files
             if (dirs[0] / f).read_bytes() != (dirs[1] / f).read_bytes()]
    ok = not diffs and n_raw > 0
    _line(13, "determinism", ok,
          f"{len(files)} artifacts ({n_raw} raw) byte-identical across runs"
          + (f"; differing: {diffs}" if diffs else ""))
