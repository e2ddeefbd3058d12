import numpy as np
import pytest

from mvset.grid import GridError, ScalarField
from mvset.obstacle import ObstacleSolution
from mvset.operator import apply as op_apply
from mvset.solver import SolveReport
from mvset.verify import (check_mean_value, check_monotonicity, datum_library,
                          datum_values, dual_identity_check, harmonic_samples,
                          make_sample, nesting_violations, radial_quadratic,
                          sample_harmonic)

from conftest import center_node


def test_datum_library_sizes():
    assert len(datum_library(2)) == 10
    assert len(datum_library(3)) == 10
    assert len(set(datum_library(2))) == 10


def test_datum_values_deterministic(lap65):
    grid = lap65.grid
    a = datum_values(grid, "random-smooth-0")
    b = datum_values(grid, "random-smooth-0")
    np.testing.assert_array_equal(a, b)
    with pytest.raises(ValueError):
        datum_values(grid, "no-such-datum")


def test_sample_harmonic_residual_and_trace(lap65):
    s = sample_harmonic(lap65, "x1x2", tol=1e-12)
    assert s.kind == "harmonic"
    resid = op_apply(lap65, s.field).values[lap65.interior]
    scale = np.abs(s.field.values).max()
    assert np.abs(resid).max() <= 1e-9 * scale
    np.testing.assert_array_equal(s.field.values[lap65.boundary],
                                  datum_values(lap65.grid, "x1x2")[lap65.boundary])


def test_harmonic_samples_full_library(lap65):
    samples = harmonic_samples(lap65, tol=1e-12)
    assert len(samples) == 10
    assert {s.kind for s in samples} == {"harmonic"}


def test_make_sample_sign_validation(lap65):
    quad = radial_quadratic(lap65.grid, center_node(lap65))
    ok = make_sample(lap65, quad, "subsolution", "quad")
    assert ok.kind == "subsolution"
    with pytest.raises(ValueError):
        make_sample(lap65, quad, "supersolution", "quad")
    with pytest.raises(ValueError):
        make_sample(lap65, quad, "sideways", "quad")


def test_check_mean_value_constant_exact(lap65, lap65_family):
    set_ = lap65_family.sets[-1]
    one = make_sample(lap65, ScalarField(lap65.grid,
                                         np.ones(lap65.grid.n_nodes)),
                      "harmonic", "one")
    rep = check_mean_value(set_, [one], set_.source, tolerance=1e-15)
    assert rep.passed
    assert rep.rows[0].discrepancy == 0.0


def test_check_mean_value_harmonic_small(lap65, lap65_family):
    samples = harmonic_samples(lap65, tol=1e-12)
    rep = check_mean_value(lap65_family.sets[-1], samples,
                           lap65_family.sets[-1].source, tolerance=5e-3)
    assert rep.passed
    assert 0.0 < rep.max_discrepancy <= 5e-4


def test_check_monotonicity_subsolution(lap65, lap65_family):
    src = center_node(lap65)
    quad = radial_quadratic(lap65.grid, src)
    subs = make_sample(lap65, quad, "subsolution", "quad")
    sup = make_sample(lap65, ScalarField(lap65.grid, -quad.values),
                      "supersolution", "neg-quad")
    rep = check_monotonicity(lap65_family, [subs, sup], src, slack=1e-10)
    assert rep.passed
    # averages of |x - x0|^2 grow strictly with the radius
    for pair in rep.pairs:
        if pair.label == "quad":
            assert pair.margin_pair > 1e-4


def test_dual_identity_residual_tiny(lap65, lap65_family):
    samples = harmonic_samples(lap65, tol=1e-12)
    sol = lap65_family.solutions[-1]
    worst = max(dual_identity_check(lap65, sol, s) for s in samples)
    assert worst <= 1e-9


def test_dual_identity_rejects_boundary_contact(lap65):
    grid = lap65.grid
    w = np.ones(grid.n_nodes)  # active everywhere, touches the boundary
    sol = ObstacleSolution(source=center_node(lap65), radius=0.3,
                           height=ScalarField(grid, w),
                           report=SolveReport(0, 0.0, True))
    one = make_sample(lap65, ScalarField(grid, np.ones(grid.n_nodes)),
                      "harmonic", "one")
    with pytest.raises(GridError):
        dual_identity_check(lap65, sol, one)


def _fake_set(mask, radius):
    from mvset.obstacle import MeanValueSet
    return MeanValueSet(source=0, radius=radius, mask=mask,
                        volume=float(mask.sum()), inradius=0.0,
                        outradius=1.0, threshold=0.0,
                        touches_boundary=False, n_components=1)


def test_nesting_violations_banding():
    base = np.zeros((40, 40), dtype=bool)
    base[10:20, 10:20] = True
    larger = np.zeros_like(base)
    larger[9:22, 9:22] = True
    assert nesting_violations(_fake_set(base, 0.1),
                              _fake_set(larger, 0.2)) == (0, 0)

    # one violating cell adjacent to the free boundary: inside the band
    shifted = larger.copy()
    shifted[10:20, 9] = False
    n, beyond = nesting_violations(_fake_set(larger, 0.1),
                                   _fake_set(shifted, 0.2))
    assert n == 10 and beyond == 0

    # a blob far outside the larger set: its rim sits in its own
    # free-boundary band but the 3x3 core is beyond any band
    blob = base.copy()
    blob[30:37, 30:37] = True
    n, beyond = nesting_violations(_fake_set(blob, 0.1),
                                   _fake_set(larger, 0.2))
    assert n == 49 and beyond == 9
