import numpy as np
import pytest

from mvset.grid import GridError
from mvset.greens import compute_green
from mvset.obstacle import extract_set, solve_obstacle
from mvset.schwarz import (build_potential_direct, build_potential_integral,
                           candidate_dilated, candidate_one_sided,
                           candidate_shifted_ball, candidate_slit,
                           candidate_square, check_vanishing, mask_volume,
                           match_radius, potential_from_height,
                           uniqueness_experiment)

from conftest import center_node


@pytest.fixture(scope="module")
def disk65(lap65):
    src = center_node(lap65)
    sol = solve_obstacle(lap65, src, 0.2, tol=1e-10)
    mset = extract_set(lap65, sol)
    # shared across the uniqueness tests so bisection solves are reused
    cache = {0.2: (sol, mset)}
    return src, sol, mset, cache


def test_validate_mask_errors(lap65):
    grid = lap65.grid
    src = center_node(lap65)
    empty = np.zeros(grid.shape, dtype=bool)
    with pytest.raises(ValueError, match="empty"):
        build_potential_direct(lap65, empty, src)

    off = empty.copy()
    off[5:9, 5:9] = True
    with pytest.raises(ValueError, match="source"):
        build_potential_direct(lap65, off, src)

    touching = empty.copy()
    touching[1:, :] = True
    with pytest.raises(GridError):
        build_potential_direct(lap65, touching, src)


def test_mask_volume_counts_interior_cells(lap65):
    grid = lap65.grid
    mask = np.zeros(grid.shape, dtype=bool)
    mask[10:20, 12:18] = True
    assert mask_volume(lap65, mask) == pytest.approx(60 * grid.h**2, rel=1e-14)


def test_direct_potential_solves_density_equation(disk65, lap65):
    src, _, mset, _ = disk65
    pot = build_potential_direct(lap65, mset.mask, src, tol=1e-12)
    assert pot.construction == "direct-solve"
    assert pot.volume == pytest.approx(mset.volume)

    # interior residual of A W = e - (1/|D|) V chi
    vols = lap65.grid.cell_volumes()
    rhs = np.where(mset.mask.reshape(-1)[lap65.interior],
                   -vols[lap65.interior] / mset.volume, 0.0)
    rhs[int(np.searchsorted(lap65.interior, src))] += 1.0
    res = lap65.matrix @ pot.potential.values[lap65.interior] - rhs
    assert np.abs(res).max() <= 1e-10

    bvals = pot.potential.values[lap65.boundary]
    assert np.abs(bvals).max() == 0.0


def test_direct_and_integral_constructions_agree(disk65, lap65):
    src, _, mset, _ = disk65
    green = compute_green(lap65, src, tol=1e-12)
    direct = build_potential_direct(lap65, mset.mask, src, tol=1e-12)
    integral = build_potential_integral(lap65, green, mset.mask, src, tol=1e-12)
    assert integral.construction == "green-integral"
    diff = np.abs(direct.potential.values - integral.potential.values).max()
    assert diff <= 1e-10


def test_integral_requires_matching_source(disk65, lap65):
    src, _, mset, _ = disk65
    other = compute_green(lap65, src + 1, tol=1e-10)
    with pytest.raises(ValueError, match="different source"):
        build_potential_integral(lap65, other, mset.mask, src)


def test_height_potential_vanishes_outside_exactly(disk65, lap65):
    src, sol, mset, _ = disk65
    pot = potential_from_height(lap65, sol, mset)
    assert pot.construction == "obstacle-height"
    rep = check_vanishing(lap65, pot)
    assert rep.n_outside > 0
    # hard zeros, not merely small: the height function is clamped there
    assert rep.max_outside == 0.0
    assert rep.max_gradient_outside == 0.0
    assert rep.min_value == 0.0


def test_potential_matches_radial_closed_form(lap129):
    # identity coefficients, so the matched set is a disk of area r^2 and
    # W(rho) = (1/2pi) log(R/rho) + (rho^2 - R^2)/(4 pi R^2) with R = r/sqrt(pi)
    src = center_node(lap129)
    sol = solve_obstacle(lap129, src, 0.3, tol=1e-10)
    mset = extract_set(lap129, sol)
    w = potential_from_height(lap129, sol, mset).potential.reshaped()

    grid = lap129.grid
    R = 0.3 / np.sqrt(np.pi)
    xs = grid.origin[0] + grid.h * np.arange(grid.shape[0])
    xx, yy = np.meshgrid(xs, xs, indexing="ij")
    rho = np.sqrt((xx - 0.5) ** 2 + (yy - 0.5) ** 2)
    band = (rho >= 3 * grid.h) & (rho <= R - 3 * grid.h)
    exact = (np.log(R / rho[band]) / (2 * np.pi)
             + (rho[band] ** 2 - R**2) / (4 * np.pi * R**2))
    err = np.abs(w[band] - exact).max()
    assert band.sum() > 500
    assert err <= 0.01 * w.max()


def test_match_radius_hits_target_volume(disk65, lap65):
    src, _, mset, cache = disk65
    cell = lap65.grid.h ** 2
    r, sol, matched = match_radius(lap65, src, mset.volume, tol=1e-10,
                                   solve_cache=cache)
    assert abs(matched.volume - mset.volume) <= 0.25 * cell
    np.testing.assert_array_equal(matched.mask, mset.mask)

    # a second call with the same target reuses every cached solve
    before = len(cache)
    match_radius(lap65, src, mset.volume, tol=1e-10, solve_cache=cache)
    assert len(cache) == before


def test_match_radius_rejects_bad_target(lap65):
    with pytest.raises(ValueError):
        match_radius(lap65, center_node(lap65), 0.0)


def test_uniqueness_true_set_gives_zero(disk65, lap65):
    src, _, mset, cache = disk65
    rep = uniqueness_experiment(lap65, src, mset.mask, tol=1e-12,
                                solve_cache=cache)
    # volume matching reproduces the same mask, so both potentials coincide
    assert rep.symmetric_difference_volume == 0.0
    assert rep.max_upsilon == 0.0
    assert rep.min_upsilon == 0.0
    assert rep.candidate_volume == pytest.approx(rep.matched_volume)


def test_uniqueness_perturbed_set_gives_positive_upsilon(disk65, lap65):
    src, _, mset, cache = disk65
    square = candidate_square(lap65, src, mset.volume)
    rep = uniqueness_experiment(lap65, src, square, tol=1e-12,
                                solve_cache=cache)
    assert rep.max_upsilon >= 1e-5
    assert rep.symmetric_difference_volume >= lap65.grid.h ** 2


def test_uniqueness_rejects_disconnected_candidate(disk65, lap65):
    src, _, mset, _ = disk65
    mask = mset.mask.copy()
    mask[5:8, 5:8] = True
    with pytest.raises(ValueError, match="connected"):
        uniqueness_experiment(lap65, src, mask)


def test_candidate_builders_shapes(disk65, lap65):
    src, _, mset, _ = disk65
    grid = lap65.grid

    # node rounding can add a full cell per side, noticeable on a 13-node square
    square = candidate_square(lap65, src, mset.volume)
    assert mask_volume(lap65, square) == pytest.approx(mset.volume, rel=0.2)
    si, sj = np.unravel_index(src, grid.shape)
    assert square[si, sj]

    ball = candidate_shifted_ball(lap65, src, mset.volume, (4 * grid.h, 0.0))
    ci = np.argwhere(ball).mean(axis=0)
    assert ci[0] - si == pytest.approx(4.0, abs=0.6)

    fat = candidate_dilated(mset.mask, cells=2)
    assert fat[mset.mask].all() and fat.sum() > mset.mask.sum()

    lop = candidate_one_sided(lap65, mset.mask, src, cells=2)
    xs = np.argwhere(lop)[:, 0]
    assert xs.max() < np.argwhere(mset.mask)[:, 0].max()
    assert xs.min() < np.argwhere(mset.mask)[:, 0].min()

    slit = candidate_slit(lap65, mset.mask, src)
    assert not slit[si, sj + 3]
    assert slit.sum() < mset.mask.sum()
