"""Shared operators and obstacle solves, built once per session.

The heavyweight fixtures (257 node grids, multi-radius families) are reused
by several test modules, so they live here at session scope.
"""

import numpy as np
import pytest

from mvset.coefficients import (anisotropic_field, checkerboard_field,
                                identity_field)
from mvset.grid import build_grid, locate_node
from mvset.obstacle import compute_family
from mvset.operator import assemble


def make_laplacian(nodes, origin=(0.0, 0.0), extent=(1.0, 1.0)):
    return assemble(identity_field(build_grid(2, origin, extent, nodes)))


def center_node(op):
    grid = op.grid
    mid = tuple(o + 0.5 * e for o, e in zip(grid.origin, grid.extent))
    return locate_node(grid, mid)


@pytest.fixture(scope="session")
def lap65():
    return make_laplacian(65)


@pytest.fixture(scope="session")
def lap129():
    return make_laplacian(129)


@pytest.fixture(scope="session")
def lap257():
    return make_laplacian(257)


@pytest.fixture(scope="session")
def lapm65():
    return make_laplacian(65, origin=(-1.0, -1.0), extent=(2.0, 2.0))


def make_checkerboard(nodes):
    grid = build_grid(2, (0.0, 0.0), (1.0, 1.0), nodes)
    return assemble(checkerboard_field(grid, 1.0, 10.0, 0.25))


@pytest.fixture(scope="session")
def chk65():
    return make_checkerboard(65)


@pytest.fixture(scope="session")
def chk129():
    return make_checkerboard(129)


@pytest.fixture(scope="session")
def chk257():
    return make_checkerboard(257)


@pytest.fixture(scope="session")
def ani257():
    grid = build_grid(2, (0.0, 0.0), (1.0, 1.0), 257)
    return assemble(anisotropic_field(grid, 4.0))


@pytest.fixture(scope="session")
def lap65_family(lap65):
    return compute_family(lap65, center_node(lap65), (0.2, 0.3), tol=1e-10)


@pytest.fixture(scope="session")
def lap129_family(lap129):
    return compute_family(lap129, center_node(lap129), (0.3,), tol=1e-10)


@pytest.fixture(scope="session")
def lap257_family(lap257):
    return compute_family(lap257, center_node(lap257),
                          (0.15, 0.2, 0.25, 0.3), tol=1e-10)


@pytest.fixture(scope="session")
def chk129_family(chk129):
    return compute_family(chk129, center_node(chk129),
                          (0.1, 0.15, 0.2, 0.25, 0.3), tol=1e-10)
