"""Closed-form Laplacian machinery: fundamental solution, tangent parabolas,
and the compactly supported test functions built from their difference.

The auxiliary function psi_s replaces the fundamental solution Gamma inside
the ball of radius s by the parabola alpha - beta |x|^2 chosen to match value
and slope at |x| = s.  Its distributional Laplacian is the constant -C(s) on
that ball and zero outside, which turns pairings against test functions into
differences of ball averages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import ScalarField


def fundamental_value(n: int, rho):
    """Gamma(|x|): -log for n = 2, power law for n >= 3."""
    rho = np.asarray(rho, dtype=float)
    if n == 2:
        return -np.log(rho)
    return rho ** (2 - n)


def fundamental_slope(n: int, rho):
    rho = np.asarray(rho, dtype=float)
    if n == 2:
        return -1.0 / rho
    return (2.0 - n) * rho ** (1 - n)


@dataclass(frozen=True)
class AuxiliaryFunction:
    """Parabola alpha - beta |x|^2 inside B_s, Gamma outside."""

    s: float
    n: int
    alpha: float
    beta: float
    laplacian_inside: float  # = -C(s)

    def __call__(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        rho = np.sqrt((points ** 2).sum(axis=1))
        inside = rho <= self.s
        out = np.empty(rho.shape)
        out[inside] = self.alpha - self.beta * rho[inside] ** 2
        out[~inside] = fundamental_value(self.n, rho[~inside])
        return out

    @property
    def density_constant(self) -> float:
        """C(s), the negative of the Laplacian inside the touch ball."""
        return -self.laplacian_inside


def build_psi(n: int, s: float) -> AuxiliaryFunction:
    """Tangent-parabola replacement of the fundamental solution.

    Coefficients solve the two matching conditions at |x| = s:
        alpha - beta s^2 = Gamma(s)
        -2 beta s = Gamma'(s)
    """
    if n < 2:
        raise ValueError("dimension must be at least 2")
    if s <= 0.0:
        raise ValueError("touch radius must be positive")
    if n == 2:
        beta = 1.0 / (2.0 * s * s)
        alpha = 0.5 - math.log(s)
        c = 2.0 / (s * s)
    else:
        beta = (n - 2) * s ** (-n) / 2.0
        alpha = (n / 2.0) * s ** (2 - n)
        c = n * (n - 2) * s ** (-n)
    # cross-check the closed forms against the matching conditions
    value_gap = abs((alpha - beta * s * s) - float(fundamental_value(n, s)))
    slope_gap = abs(-2.0 * beta * s - float(fundamental_slope(n, s)))
    scale = max(1.0, abs(float(fundamental_value(n, s))))
    if value_gap > 1e-12 * scale or slope_gap > 1e-12 * max(1.0, 1.0 / s):
        raise AssertionError("tangency conditions violated by closed forms")
    return AuxiliaryFunction(s=float(s), n=n, alpha=alpha, beta=beta,
                             laplacian_inside=-c)


@dataclass(frozen=True)
class TestFunction:
    """Phi_{r,s} = psi_r - psi_s: nonnegative, supported in the closed B_s,
    with piecewise-constant Laplacian -C(r) on B_r plus C(s) on B_s."""

    psi_r: AuxiliaryFunction
    psi_s: AuxiliaryFunction

    @property
    def r(self) -> float:
        return self.psi_r.s

    @property
    def s(self) -> float:
        return self.psi_s.s

    def __call__(self, points) -> np.ndarray:
        return self.psi_r(points) - self.psi_s(points)

    def laplacian(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        rho = np.sqrt((points ** 2).sum(axis=1))
        out = np.zeros(rho.shape)
        out[rho <= self.r] -= self.psi_r.density_constant
        out[rho <= self.s] += self.psi_s.density_constant
        return out


def build_phi(n: int, r: float, s: float) -> TestFunction:
    if not 0.0 < r < s:
        raise ValueError("need 0 < r < s")
    return TestFunction(psi_r=build_psi(n, r), psi_s=build_psi(n, s))


def ball_volume(n: int, r: float) -> float:
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0) * r ** n


def constant_identity(n: int, r: float) -> float:
    """C(r) |B_r|, which the construction keeps independent of r."""
    return build_psi(n, r).density_constant * ball_volume(n, r)


def weak_pairing(u: ScalarField, phi: TestFunction) -> float:
    """Quadrature of u times the distributional Laplacian of Phi_{r,s}.

    Midpoint rule with node cells: since the Laplacian is piecewise constant,
    the pairing reduces to C(s) int_{B_s} u - C(r) int_{B_r} u with the balls
    centered at the origin.  Nonnegative for subharmonic u; the degenerate
    normalization u = 1 pairs to zero up to the indicator quadrature error.
    """
    grid = u.grid
    for k in range(grid.dim):
        if grid.origin[k] > -phi.s or grid.origin[k] + grid.extent[k] < phi.s:
            raise ValueError("quadrature grid does not cover the support ball")
    pts = grid.coords()
    rho2 = (pts ** 2).sum(axis=1)
    vols = grid.cell_volumes()
    uu = u.values
    int_r = float((vols * uu)[rho2 <= phi.r ** 2].sum())
    int_s = float((vols * uu)[rho2 <= phi.s ** 2].sum())
    return (phi.psi_s.density_constant * int_s
            - phi.psi_r.density_constant * int_r)
