"""Mean value sets for divergence form elliptic operators.

The library discretizes L = d_i(a^{ij} d_j .) on uniform grids, computes
discrete Green's functions, and solves the obstacle problem whose
noncontact sets are the mean value sets D_r(x0): the regions over which
averaging any L-harmonic function reproduces its value at x0.  Companion
modules verify the mean value property, build Schwarz style potentials to
certify uniqueness, and provide the classical closed forms for the
Laplacian.
"""

from .grid import GridError, GridSpec, ScalarField, build_grid, locate_node
from .coefficients import (CoefficientField, EllipticityError, make_coefficients,
                           identity_field, anisotropic_field, checkerboard_field,
                           smooth_rotation_field)
from .operator import DiscreteOperator, GridMismatchError, assemble, apply
from .solver import SolveReport, SolverError, solve_lcp, solve_spd
from .kernels import backend
from .greens import GreenField, compute_green
from .obstacle import (ExtractionError, MeanValueFamily, MeanValueSet,
                       ObstacleSolution, compute_family, extract_set,
                       solve_obstacle)
from .contour import hausdorff_to_circle, marching_squares
from .verify import (HarmonicSample, VerificationReport, check_mean_value,
                     check_monotonicity, dual_identity_check, harmonic_samples,
                     nesting_violations)
from .schwarz import (SchwarzPotential, UniquenessReport, VanishingReport,
                      build_potential_direct, build_potential_integral,
                      check_vanishing, match_radius, potential_from_height,
                      uniqueness_experiment)
from .classical import (AuxiliaryFunction, TestFunction, build_phi, build_psi,
                        constant_identity, weak_pairing)
from .config import ConfigError, RunConfig, canonical_text, parse_config
from .fieldio import (FieldIOError, read_field, read_mask, write_contour,
                      write_field_csv, write_field_raw, write_mask)

__version__ = "0.1.0"
