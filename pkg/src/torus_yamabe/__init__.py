"""Exact and numerical checks behind Y(M) = 0 for symplectic torus bundles over Â ≠ 0 spin bases."""

__version__ = "0.1.0"

from .algebra import Generator, GradedElement, RingContext, fiber_integrate, mul, power_truncated, top_coefficient
from .bundle import BundleSpec, Certificate, certify_zero_yamabe, index_twisted_dirac, omega_invariance_check
from .charclass import PontryaginData, ahat_genus, ahat_polynomials, chern_character_line, spinc_parity
from .cocycle import (
    Cocycle,
    CoverNerve,
    IntAffineMap,
    is_symplectic,
    lattice_cover,
    orientation_double_cover,
    stabilize_odd,
    validate_cocycle,
)
from .constants import vol_sphere, yamabe_kahler, yamabe_sphere, yamabe_surface
from .metric import BlockMetric, decay_rate, scale_metric, symplectic_nondegeneracy, two_form_norm, weitzenbock_threshold
