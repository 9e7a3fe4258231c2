"""Charges of asymptotically flat initial data: mass, momenta and centers of mass.

Submodules
----------
tensors     curvature, constraints and parity from metric jets
catalog     analytic initial-data families, rigid motions, serialization
quadrature  sphere rules and surface flux integrals
harmonics   real spherical harmonics and the operator -Lap - 2
charges     flux functionals with radius-ladder extrapolation
cmc         constant mean curvature spheres and their centroids
runner      YAML experiment plans and reports
verify      acceptance and invariant batteries
"""

from .catalog import (
    Flat,
    HarmonicAsymptotics,
    RigidMotion,
    SAF,
    SchwarzschildIsotropic,
    Sum,
    builtin_specs,
    pullback,
)
from .charges import (
    adm_mass_coordinate,
    adm_mass_einstein,
    angular_momentum,
    center_corvino_schoen,
    center_intrinsic,
    compute_charges,
    linear_momentum,
)
from .cmc import CmcProblem, centroid, solve_cmc

__version__ = "0.1.0"

__all__ = [
    "Flat",
    "HarmonicAsymptotics",
    "RigidMotion",
    "SAF",
    "SchwarzschildIsotropic",
    "Sum",
    "builtin_specs",
    "pullback",
    "adm_mass_coordinate",
    "adm_mass_einstein",
    "angular_momentum",
    "center_corvino_schoen",
    "center_intrinsic",
    "compute_charges",
    "linear_momentum",
    "CmcProblem",
    "centroid",
    "solve_cmc",
]
