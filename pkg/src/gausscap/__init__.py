"""Capacities, Bessel potentials and Ornstein-Uhlenbeck sheets on Gaussian model spaces."""

__version__ = "0.1.0"

from .capacity import (
    SolverOptions,
    cap_potential,
    cap_variational,
    capacity,
    equivalence_ratio,
    generation_condition,
    refinement_trend,
    uniqueness_verdict,
)
from .hausdorff import CoveringSchedule, SubspacePair, gaussian_hausdorff, spherical_hausdorff, theta_dF
from .model_space import GaussModelSpace, HermiteExpansion, expand
from .potential import SobolevParams, bessel_quadrature, bessel_spectral, meyer_ratio, sobolev_norm
from .regions import ball, point, region_from_dict, slab
from .semigroup import maximal_function, mehler_apply, spectral_apply
from .sheet import SheetGrid, hitting_probability, kakutani_experiment, sample_sheet
from .truncation import SmoothTruncation, multiplicative_estimate_check, smooth_step, truncate_potential

__all__ = [
    "CoveringSchedule",
    "GaussModelSpace",
    "HermiteExpansion",
    "SheetGrid",
    "SmoothTruncation",
    "SobolevParams",
    "SolverOptions",
    "SubspacePair",
    "ball",
    "bessel_quadrature",
    "bessel_spectral",
    "cap_potential",
    "cap_variational",
    "capacity",
    "equivalence_ratio",
    "expand",
    "gaussian_hausdorff",
    "generation_condition",
    "hitting_probability",
    "kakutani_experiment",
    "maximal_function",
    "mehler_apply",
    "meyer_ratio",
    "multiplicative_estimate_check",
    "point",
    "refinement_trend",
    "region_from_dict",
    "sample_sheet",
    "slab",
    "smooth_step",
    "sobolev_norm",
    "spectral_apply",
    "spherical_hausdorff",
    "theta_dF",
    "truncate_potential",
    "uniqueness_verdict",
]
