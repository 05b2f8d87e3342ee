"""Littlewood-Paley, Besov and cascade diagnostics for Navier-Stokes on a periodic box."""

from .spectral import (Field, Grid, Multiplier, apply_multiplier, curl, derivative, divergence,
                       gradient, heat_semigroup, laplacian, leray_project, make_grid,
                       riesz_potential)
from .littlewood_paley import DyadicPartition, bony_decompose, build_partition, dyadic_block, partial_sum
from .trajectory import Trajectory
from .norms import (BesovParams, NormReport, besov_norm, heat_flow_besov_ratio, interpolation_check,
                    kato_norm, lp_norm, ray_functional, weighted_log_functional)
from .cascade import (CascadeState, DecayFit, compute_cascade, duhamel_integral, fit_dyadic_decay,
                      remainder_residual, x_norm)
from .ns_solver import InitialData, SolverConfig, integrate, make_initial_data, vorticity_traj

__version__ = "0.1.0"

__all__ = [
    "Field",
    "Grid",
    "Multiplier",
    "apply_multiplier",
    "curl",
    "derivative",
    "divergence",
    "gradient",
    "heat_semigroup",
    "laplacian",
    "leray_project",
    "make_grid",
    "riesz_potential",
    "DyadicPartition",
    "bony_decompose",
    "build_partition",
    "dyadic_block",
    "partial_sum",
    "Trajectory",
    "BesovParams",
    "NormReport",
    "besov_norm",
    "heat_flow_besov_ratio",
    "interpolation_check",
    "kato_norm",
    "lp_norm",
    "ray_functional",
    "weighted_log_functional",
    "CascadeState",
    "DecayFit",
    "compute_cascade",
    "duhamel_integral",
    "fit_dyadic_decay",
    "remainder_residual",
    "x_norm",
    "InitialData",
    "SolverConfig",
    "integrate",
    "make_initial_data",
    "vorticity_traj",
]
