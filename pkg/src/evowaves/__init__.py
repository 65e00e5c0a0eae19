"""Causal solver and verification suite for weighted-space acoustic evolution.

Solves (d/dt applied to a material law of the inverse derivative, plus a
spatial divergence/gradient operator with impedance-type boundary
coupling) U = f on exponentially weighted time windows, and turns every
estimate the underlying theory guarantees (coercivity, energy bound,
causality) into an executable numerical check.
"""

from .material import (
    MaterialLaw,
    apply_material,
    apply_material_adjoint,
    coercivity,
    memory_bound,
    select_rho,
    solvability_margin,
)
from .rational import RationalMatrixFunction, fit_power_series, scalar_rational
from .signals import (
    WeightedGrid,
    WeightedSignal,
    rho_inner,
    rho_norm,
    time_multiply,
    translate,
    truncate_before,
)
from .solver import (
    EvoProblem,
    SolveReport,
    realize,
    realize_flux,
    residual_norm,
    solve_frequency,
    solve_timestep,
)
from .spatial import BoundaryLaw, SpatialDiscretization, build_grid
from .transform import (
    SpectralSignal,
    forward_transform,
    inverse_transform,
    time_antiderivative,
    time_derivative,
    translate_spectral,
)

__version__ = "0.1.0"

__all__ = [
    "WeightedGrid",
    "WeightedSignal",
    "rho_inner",
    "rho_norm",
    "truncate_before",
    "translate",
    "time_multiply",
    "SpectralSignal",
    "forward_transform",
    "inverse_transform",
    "time_derivative",
    "time_antiderivative",
    "translate_spectral",
    "RationalMatrixFunction",
    "scalar_rational",
    "fit_power_series",
    "MaterialLaw",
    "apply_material",
    "apply_material_adjoint",
    "coercivity",
    "memory_bound",
    "solvability_margin",
    "select_rho",
    "SpatialDiscretization",
    "build_grid",
    "BoundaryLaw",
    "EvoProblem",
    "SolveReport",
    "solve_frequency",
    "solve_timestep",
    "residual_norm",
    "realize",
    "realize_flux",
]
