"""Model-error statistics of alpha-type turbulence closures.

A Fourier–Galerkin solver for forced 2D Navier–Stokes in vorticity form on
the unit torus, a family of deconvolution-alpha filters, and tools to
accumulate and analyse the residual obtained by inserting the exact flow
into each filtered model.
"""

from .filters import FilterSpec, complement, consistency_error, filter_field, raw_symbol, symbol
from .solver import BlowUpError, ForcingField, SolverParams, TrajectoryState, make_force, step
from .spectral import PhysicalField, SpectralField, l2_norm, shell_decompose, to_physical, to_spectral

__all__ = [
    "BlowUpError", "FilterSpec", "ForcingField", "PhysicalField", "SolverParams", "SpectralField",
    "TrajectoryState", "complement", "consistency_error", "filter_field", "l2_norm", "make_force",
    "raw_symbol", "shell_decompose", "step", "symbol", "to_physical", "to_spectral",
]

__version__ = "0.1.0"
