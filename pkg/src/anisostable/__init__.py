"""Numerical toolkit for diagonal SDE systems driven by anisotropic stable
processes: weak-solution simulation, transition densities, nonlocal
generators, semigroups/resolvents, Fourier multiplier bounds, and the
verification harness tying them together."""

__version__ = "0.1.0"

from .rng import RngHandle
from .stable import (StableIndex, normalization_constant, sample_standard,
                     sample_increment, sample_increments, density_1d)
from .grids import UniformGrid1D, TensorGrid, GridDensity1D, GridDensityND

__all__ = [
    "RngHandle",
    "StableIndex",
    "normalization_constant",
    "sample_standard",
    "sample_increment",
    "sample_increments",
    "density_1d",
    "UniformGrid1D",
    "TensorGrid",
    "GridDensity1D",
    "GridDensityND",
    "__version__",
]
