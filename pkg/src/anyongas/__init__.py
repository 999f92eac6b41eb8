"""Average-field anyon gas: self-consistent magnetic Schrödinger solver.

Ground states of the energy functional coupling a 2D wavefunction to
the magnetic field generated by its own density, with tooling to
estimate the homogeneous-gas thermodynamic constant and to validate the
large-coupling Thomas-Fermi local-density approximation.
"""

from .grid import (
    DIRICHLET,
    NEUMANN,
    PLANE,
    ComplexField,
    GridSpec,
    ScalarField,
    VectorField,
    make_plane_box,
    make_square,
    mass,
    sample,
)
from .model import (
    EnergyBreakdown,
    ModelParams,
    current,
    density,
    energy,
    multiplier,
    residual,
    vector_potential,
    vortex_census,
)
from .solver import SolveReport, SolverConfig, minimize, scaling_transform
from .spectral import curl, free_space_convolve, grad
from .trial import BumpLattice, build_trial, upper_bound_certificate

__version__ = "0.1.0"

__all__ = [
    "DIRICHLET", "NEUMANN", "PLANE",
    "GridSpec", "ScalarField", "ComplexField", "VectorField",
    "make_square", "make_plane_box", "mass", "sample",
    "ModelParams", "EnergyBreakdown",
    "density", "current", "vector_potential", "energy", "residual",
    "multiplier", "vortex_census",
    "grad", "curl", "free_space_convolve",
    "BumpLattice", "build_trial", "upper_bound_certificate",
    "SolverConfig", "SolveReport", "minimize", "scaling_transform",
]
