"""Exactly solvable position-dependent-mass quantum systems via point canonical transformations.

Modules: special_fn (orthogonal polynomials, quadrature), mass_catalog (mass
profiles and mu), pct_core (transformation identity), pct_maps (target
systems), radial3d (three-dimensional power-law masses), eigensolver
(finite-difference oracle) and cli.
"""
from . import eigensolver, mass_catalog, pct_core, pct_maps, radial3d, special_fn
from .eigensolver import Grid, SpectrumReport, verify
from .errors import PctError
from .mass_catalog import MassProfile, ScaleParams
from .pct_maps import ClassTag, TargetSystem

__version__ = "0.1.0"

__all__ = [
    "ClassTag",
    "Grid",
    "MassProfile",
    "PctError",
    "ScaleParams",
    "SpectrumReport",
    "TargetSystem",
    "eigensolver",
    "mass_catalog",
    "pct_core",
    "pct_maps",
    "radial3d",
    "special_fn",
    "verify",
]
