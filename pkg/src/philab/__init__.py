"""
philab
======

Generalized Φ-functions and the Φ-Laplacian: Musielak-Orlicz norms, energy
minimization for growing exponents, a monotone scheme for the limit
equation, checks of the monotonicity inequalities, and an experiment lab
that ties them together.

Modules
-------
phi           Φ-families, conjugates, structural checks
grid          uniform grids, subdomains, node fields
orlicz        modulars, Luxemburg norms, jump condition, Poincaré ratios
variational   discrete energies and their minimization
viscosity     limit operator, its monotone scheme, comparison audit
inequalities  monotonicity inequalities, κ, fuzz campaigns
lab           configs, experiments, command line
"""

from . import grid, inequalities, orlicz, phi, variational, viscosity
from .grid import Disc, GridDomain, Rectangle, ScalarField
from .phi import ConstantPower, Custom, Piecewise, VariablePower, log_power

__version__ = "0.1.0"

__all__ = [
    "grid",
    "inequalities",
    "orlicz",
    "phi",
    "variational",
    "viscosity",
    "Disc",
    "GridDomain",
    "Rectangle",
    "ScalarField",
    "ConstantPower",
    "Custom",
    "Piecewise",
    "VariablePower",
    "log_power",
]
