"""Kinetic solver and property checks for spin-1/2 lattice fermions.

Submodules:
    spin                  exact 2x2 matrix algebra
    lattice               torus grids, dispersions, free propagator
    fields                grid-indexed matrix fields
    collision             regularized collision operators (direct backend)
    spectral              FFT-accelerated backend
    evolution             time integration
    diagnostics           structural property reports
    dispersion_validation dispersivity checks for the nearest-neighbor band
    cli                   batch driver
"""

from .errors import KineticsError
from .lattice import TorusGrid, DispersionRelation
from .fields import WignerField
from .collision import CollisionParams, CollisionOperator

__all__ = [
    "KineticsError",
    "TorusGrid",
    "DispersionRelation",
    "WignerField",
    "CollisionParams",
    "CollisionOperator",
]

__version__ = "0.1.0"
