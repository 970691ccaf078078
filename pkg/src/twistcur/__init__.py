"""Twisting cochains of holomorphic vector bundle complexes and their residue currents.

The exact layer (polynomials over Q(i), Cech cochains, twisting cochains,
morphisms and homotopies) lives in ``polyalg``, ``cochain`` and ``twist``;
the numerical layer (pseudoinverse fields, regularized pairings) in
``fields``, ``quadrature`` and ``current``; theorem-level checks in
``homotopy``.
"""

from .cochain import Cover, GradedBundleFamily, HomCochain, cochain_product, delta
from .current import RegularizationSchedule, ResidueReport, TestForm, UData
from .polyalg import GaussianRational, PolyMatrix, Polynomial
from .twist import (D_op, LiftError, Morphism, TwistingCochain, complete_twisting, extend_morphism,
                    nabla, validate_twisting)

__version__ = "0.1.0"

__all__ = [
    "Cover", "GradedBundleFamily", "HomCochain", "cochain_product", "delta",
    "RegularizationSchedule", "ResidueReport", "TestForm", "UData",
    "GaussianRational", "PolyMatrix", "Polynomial",
    "D_op", "LiftError", "Morphism", "TwistingCochain", "complete_twisting", "extend_morphism",
    "nabla", "validate_twisting",
]
