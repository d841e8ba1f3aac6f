"""Expansion and random-walk escape for congruence quotients of SL2(F_p[t])."""

__version__ = "0.1.0"

from .cayley import QuotientGroup, girth, spectral_rho
from .polyring import PolyFp, factor, is_irreducible
from .quotient import FiniteField, ResidueRing, finite_field
from .sl2core import GenSet, Mat2, parse_matrix

__all__ = [
    "FiniteField",
    "GenSet",
    "Mat2",
    "PolyFp",
    "QuotientGroup",
    "ResidueRing",
    "factor",
    "finite_field",
    "girth",
    "is_irreducible",
    "parse_matrix",
    "spectral_rho",
]
