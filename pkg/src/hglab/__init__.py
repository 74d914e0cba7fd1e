"""Numerical toolkit for Hilbert geometry of properly convex domains,
Cartan projections of matrix sequences and boundary regularity."""

__version__ = "0.1.0"

from hglab.errors import HGLabError  # noqa: E402
from hglab.projlin import CartanVector, ProjectiveMap, ProjectivePoint, cartan, cartan_of_product  # noqa: E402

__all__ = [
    "__version__",
    "HGLabError",
    "CartanVector",
    "ProjectiveMap",
    "ProjectivePoint",
    "cartan",
    "cartan_of_product",
]
