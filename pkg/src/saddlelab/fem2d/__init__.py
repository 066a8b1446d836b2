"""Minimal 2D triangular finite element toolkit on the unit square."""

from .mesh import Mesh2D, barycentric_refine, load_mesh, save_mesh, structured_mesh, uniform_refine
from .quadrature import QuadratureRule, reference_monomial_integral, triangle_rule
from .spaces import (
    P1_CONTINUOUS,
    P1_DISCONTINUOUS,
    P2_CONTINUOUS_VECTOR,
    FESpace,
    scott_vogelius_spaces,
    taylor_hood_spaces,
)

__all__ = [
    "Mesh2D",
    "structured_mesh",
    "barycentric_refine",
    "uniform_refine",
    "save_mesh",
    "load_mesh",
    "QuadratureRule",
    "triangle_rule",
    "reference_monomial_integral",
    "FESpace",
    "P1_CONTINUOUS",
    "P1_DISCONTINUOUS",
    "P2_CONTINUOUS_VECTOR",
    "taylor_hood_spaces",
    "scott_vogelius_spaces",
]
