"""Quadrature rules on the reference triangle.

Points are stored in barycentric coordinates and weights are normalized to
sum to one, so that ``integral over T of f = area(T) * sum_i w_i f(x_i)``.

Low degrees use the standard symmetric Gauss rules; degree six and above are
built by collapsing a tensor-product Gauss-Legendre rule onto the triangle
(Duffy transform), which is exact for the requested degree by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np


@dataclass(frozen=True)
class QuadratureRule:
    degree: int
    points: np.ndarray  # (nq, 3) barycentric coordinates
    weights: np.ndarray  # (nq,), sums to 1

    @property
    def npoints(self) -> int:
        return self.weights.shape[0]

    def physical_points(self, verts: np.ndarray) -> np.ndarray:
        """Map to physical coordinates; verts is (..., 3, 2)."""
        return np.einsum("qi,...id->...qd", self.points, verts)


def _orbit1(a):
    # permutations of (a, b, b) with b = (1 - a) / 2
    b = 0.5 * (1.0 - a)
    return [(a, b, b), (b, a, b), (b, b, a)]


def _duffy_rule(degree: int) -> tuple[np.ndarray, np.ndarray]:
    n = (degree + 3) // 2  # 2n - 1 >= degree + 1 covers the Jacobi factor
    x, wx = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (x + 1.0)
    wx = 0.5 * wx
    pts = []
    wts = []
    for xi, wi in zip(x, wx):
        for eta, wj in zip(x, wx):
            px = xi
            py = eta * (1.0 - xi)
            pts.append((1.0 - px - py, px, py))
            wts.append(2.0 * wi * wj * (1.0 - xi))
    return np.array(pts), np.array(wts)


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> QuadratureRule:
    """Rule exact for all polynomials of total degree <= degree."""
    if degree < 1:
        degree = 1
    if degree == 1:
        pts = [(1 / 3, 1 / 3, 1 / 3)]
        wts = [1.0]
    elif degree == 2:
        pts = [(0.5, 0.5, 0.0), (0.0, 0.5, 0.5), (0.5, 0.0, 0.5)]
        wts = [1 / 3] * 3
    elif degree in (3, 4):
        pts = _orbit1(0.108103018168070) + _orbit1(0.816847572980459)
        wts = [0.223381589678011] * 3 + [0.109951743655322] * 3
        degree = 4
    elif degree == 5:
        pts = [(1 / 3, 1 / 3, 1 / 3)]
        pts += _orbit1(0.059715871789770) + _orbit1(0.797426985353087)
        wts = [0.225] + [0.132394152788506] * 3 + [0.125939180544827] * 3
    else:
        p, w = _duffy_rule(degree)
        return QuadratureRule(degree, p, w)
    return QuadratureRule(degree, np.array(pts), np.array(wts))


def reference_monomial_integral(i: int, j: int) -> float:
    """Exact value of the integral of x^i y^j over the unit reference triangle."""
    return factorial(i) * factorial(j) / factorial(i + j + 2)
