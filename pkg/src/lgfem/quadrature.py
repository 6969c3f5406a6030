"""Gauss quadrature rules on triangles.

All rules are returned in barycentric coordinates with weights normalized
to sum to 1, so that

    integral over a triangle T of f dA  ~=  area(T) * sum_i w_i * f(lam_i)

where lam_i = (lam0, lam1, lam2) are the barycentric coordinates of the
i-th point.  Low-degree rules (2 and 4) are the classical symmetric
Hammer-Stroud/Dunavant rules; higher degrees are built from a conical
product of Gauss-Legendre and Gauss-Jacobi rules, which is exact for any
requested total degree.
"""

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

# centroid rule, exact for degree 1
_RULE_DEG1_POINTS = np.array([[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]])
_RULE_DEG1_WEIGHTS = np.array([1.0])

# 3-point rule, exact for degree 2
_RULE_DEG2_POINTS = np.array(
    [
        [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
        [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
        [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
    ]
)
_RULE_DEG2_WEIGHTS = np.array([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0])

# 6-point Dunavant rule, exact for degree 4
_D4_A1 = 0.445948490915965
_D4_W1 = 0.223381589678011
_D4_A2 = 0.091576213509771
_D4_W2 = 0.109951743655322


def _symmetric_orbit(a):
    b = 1.0 - 2.0 * a
    return [[b, a, a], [a, b, a], [a, a, b]]


_RULE_DEG4_POINTS = np.array(_symmetric_orbit(_D4_A1) + _symmetric_orbit(_D4_A2))
_RULE_DEG4_WEIGHTS = np.array([_D4_W1] * 3 + [_D4_W2] * 3)


def _conical_product_rule(degree):
    """Conical-product rule on the reference triangle, exact for `degree`.

    Uses the Duffy map x = xi*(1-eta), y = eta with Gauss-Legendre in xi
    and Gauss-Jacobi (weight (1-eta)) in eta.
    """
    n = (degree + 2) // 2  # 2n-1 >= degree
    xg, wg = roots_legendre(n)
    xj, wj = roots_jacobi(n, 1.0, 0.0)
    # map both to [0, 1]; the Jacobi weight (1-t) picks up a factor 1/2
    xi = 0.5 * (xg + 1.0)
    wxi = 0.5 * wg
    eta = 0.5 * (xj + 1.0)
    weta = 0.25 * wj

    x = np.outer(xi, 1.0 - eta).ravel()
    y = np.tile(eta, n)
    w = np.outer(wxi, weta).ravel()
    points = np.column_stack([1.0 - x - y, x, y])
    # normalize so weights sum to 1 (raw weights integrate to the area 1/2)
    return points, w / 0.5


@lru_cache(maxsize=None)
def triangle_rule(degree):
    """Return (points, weights) exact for polynomials of total `degree`.

    points has shape (nq, 3) in barycentric coordinates, weights (nq,)
    summing to 1.
    """
    if degree < 0:
        raise ValueError(f"quadrature degree must be nonnegative, got {degree}")
    if degree <= 1:
        return _RULE_DEG1_POINTS.copy(), _RULE_DEG1_WEIGHTS.copy()
    if degree == 2:
        return _RULE_DEG2_POINTS.copy(), _RULE_DEG2_WEIGHTS.copy()
    if degree <= 4:
        return _RULE_DEG4_POINTS.copy(), _RULE_DEG4_WEIGHTS.copy()
    return _conical_product_rule(degree)


def physical_points(points, tri_vertices):
    """Map barycentric rule points to physical coordinates.

    tri_vertices: (..., 3, 2) triangle vertex coordinates.
    Returns (..., nq, 2).
    """
    return np.einsum("qj,...jk->...qk", points, tri_vertices)
