"""
Quadrature rules on the reference interval, triangle, tetrahedron and prism.

Simplex rules are collapsed (conical) products of Gauss-Jacobi and
Gauss-Legendre rules: n points per direction integrate total degree 2n-1
exactly and all weights are positive. Points are returned in the reference
variables used by PolyField: barycentric coordinates for simplices, xi for the
interval, (lambda_1, lambda_2, lambda_3, xi) for the prism.
"""
from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

MAX_SIMPLEX_DEGREE = 14

REFERENCE_MEASURE = {
    "interval": 1.0,
    "triangle": 0.5,
    "tetrahedron": 1.0 / 6.0,
    "prism": 0.5,
}


@dataclass(frozen=True)
class QuadRule:
    cell_kind: str
    points: np.ndarray
    weights: np.ndarray
    degree: int

    @property
    def n_points(self):
        return len(self.weights)


def _points_per_direction(degree):
    return max(1, int(math.ceil((degree + 1) / 2.0)))


def _gauss_legendre_01(n):
    x, w = roots_legendre(n)
    return (x + 1.0) / 2.0, w / 2.0


def _gauss_jacobi_01(n, alpha):
    # weight (1 - s)**alpha on [0, 1]
    x, w = roots_jacobi(n, alpha, 0.0)
    return (x + 1.0) / 2.0, w / 2.0 ** (alpha + 1)


def _interval_rule(degree):
    s, w = _gauss_legendre_01(_points_per_direction(degree))
    return s.reshape(-1, 1), w


def _triangle_rule(degree):
    n = _points_per_direction(degree)
    s, ws = _gauss_jacobi_01(n, 1)
    v, wv = _gauss_legendre_01(n)
    ss, vv = np.meshgrid(s, v, indexing="ij")
    t = (1.0 - ss) * vv
    weights = np.outer(ws, wv).ravel()
    ss, t = ss.ravel(), t.ravel()
    points = np.column_stack([1.0 - ss - t, ss, t])
    return points, weights


def _tetrahedron_rule(degree):
    n = _points_per_direction(degree)
    s, ws = _gauss_jacobi_01(n, 2)
    v, wv = _gauss_jacobi_01(n, 1)
    q, wq = _gauss_legendre_01(n)
    ss, vv, qq = np.meshgrid(s, v, q, indexing="ij")
    t = (1.0 - ss) * vv
    r = (1.0 - ss) * (1.0 - vv) * qq
    weights = (ws[:, None, None] * wv[None, :, None] * wq[None, None, :]).ravel()
    ss, t, r = ss.ravel(), t.ravel(), r.ravel()
    points = np.column_stack([1.0 - ss - t - r, ss, t, r])
    return points, weights


def _prism_rule(degree):
    tri_points, tri_weights = _triangle_rule(degree)
    xi, xi_weights = _interval_rule(degree)
    n_tri, n_xi = len(tri_weights), len(xi_weights)
    points = np.column_stack([
        np.repeat(tri_points, n_xi, axis=0),
        np.tile(xi[:, 0], n_tri),
    ])
    weights = np.repeat(tri_weights, n_xi) * np.tile(xi_weights, n_tri)
    return points, weights


_BUILDERS = {
    "interval": _interval_rule,
    "triangle": _triangle_rule,
    "tetrahedron": _tetrahedron_rule,
    "prism": _prism_rule,
}


@lru_cache(maxsize=None)
def quad_rule(cell_kind: str, degree: int) -> QuadRule:
    """
    Quadrature rule exact to the requested polynomial degree.

    Parameters:
    cell_kind (str): "interval", "triangle", "tetrahedron" or "prism".
    degree (int): exactness degree; simplex kinds support degree <= 14.

    Returns:
    QuadRule: reference points and weights summing to the reference measure.
    """
    if cell_kind not in _BUILDERS:
        raise ValueError(f"unknown cell kind for quadrature: {cell_kind!r}")
    if int(degree) != degree or degree < 0:
        raise ValueError(f"quadrature degree must be a non-negative integer, got {degree!r}")
    if cell_kind != "interval" and degree > MAX_SIMPLEX_DEGREE:
        raise ValueError(
            f"unsupported quadrature degree {degree} for {cell_kind}: at most {MAX_SIMPLEX_DEGREE} is supported"
        )
    points, weights = _BUILDERS[cell_kind](int(degree))
    points.setflags(write=False)
    weights.setflags(write=False)
    return QuadRule(cell_kind=cell_kind, points=points, weights=weights, degree=int(degree))
