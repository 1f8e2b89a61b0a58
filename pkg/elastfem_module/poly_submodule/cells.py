"""
Affine cell geometries on which PolyFields live.

A cell fixes the reference variables of its fields (barycentric coordinates,
plus the axial coordinate xi for prisms) and the constant gradients of those
variables, which is all the chain rule needs.
"""
import math

import numpy as np

from .quadrature import REFERENCE_MEASURE, quad_rule

GEOMETRY_TOL = 1e-12
INSIDE_TOL = 1e-10


class SimplexCell:
    """
    Triangle (2D) or tetrahedron (3D) with barycentric reference variables.

    Parameters
    ----------
        vertices : array (d+1, d)
            vertex coordinates; any orientation is accepted, the measure is unsigned
    """

    def __init__(self, vertices):
        vertices = np.asarray(vertices, dtype=float)
        if vertices.ndim != 2 or vertices.shape[0] != vertices.shape[1] + 1 or vertices.shape[1] not in (2, 3):
            raise ValueError(f"simplex vertices must have shape (3, 2) or (4, 3), got {vertices.shape}")
        self.vertices = vertices
        self.dim = vertices.shape[1]
        self.kind = "triangle" if self.dim == 2 else "tetrahedron"
        self.nvar = self.dim + 1
        self.n_bary = self.nvar

        jacobian = (vertices[1:] - vertices[0]).T
        self.signed_det = float(np.linalg.det(jacobian))
        scale = max(np.linalg.norm(vertices[1:] - vertices[0], axis=1).max(), 1e-300) ** self.dim
        if abs(self.signed_det) <= GEOMETRY_TOL * scale:
            raise ValueError(f"degenerate {self.kind} with vertices {vertices.tolist()}")
        self.volume = abs(self.signed_det) / math.factorial(self.dim)

        inverse = np.linalg.inv(jacobian)
        self.gradients = np.vstack([-inverse.sum(axis=0), inverse])
        self.gradients.setflags(write=False)

    @property
    def orientation(self):
        return 1 if self.signed_det > 0 else -1

    @property
    def diameter(self):
        diffs = self.vertices[:, None, :] - self.vertices[None, :, :]
        return float(np.sqrt((diffs ** 2).sum(axis=2)).max())

    @property
    def centroid(self):
        return self.vertices.mean(axis=0)

    def to_physical(self, ref_points):
        return np.asarray(ref_points, dtype=float) @ self.vertices

    def to_reference(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        bary = (points - self.vertices[0]) @ self.gradients[1:].T
        return np.column_stack([1.0 - bary.sum(axis=1), bary])

    def contains_reference(self, ref_points, tol=INSIDE_TOL):
        ref_points = np.atleast_2d(ref_points)
        return bool(np.all(ref_points >= -tol) and np.all(ref_points <= 1.0 + tol))

    def quadrature(self, degree):
        """Reference points and physical weights of a rule exact to `degree`."""
        rule = quad_rule(self.kind, degree)
        return rule.points, rule.weights * (self.volume / REFERENCE_MEASURE[self.kind])

    def exact_monomial_integral(self, exponents):
        exponents = np.asarray(exponents, dtype=int)
        return exact_simplex_integral(exponents, self)

    def sub_simplex(self, local_vertices):
        """Geometry of a face (3D) or edge (2D) given by local vertex indices."""
        return self.vertices[list(local_vertices)]


class PrismCell:
    """
    Triangular prism base x [z0, z1]; reference variables (lambda_1..3, xi), z = z0 + h0 * xi.
    """

    def __init__(self, triangle_vertices, z0, z1):
        self.base = SimplexCell(triangle_vertices)
        if not z1 > z0:
            raise ValueError(f"prism interval must have positive length, got [{z0}, {z1}]")
        self.z0 = float(z0)
        self.z1 = float(z1)
        self.h0 = self.z1 - self.z0
        self.kind = "prism"
        self.dim = 3
        self.nvar = 4
        self.n_bary = 3
        self.volume = self.base.volume * self.h0

        gradients = np.zeros((4, 3))
        gradients[:3, :2] = self.base.gradients
        gradients[3, 2] = 1.0 / self.h0
        self.gradients = gradients
        self.gradients.setflags(write=False)

    @property
    def vertices(self):
        tri = self.base.vertices
        bottom = np.column_stack([tri, np.full(3, self.z0)])
        top = np.column_stack([tri, np.full(3, self.z1)])
        return np.vstack([bottom, top])

    @property
    def diameter(self):
        return float(math.hypot(self.base.diameter, self.h0))

    def to_physical(self, ref_points):
        ref_points = np.atleast_2d(np.asarray(ref_points, dtype=float))
        xy = ref_points[:, :3] @ self.base.vertices
        z = self.z0 + self.h0 * ref_points[:, 3]
        return np.column_stack([xy, z])

    def to_reference(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        bary = self.base.to_reference(points[:, :2])
        xi = (points[:, 2] - self.z0) / self.h0
        return np.column_stack([bary, xi])

    def contains_reference(self, ref_points, tol=INSIDE_TOL):
        ref_points = np.atleast_2d(ref_points)
        return bool(np.all(ref_points >= -tol) and np.all(ref_points <= 1.0 + tol))

    def quadrature(self, degree):
        rule = quad_rule("prism", degree)
        return rule.points, rule.weights * (self.volume / REFERENCE_MEASURE["prism"])

    def exact_monomial_integral(self, exponents):
        exponents = np.asarray(exponents, dtype=int)
        planar = exact_simplex_integral(exponents[:3], self.base)
        return planar * self.h0 / (exponents[3] + 1.0)


class CartesianCell:
    """Identity frame: reference variables are the physical coordinates themselves."""

    def __init__(self, dim):
        if dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {dim}")
        self.dim = dim
        self.kind = "cartesian"
        self.nvar = dim
        self.n_bary = 0
        self.gradients = np.eye(dim)
        self.gradients.setflags(write=False)

    def to_physical(self, ref_points):
        return np.atleast_2d(np.asarray(ref_points, dtype=float))

    def to_reference(self, points):
        return np.atleast_2d(np.asarray(points, dtype=float))

    def contains_reference(self, ref_points, tol=INSIDE_TOL):
        return True


def exact_simplex_integral(exponents, cell) -> float:
    """
    Closed-form integral of a barycentric monomial over a simplex.

    Parameters:
    exponents (sequence of int): one exponent per barycentric coordinate (3 in 2D, 4 in 3D).
    cell (SimplexCell or float): the simplex, or directly its measure.

    Returns:
    float: d! |T| prod(a_i!) / (sum(a_i) + d)!.
    """
    exponents = [int(a) for a in exponents]
    if any(a < 0 for a in exponents):
        raise ValueError(f"exponents must be non-negative, got {exponents}")
    dim = len(exponents) - 1
    if dim not in (1, 2, 3):
        raise ValueError(f"expected 2 to 4 barycentric exponents, got {len(exponents)}")
    measure = cell if isinstance(cell, (int, float)) else cell.volume
    numerator = math.factorial(dim) * math.prod(math.factorial(a) for a in exponents)
    return float(measure) * numerator / math.factorial(sum(exponents) + dim)
