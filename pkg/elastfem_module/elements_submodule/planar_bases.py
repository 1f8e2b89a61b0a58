"""
Planar building blocks of the prism stress element: the cubic Hu-Zhang
symmetric-matrix basis and the quadratic BDM vector basis on a triangle.

Local edge m is the edge opposite local vertex m. Edge quantities use the
global edge frame (tangent from the lower to the higher global vertex id), so
two triangles sharing an edge build identical edge fields.
"""
from itertools import combinations
from typing import List, NamedTuple

import numpy as np

from ..poly_submodule.cells import SimplexCell
from ..poly_submodule.poly_field import PolyField, variable
from .element_basis import ShapeMeta

SYMMETRIC_UNITS = (
    np.array([[1.0, 0.0], [0.0, 0.0]]),
    np.array([[0.0, 1.0], [1.0, 0.0]]),
    np.array([[0.0, 0.0], [0.0, 1.0]]),
)

VERTEX_PAIRS = tuple(combinations(range(3), 2))


class EdgeFrame(NamedTuple):
    first: int
    second: int
    tangent: np.ndarray
    normal: np.ndarray
    length: float


class PlanarBasis(NamedTuple):
    fields: List[PolyField]
    meta: List[ShapeMeta]


def _global_ids(global_ids):
    ids = (0, 1, 2) if global_ids is None else tuple(int(g) for g in global_ids)
    if len(ids) != 3 or len(set(ids)) != 3:
        raise ValueError(f"a triangle needs three distinct global vertex ids, got {ids}")
    return ids


def triangle_edge_frames(cell: SimplexCell, global_ids=None):
    """
    Edge frames of a triangle in the global convention.

    Returns:
    list[EdgeFrame]: one per local edge m; (first, second) are the local endpoints
    in ascending global id, tangent runs first -> second, normal is the tangent
    rotated by +90 degrees.
    """
    ids = _global_ids(global_ids)
    frames = []
    for m in range(3):
        a, b = sorted((v for v in range(3) if v != m), key=lambda v: ids[v])
        vector = cell.vertices[b] - cell.vertices[a]
        length = float(np.linalg.norm(vector))
        tangent = vector / length
        normal = np.array([-tangent[1], tangent[0]])
        frames.append(EdgeFrame(a, b, tangent, normal, length))
    return frames


def _check_triangle(cell):
    if not isinstance(cell, SimplexCell) or cell.dim != 2:
        raise ValueError("planar bases need a triangle cell")


def hz2d_basis(cell: SimplexCell, global_ids=None) -> PlanarBasis:
    """
    30 cubic symmetric-matrix fields: 9 vertex, 12 edge and 9 interior bubbles.
    """
    _check_triangle(cell)
    lam = [variable(3, i) for i in range(3)]
    fields, meta = [], []

    for i in range(3):
        for j, unit in enumerate(SYMMETRIC_UNITS):
            fields.append(lam[i].times(unit, "sym2"))
            meta.append(ShapeMeta("vertex", i, j))

    for m, frame in enumerate(triangle_edge_frames(cell, global_ids)):
        t, nu = frame.tangent, frame.normal
        la, lb = lam[frame.first], lam[frame.second]
        profiles = (la * la * lb, la * lb * lb)
        matrices = (np.outer(nu, nu), np.outer(t, nu) + np.outer(nu, t))
        for l, (matrix, profile) in enumerate((mat, p) for mat in matrices for p in profiles):
            fields.append(profile.times(matrix, "sym2"))
            meta.append(ShapeMeta("edge", m, l))

    for p, (i, j) in enumerate(VERTEX_PAIRS):
        t_ij = cell.vertices[j] - cell.vertices[i]
        for r in range(3):
            fields.append((lam[i] * lam[j] * lam[r]).times(np.outer(t_ij, t_ij), "sym2"))
            meta.append(ShapeMeta("interior", 0, 3 * p + r))
    return PlanarBasis(fields, meta)


def hz2d_bubbles(basis: PlanarBasis):
    return [f for f, m in zip(basis.fields, basis.meta) if m.entity == "interior"]


def edge_height(cell: SimplexCell, m):
    """Height from local vertex m onto the opposite edge."""
    frame_length = np.linalg.norm(cell.vertices[(m + 2) % 3] - cell.vertices[(m + 1) % 3])
    return 2.0 * cell.volume / frame_length


def bdm2_basis(cell: SimplexCell, global_ids=None) -> PlanarBasis:
    """
    12 quadratic vector fields: 3 per edge plus 3 interior bubbles.

    The edge fields of edge m have outward fluxes lambda_a, lambda_b and
    lambda_a * lambda_b on edge m ((a, b) ascending global id) and no flux
    through the other two edges.
    """
    _check_triangle(cell)
    lam = [variable(3, i) for i in range(3)]
    x = cell.vertices
    fields, meta = [], []

    for m, frame in enumerate(triangle_edge_frames(cell, global_ids)):
        a, b = frame.first, frame.second
        h_m = edge_height(cell, m)
        t_ma = x[a] - x[m]
        t_mb = x[b] - x[m]
        fields.append(lam[a].times(t_ma / h_m, "vec2"))
        fields.append(lam[b].times(t_mb / h_m, "vec2"))
        fields.append((lam[a] * lam[b]).times((t_ma + t_mb) / (2.0 * h_m), "vec2"))
        meta.extend(ShapeMeta("edge", m, l) for l in range(3))

    for p, (i, j) in enumerate(VERTEX_PAIRS):
        fields.append((lam[i] * lam[j]).times(x[j] - x[i], "vec2"))
        meta.append(ShapeMeta("interior", 0, p))
    return PlanarBasis(fields, meta)


def outward_edge_normals(cell: SimplexCell):
    """Unit outward normal of each local edge m (opposite vertex m)."""
    normals = []
    for m in range(3):
        a, b = (m + 1) % 3, (m + 2) % 3
        t = cell.vertices[b] - cell.vertices[a]
        n = np.array([-t[1], t[0]]) / np.linalg.norm(t)
        if n @ (cell.vertices[a] - cell.vertices[m]) < 0.0:
            n = -n
        normals.append(n)
    return normals


def edge_points(m, s):
    """Barycentric points on local edge m at edge parameters s (0 at the first, 1 at the second endpoint)."""
    s = np.asarray(s, dtype=float).ravel()
    a, b = (m + 1) % 3, (m + 2) % 3
    points = np.zeros((s.size, 3))
    points[:, a] = 1.0 - s
    points[:, b] = s
    return points
