"""
Lowest-order nonconforming symmetric stress elements on tetrahedra (42 fields)
and triangles (15 fields), with discontinuous P1 displacements.

Facet i is the facet opposite local vertex i. The facet fields are built
against a frame n_1..n_d and a normal shared by both cells of the facet, so
that the moments of tau nu against lambda_p n_a agree on both sides.
"""
from itertools import combinations
from typing import NamedTuple, Tuple

import numpy as np
import scipy.linalg

from ..poly_submodule.cells import SimplexCell
from ..poly_submodule.poly_field import constant, evaluate_fields, to_full, variable, vec_kind, zero
from ..poly_submodule.quadrature import quad_rule
from .element_basis import DofFunctional, DofFunctionalSet, ElementBasis, ShapeMeta

NC_COUNTS = {"tet_nc": (42, 12), "tri_nc": (15, 6)}
ELEMENT_KIND = {3: "tet_nc", 2: "tri_nc"}
FACET_ENTITY = {3: "face", 2: "edge"}


class FacetFrame(NamedTuple):
    vertices: Tuple[int, ...]
    frame: np.ndarray
    normal: np.ndarray


def _check_simplex(cell):
    if not isinstance(cell, SimplexCell):
        raise ValueError(f"expected a SimplexCell, got {type(cell).__name__}")


def outward_facet_normal(cell: SimplexCell, i):
    g = cell.gradients[i]
    return -g / np.linalg.norm(g)


def facet_measure(cell: SimplexCell, i):
    corners = cell.vertices[[k for k in range(cell.nvar) if k != i]]
    if cell.dim == 2:
        return float(np.linalg.norm(corners[1] - corners[0]))
    return 0.5 * float(np.linalg.norm(np.cross(corners[1] - corners[0], corners[2] - corners[0])))


def facet_rule(cell: SimplexCell, i, degree):
    """Barycentric quadrature points on facet i and their physical weights."""
    local = [k for k in range(cell.nvar) if k != i]
    if cell.dim == 2:
        rule = quad_rule("interval", degree)
        facet_points = np.column_stack([1.0 - rule.points[:, 0], rule.points[:, 0]])
        scale = facet_measure(cell, i)
    else:
        rule = quad_rule("triangle", degree)
        facet_points = rule.points
        scale = facet_measure(cell, i) / 0.5
    points = np.zeros((rule.n_points, cell.nvar))
    points[:, local] = facet_points
    return points, rule.weights * scale


def dual_frame(cell: SimplexCell, i, facet_vertices):
    """Rows n_a with n_a . (x_{j_b} - x_i) = delta_ab for the facet vertices j_b in the given order."""
    tangents = (cell.vertices[list(facet_vertices)] - cell.vertices[i]).T
    return np.linalg.inv(tangents)


def own_facet_frames(cell: SimplexCell, global_ids=None):
    """Facet frames a cell would use as the owner of every facet."""
    _check_simplex(cell)
    ids = list(range(cell.nvar)) if global_ids is None else [int(g) for g in global_ids]
    frames = []
    for i in range(cell.nvar):
        vertices = tuple(sorted((k for k in range(cell.nvar) if k != i), key=lambda k: ids[k]))
        frames.append(FacetFrame(vertices, dual_frame(cell, i, vertices), outward_facet_normal(cell, i)))
    return frames


def facet_profiles(dim, i, j, p):
    """
    Scalar profile of the facet-i field along t_ij tested by lambda_p.

    Its facet-i moments against the facet barycentrics are a multiple of delta_{p r}
    and its moments against P1 on the facet opposite j vanish.
    """
    nvar = dim + 1
    lam = [variable(nvar, k) for k in range(nvar)]
    facet = [k for k in range(nvar) if k != i]
    diff = lam[i] - lam[j]
    if dim == 3:
        if p == j:
            rest = [k for k in facet if k != j]
            pair = lam[rest[0]] + lam[rest[1]]
            return 27.0 * lam[j] - 9.0 * lam[i] - 3.0 * pair + 30.0 * diff * pair
        q = next(k for k in facet if k not in (j, p))
        return -15.0 * lam[j] + 9.0 * lam[i] + 9.0 * lam[p] - 3.0 * lam[q] - 60.0 * diff * lam[p]
    if p == j:
        q = next(k for k in facet if k != j)
        return 5.0 * lam[j] - lam[i] - lam[q] + 6.0 * diff * lam[q]
    return -4.0 * lam[j] + 2.0 * lam[i] + 2.0 * lam[p] - 12.0 * diff * lam[p]


def _facet_raw_fields(cell, i, facet_vertices):
    raw = []
    for j in facet_vertices:
        t = cell.vertices[j] - cell.vertices[i]
        for p in facet_vertices:
            raw.append(facet_profiles(cell.dim, i, j, p).times(np.outer(t, t)))
    return raw


def _facet_tests(cell, facet):
    """The d * d vector test functions lambda_{p_r} n_a, index l = d * a + r."""
    kind = vec_kind(cell.dim)
    return [
        variable(cell.nvar, p).times(facet.frame[a], kind)
        for a in range(cell.dim)
        for p in facet.vertices
    ]


def facet_moment_matrix(cell, i, fields, tests, normal, degree=13):
    """Entries int_F test_l . (field_m normal) over facet i."""
    points, weights = facet_rule(cell, i, degree)
    traction = np.einsum("fqab,b->fqa", to_full(evaluate_fields(fields, points), fields[0].kind), normal)
    test_values = evaluate_fields(tests, points)
    return np.einsum("lqa,mqa,q->lm", test_values, traction, weights)


def nc_stress_basis(cell: SimplexCell, facet_frames=None, degree=13):
    """
    Facet fields Psi_m (dual to the facet tests) followed by the interior bubbles.

    Parameters:
    cell (SimplexCell): tetrahedron or triangle.
    facet_frames (list[FacetFrame]): shared frame and normal per facet; defaults to the cell's own.

    Returns:
    tuple: (fields, meta)
    """
    _check_simplex(cell)
    facet_frames = own_facet_frames(cell) if facet_frames is None else facet_frames
    if len(facet_frames) != cell.nvar:
        raise ValueError(f"expected {cell.nvar} facet frames, got {len(facet_frames)}")

    fields, meta = [], []
    for i, facet in enumerate(facet_frames):
        if sorted(facet.vertices) != [k for k in range(cell.nvar) if k != i]:
            raise ValueError(f"frame of facet {i} lists vertices {facet.vertices}")
        if abs(np.linalg.det(facet.frame)) < 1e-14:
            raise ValueError(f"singular frame on facet {i}")
        raw = _facet_raw_fields(cell, i, facet.vertices)
        moments = facet_moment_matrix(cell, i, raw, _facet_tests(cell, facet), facet.normal, degree)
        coefficients = scipy.linalg.inv(moments)
        for m in range(len(raw)):
            psi = zero(cell.nvar, raw[0].kind)
            for l, phi in enumerate(raw):
                if coefficients[l, m] != 0.0:
                    psi = psi + phi * float(coefficients[l, m])
            fields.append(psi)
            meta.append(ShapeMeta(FACET_ENTITY[cell.dim], i, m))

    for p, bubble in enumerate(simplex_bubbles(cell)):
        fields.append(bubble)
        meta.append(ShapeMeta("interior", 0, p))
    return fields, meta


def simplex_bubbles(cell: SimplexCell):
    """lambda_i lambda_j t_ij t_ij^T for every vertex pair i < j."""
    bubbles = []
    for i, j in combinations(range(cell.nvar), 2):
        t = cell.vertices[j] - cell.vertices[i]
        bubbles.append((variable(cell.nvar, i) * variable(cell.nvar, j)).times(np.outer(t, t)))
    return bubbles


def simplex_disp_basis(cell: SimplexCell):
    """Discontinuous P1 vector fields {1, lambda_1, .., lambda_d} x e_c."""
    _check_simplex(cell)
    kind = vec_kind(cell.dim)
    scalars = [constant(cell.nvar, 1.0)] + [variable(cell.nvar, k) for k in range(1, cell.nvar)]
    fields, meta = [], []
    for c in range(cell.dim):
        unit = np.eye(cell.dim)[c]
        for s in scalars:
            fields.append(s.times(unit, kind))
            meta.append(ShapeMeta("interior", 0, len(meta)))
    return fields, meta


def nc_element(cell: SimplexCell, facet_frames=None, degree=13) -> ElementBasis:
    stress, stress_meta = nc_stress_basis(cell, facet_frames, degree)
    disp, disp_meta = simplex_disp_basis(cell)
    return ElementBasis(ELEMENT_KIND[cell.dim], cell, stress, stress_meta, disp, disp_meta)


def tet_nc_basis(cell: SimplexCell, facet_frames=None, degree=13):
    if cell.dim != 3:
        raise ValueError("tet_nc_basis needs a tetrahedron")
    return nc_stress_basis(cell, facet_frames, degree)


def tri_nc_basis(cell: SimplexCell, facet_frames=None, degree=13):
    if cell.dim != 2:
        raise ValueError("tri_nc_basis needs a triangle")
    return nc_stress_basis(cell, facet_frames, degree)


def nc_bubble_fields(basis: ElementBasis):
    return [f for f, m in zip(basis.stress_fields, basis.stress_meta) if m.entity == "interior"]


def nc_dof_functionals(cell: SimplexCell, degree=13) -> DofFunctionalSet:
    """
    Item "1": int_F tau nu . lambda_p e_c on every facet (outward normal).
    Item "2": int_K tau : b for the interior bubbles b.
    """
    _check_simplex(cell)
    functionals = []
    for i in range(cell.nvar):
        points, weights = facet_rule(cell, i, degree)
        normal = outward_facet_normal(cell, i)
        for p in (k for k in range(cell.nvar) if k != i):
            for c in range(cell.dim):
                w = np.zeros((points.shape[0], cell.dim, cell.dim))
                w[:, c, :] = points[:, p, None] * normal[None, :]
                functionals.append(
                    DofFunctional("1", f"{FACET_ENTITY[cell.dim]}:{i}", points, w * weights[:, None, None])
                )

    points, weights = cell.quadrature(degree)
    for bubble in simplex_bubbles(cell):
        values = to_full(bubble.evaluate(points), bubble.kind)
        functionals.append(DofFunctional("2", "interior", points, values * weights[:, None, None]))
    return DofFunctionalSet(ELEMENT_KIND[cell.dim], functionals)
