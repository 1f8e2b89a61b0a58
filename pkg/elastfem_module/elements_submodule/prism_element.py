"""
Conforming triangular prism element (lowest order): 108 stress and 33
displacement shape fields, and the 108 degrees of freedom that determine a
stress field on one prism.

Stress fields are grouped in three blocks:
  tau1: planar Hu-Zhang field x {1 - xi, xi}, upper-left 2x2 block
  tau2: planar BDM field x {bottom, top, bubble} quadratics, (1:2, 3) column
  tau3: lambda_i x four cubics in xi, entry (3, 3)
Axial factors that are nonzero at an end of the interval take the value 1 there.
"""
from typing import NamedTuple

import numpy as np

from ..poly_submodule.cells import PrismCell
from ..poly_submodule.poly_field import (
    constant,
    curl2d,
    embed_block,
    extend_variables,
    product,
    to_full,
    variable,
)
from ..poly_submodule.quadrature import quad_rule
from .element_basis import DofFunctional, DofFunctionalSet, ElementBasis, ShapeMeta
from .planar_bases import bdm2_basis, edge_points, hz2d_basis, hz2d_bubbles, outward_edge_normals

N_TAU1 = 60
N_TAU2 = 36
N_TAU3 = 12
N_PRISM_STRESS = N_TAU1 + N_TAU2 + N_TAU3
N_PRISM_DISP = 33

AXIAL_BOTTOM, AXIAL_TOP = 0, 1


class PrismSlot(NamedTuple):
    block: int
    planar: int
    axial: int


def prism_slots():
    """(block, planar index, axial index) of every stress shape field, in basis order."""
    slots = [PrismSlot(1, i, zl) for i in range(30) for zl in range(2)]
    slots += [PrismSlot(2, i, zf) for i in range(12) for zf in range(3)]
    slots += [PrismSlot(3, i, zf) for i in range(3) for zf in range(4)]
    return slots


def _axial():
    xi = variable(4, 3)
    one = constant(4, 1.0)
    tau1 = (one - xi, xi)
    tau2 = (
        (one - xi) * (one - 2.0 * xi),
        xi * (2.0 * xi - one),
        xi * (one - xi),
    )
    cubic = (3.0 * xi - one) * (3.0 * xi - 2.0 * one)
    tau3 = (
        0.5 * (one - xi) * cubic,
        0.5 * xi * cubic,
        product(xi, one - xi, 2.0 * one - 3.0 * xi),
        product(xi, one - xi, 3.0 * xi - one),
    )
    return tau1, tau2, tau3


def _lift(planar_field):
    return extend_variables(planar_field, 4, (0, 1, 2))


def _check_prism(cell):
    if not isinstance(cell, PrismCell):
        raise ValueError(f"expected a PrismCell, got {type(cell).__name__}")


def _tau1_meta(planar_meta, zl):
    if planar_meta.entity == "vertex":
        return ShapeMeta("vertex", planar_meta.entity_id + 3 * zl, planar_meta.component)
    if planar_meta.entity == "edge":
        return ShapeMeta("face", planar_meta.entity_id, 2 * planar_meta.component + zl)
    return ShapeMeta("interior", 0, 2 * planar_meta.component + zl)


def _tau2_meta(planar_meta, zf):
    if zf < 2:
        if planar_meta.entity == "edge":
            return ShapeMeta("edge", planar_meta.entity_id + 3 * zf, planar_meta.component)
        return ShapeMeta("face", 3 + zf, planar_meta.component)
    if planar_meta.entity == "edge":
        return ShapeMeta("face", planar_meta.entity_id, 4 + planar_meta.component)
    return ShapeMeta("interior", 0, 18 + planar_meta.component)


def prism_stress_basis(cell: PrismCell, global_ids=None):
    """
    Parameters:
    cell (PrismCell): the prism.
    global_ids (sequence of int): global ids of the base triangle vertices; they fix
        the edge frames shared with neighbouring prisms.

    Returns:
    tuple: (108 sym3 PolyFields, 108 ShapeMeta)
    """
    _check_prism(cell)
    hz = hz2d_basis(cell.base, global_ids)
    bdm = bdm2_basis(cell.base, global_ids)
    tau1_z, tau2_z, tau3_z = _axial()

    fields, meta = [], []
    for field, m in zip(hz.fields, hz.meta):
        lifted = _lift(field)
        for zl, factor in enumerate(tau1_z):
            fields.append(embed_block(factor * lifted))
            meta.append(_tau1_meta(m, zl))
    for field, m in zip(bdm.fields, bdm.meta):
        lifted = _lift(field)
        for zf, factor in enumerate(tau2_z):
            fields.append(embed_block(factor * lifted))
            meta.append(_tau2_meta(m, zf))
    for i in range(3):
        lam = variable(4, i)
        for zf, factor in enumerate(tau3_z):
            fields.append(embed_block(lam * factor))
            if zf < 2:
                meta.append(ShapeMeta("face", 3 + zf, i))
            else:
                meta.append(ShapeMeta("interior", 0, 21 + 2 * i + zf - 2))
    return fields, meta


def prism_disp_basis(cell: PrismCell):
    """
    33 monomial displacement fields: v1, v2 in P2(x, y) x P1(z), v3 in P1(x, y) x P2(z).
    """
    _check_prism(cell)
    one = constant(4, 1.0)
    l1, l2, xi = variable(4, 1), variable(4, 2), variable(4, 3)
    quadratic = [one, l1, l2, l1 * l1, l1 * l2, l2 * l2]
    linear = [one, l1, l2]

    fields, meta = [], []
    for c in range(2):
        unit = np.eye(3)[c]
        for planar in quadratic:
            for axial in (one, xi):
                fields.append((planar * axial).times(unit, "vec3"))
                meta.append(ShapeMeta("interior", 0, len(meta)))
    for planar in linear:
        for axial in (one, xi, xi * xi):
            fields.append((planar * axial).times(np.eye(3)[2], "vec3"))
            meta.append(ShapeMeta("interior", 0, len(meta)))
    return fields, meta


def prism_element(cell: PrismCell, global_ids=None) -> ElementBasis:
    stress, stress_meta = prism_stress_basis(cell, global_ids)
    disp, disp_meta = prism_disp_basis(cell)
    return ElementBasis("prism", cell, stress, stress_meta, disp, disp_meta)


def prism_bubble_fields(basis: ElementBasis):
    """Stress fields with vanishing normal trace on the whole prism boundary."""
    return [f for f, m in zip(basis.stress_fields, basis.stress_meta) if m.entity == "interior"]


## degrees of freedom

def _unit(a, b):
    w = np.zeros((3, 3))
    w[a, b] = 1.0
    return w


def _column_weight(vector_values):
    """Weights selecting tau2 . g for planar vectors g, shape (Q, 3, 3)."""
    vector_values = np.atleast_2d(vector_values)
    w = np.zeros((vector_values.shape[0], 3, 3))
    w[:, 0, 2] = vector_values[:, 0]
    w[:, 1, 2] = vector_values[:, 1]
    return w


def _side_face_rule(cell, m, degree):
    rule = quad_rule("interval", degree)
    s, ws = rule.points[:, 0], rule.weights
    bary = edge_points(m, s)
    n_s = s.size
    xi = np.tile(s, n_s)
    points = np.column_stack([np.repeat(bary, n_s, axis=0), xi])
    length = np.linalg.norm(cell.base.vertices[(m + 2) % 3] - cell.base.vertices[(m + 1) % 3])
    weights = np.repeat(ws, n_s) * np.tile(ws, n_s) * length * cell.h0
    return points, weights, np.repeat(s, n_s), xi


def _horizontal_edge_rule(cell, m, xi0, degree):
    rule = quad_rule("interval", degree)
    s = rule.points[:, 0]
    points = np.column_stack([edge_points(m, s), np.full(s.size, float(xi0))])
    length = np.linalg.norm(cell.base.vertices[(m + 2) % 3] - cell.base.vertices[(m + 1) % 3])
    return points, rule.weights * length, s


def _horizontal_face_rule(cell, xi0, degree):
    rule = quad_rule("triangle", degree)
    points = np.column_stack([rule.points, np.full(rule.n_points, float(xi0))])
    return points, rule.weights * (cell.base.volume / 0.5)


def _moment(item, entity, points, weights, field_values):
    return DofFunctional(item, entity, points, field_values * weights[:, None, None])


def prism_dof_functionals(cell: PrismCell, degree=13) -> DofFunctionalSet:
    """
    The 108 conditions that determine a stress field on a prism, tagged "1" .. "11":
      1  tau1 at both ends of each vertical edge (3 components)
      2  side-face moments of tau1 nu against Q11 vectors
      3  moments of tau1 against planar bubbles x P1(z)
      4  horizontal-edge flux moments of tau2 against P2
      5  side-face flux moments of tau2 against Q20
      6  horizontal-face moments of tau2 against grad P1
      7  horizontal-face moments of tau2 against curl of the cubic bubble
      8  volume moments of tau2 against grad P1
      9  volume moment of tau2 against curl of the cubic bubble
      10 horizontal-face moments of tau3 against P1
      11 volume moments of tau3 against P1(x, y) x P1(z)
    """
    _check_prism(cell)
    base = cell.base
    normals = outward_edge_normals(base)
    functionals = []

    for i in range(3):
        for zl in range(2):
            point = np.zeros((1, 4))
            point[0, i] = 1.0
            point[0, 3] = float(zl)
            for a, b in ((0, 0), (0, 1), (1, 1)):
                functionals.append(DofFunctional("1", f"vertical_edge:{i}", point, _unit(a, b)[None]))

    for m in range(3):
        points, weights, s, xi = _side_face_rule(cell, m, degree)
        for p in ((1 - s) * (1 - xi), s * (1 - xi), (1 - s) * xi, s * xi):
            for c in range(2):
                w = np.zeros((points.shape[0], 3, 3))
                w[:, c, :2] = np.outer(p, normals[m])
                functionals.append(_moment("2", f"side_face:{m}", points, weights, w))

    points, weights = cell.quadrature(degree)
    tau1_z, _, _ = _axial()
    for bubble in hz2d_bubbles(hz2d_basis(base)):
        for factor in tau1_z:
            values = to_full(embed_block(factor * _lift(bubble)).evaluate(points), "sym3")
            functionals.append(_moment("3", "interior", points, weights, values))

    for zl in range(2):
        for m in range(3):
            epoints, eweights, s = _horizontal_edge_rule(cell, m, zl, degree)
            for p in ((1 - s) ** 2, s * (1 - s), s ** 2):
                w = _column_weight(np.outer(p, normals[m]))
                functionals.append(_moment("4", f"horizontal_edge:{m + 3 * zl}", epoints, eweights, w))

    for m in range(3):
        fpoints, fweights, s, _ = _side_face_rule(cell, m, degree)
        for p in ((1 - s) ** 2, s * (1 - s), s ** 2):
            w = _column_weight(np.outer(p, normals[m]))
            functionals.append(_moment("5", f"side_face:{m}", fpoints, fweights, w))

    bubble_curl = curl2d(product(*(variable(3, k) for k in range(3))), base)
    for zl in range(2):
        hpoints, hweights = _horizontal_face_rule(cell, zl, degree)
        for c in range(2):
            w = _column_weight(np.tile(np.eye(2)[c], (hpoints.shape[0], 1)))
            functionals.append(_moment("6", f"horizontal_face:{zl}", hpoints, hweights, w))
    for zl in range(2):
        hpoints, hweights = _horizontal_face_rule(cell, zl, degree)
        w = _column_weight(bubble_curl.evaluate(hpoints[:, :3]))
        functionals.append(_moment("7", f"horizontal_face:{zl}", hpoints, hweights, w))

    for c in range(2):
        w = _column_weight(np.tile(np.eye(2)[c], (points.shape[0], 1)))
        functionals.append(_moment("8", "interior", points, weights, w))
    w = _column_weight(bubble_curl.evaluate(points[:, :3]))
    functionals.append(_moment("9", "interior", points, weights, w))

    for zl in range(2):
        hpoints, hweights = _horizontal_face_rule(cell, zl, degree)
        for i in range(3):
            w = np.zeros((hpoints.shape[0], 3, 3))
            w[:, 2, 2] = hpoints[:, i]
            functionals.append(_moment("10", f"horizontal_face:{zl}", hpoints, hweights, w))

    for i in range(3):
        for axial in (1.0 - points[:, 3], points[:, 3]):
            w = np.zeros((points.shape[0], 3, 3))
            w[:, 2, 2] = points[:, i] * axial
            functionals.append(_moment("11", "interior", points, weights, w))

    return DofFunctionalSet("prism", functionals)
