"""
Element certificates: unisolvence of the degrees of freedom, ranks of the
bubble divergences, divergence inclusion, rigid-motion reproduction, the
bubble curl identity, direct-sum ranks of the facet profile spaces and trace
compatibility of the glued spaces on the coarsest mesh.
"""
from itertools import combinations
import logging
from typing import Dict, NamedTuple, Tuple

import numpy as np
import scipy.linalg

from ..assembly_submodule.function_space import build_space
from ..mesh_submodule.mesh import PrismMesh, TetMesh, TriMesh2D, build_mesh
from ..poly_submodule.cells import PrismCell, SimplexCell
from ..poly_submodule.poly_field import (
    coefficient_matrix,
    constant,
    curl2d,
    divergence,
    evaluate_fields,
    integrate,
    product,
    to_full,
    variable,
)
from ..poly_submodule.quadrature import quad_rule
from ..utils_module.errors import UnisolvenceError
from ..utils_module.timeit_decorator import timeit
from .element_basis import (
    ElementBasis,
    coordinate_fields,
    equilibrated_singular_values,
    gram_matrix,
    project_onto,
    rigid_motion_basis,
)
from .nonconforming_element import nc_bubble_fields, nc_dof_functionals, nc_element
from .planar_bases import hz2d_basis, hz2d_bubbles
from .prism_element import prism_bubble_fields, prism_dof_functionals, prism_element

REFERENCE_TRIANGLE = np.array([[0.0, 0.0], [1.0, 0.2], [0.3, 0.9]])
REFERENCE_INTERVAL = (0.1, 0.6)
REFERENCE_TETRAHEDRON = np.array([
    [0.0, 0.0, 0.0],
    [1.0, 0.1, 0.0],
    [0.2, 1.0, 0.1],
    [0.1, 0.3, 1.0],
])

UNISOLVENCE_TOL = 1e-8
RANK_TOL = 1e-8
DEFAULT_CHECK_TOL = 1e-10
WITNESS_JUMP = 1e-3
FACET_DEGREE = 8
CERTIFICATE_ELEMENTS = ("prism", "tet", "tri")
BUBBLE_KINDS = ("prism", "hz2d", "tet", "tri")


def _check_kind(kind, allowed=CERTIFICATE_ELEMENTS):
    if kind not in allowed:
        raise ValueError(f"unknown element {kind!r}; expected one of {allowed}")


def reference_element(kind) -> ElementBasis:
    """The element of a kind on a fixed, deliberately irregular cell."""
    _check_kind(kind)
    if kind == "prism":
        return prism_element(PrismCell(REFERENCE_TRIANGLE, *REFERENCE_INTERVAL))
    if kind == "tet":
        return nc_element(SimplexCell(REFERENCE_TETRAHEDRON))
    return nc_element(SimplexCell(REFERENCE_TRIANGLE))


def numerical_rank(matrix, tol=RANK_TOL):
    """Number of singular values above tol times the largest one."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    if matrix.size == 0:
        return 0
    s = scipy.linalg.svdvals(matrix)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))


## unisolvence

class UnisolvenceReport(NamedTuple):
    kind: str
    size: int
    min_singular_value: float
    condition_number: float
    item_counts: Dict[str, int]


def unisolvence_report(kind, tol=UNISOLVENCE_TOL, degree=13) -> UnisolvenceReport:
    """
    Singular values of the (functional x shape field) matrix after row and
    column equilibration.

    Raises:
    UnisolvenceError: the matrix is not square or its smallest singular value is below tol.
    """
    element = reference_element(kind)
    if kind == "prism":
        functionals = prism_dof_functionals(element.cell, degree)
    else:
        functionals = nc_dof_functionals(element.cell, degree)
    matrix = functionals.apply(element.stress_fields)
    if matrix.shape[0] != matrix.shape[1]:
        raise UnisolvenceError(f"{kind}: {matrix.shape[0]} functionals for {matrix.shape[1]} shape fields")
    s = equilibrated_singular_values(matrix)
    smallest = float(s[-1])
    condition = float(s[0] / smallest) if smallest > 0.0 else float("inf")
    if smallest < tol:
        raise UnisolvenceError(f"{kind}: smallest equilibrated singular value {smallest:.3e} below {tol:.1e}")
    return UnisolvenceReport(kind, matrix.shape[0], smallest, condition, functionals.item_counts())


## divergences

class BubbleDivergenceReport(NamedTuple):
    kind: str
    n_bubbles: int
    rank: int
    target: int
    inclusion_residual: float
    rigid_motion_projection: float


def planar_p2_vectors(cell: SimplexCell):
    """The 12 fields of P2(triangle; R^2)."""
    one = constant(3, 1.0)
    l1, l2 = variable(3, 1), variable(3, 2)
    scalars = [one, l1, l2, l1 * l1, l1 * l2, l2 * l2]
    return [s.times(np.eye(2)[c], "vec2") for c in range(2) for s in scalars]


def _bubble_setup(kind):
    if kind == "hz2d":
        cell = SimplexCell(REFERENCE_TRIANGLE)
        return cell, hz2d_bubbles(hz2d_basis(cell)), planar_p2_vectors(cell)
    element = reference_element(kind)
    if kind == "prism":
        return element.cell, prism_bubble_fields(element), element.disp_fields
    return element.cell, nc_bubble_fields(element), element.disp_fields


def _field_norms(cell, fields):
    return np.sqrt(np.clip(np.diag(gram_matrix(cell, fields)), 0.0, None))


def verify_bubble_divergence(kind) -> BubbleDivergenceReport:
    """
    Expand the divergences of the local bubbles in the displacement space and
    measure their rank inside the L2 complement of the rigid motions.

    The target is dim(displacement space) - dim(rigid motions).
    """
    _check_kind(kind, BUBBLE_KINDS)
    cell, bubbles, disp = _bubble_setup(kind)
    divs = [divergence(b, cell) for b in bubbles]
    coefficients, residual = project_onto(cell, disp, divs)
    rigid = rigid_motion_basis(cell)
    rigid_coefficients, _ = project_onto(cell, disp, rigid)

    mass = gram_matrix(cell, disp)
    cross = coefficients @ mass @ rigid_coefficients.T
    rigid_mass = rigid_coefficients @ mass @ rigid_coefficients.T
    complement = coefficients - scipy.linalg.solve(rigid_mass, cross.T, assume_a="pos").T @ rigid_coefficients
    factor = scipy.linalg.cholesky(mass, lower=True)
    rank = numerical_rank(complement @ factor)

    div_norms = _field_norms(cell, divs)
    rigid_norms = _field_norms(cell, rigid)
    pairing = np.abs(gram_matrix(cell, divs, rigid))
    scale = np.outer(np.where(div_norms > 0.0, div_norms, 1.0), rigid_norms)
    projection = float((pairing / scale).max())

    return BubbleDivergenceReport(
        kind, len(bubbles), rank, len(disp) - len(rigid), float(residual.max()), projection
    )


def divergence_inclusion_residual(kind) -> float:
    """Largest relative residual of expanding div tau in the displacement space, over all shape fields."""
    element = reference_element(kind)
    divs = [divergence(f, element.cell) for f in element.stress_fields]
    _, residual = project_onto(element.cell, element.disp_fields, divs)
    return float(residual.max())


def rigid_motion_residual(kind) -> float:
    element = reference_element(kind)
    _, residual = project_onto(element.cell, element.disp_fields, rigid_motion_basis(element.cell))
    return float(residual.max())


## identities and ranks

def bubble_curl_identity(n_triangles=10, seed=0) -> float:
    """
    Largest relative deviation of int curl(b) . (y - yc, -(x - xc)) from -|T|/30
    over random triangles, b the cubic bubble.
    """
    rng = np.random.default_rng(seed)
    bubble = product(*(variable(3, k) for k in range(3)))
    worst = 0.0
    checked = 0
    while checked < n_triangles:
        try:
            cell = SimplexCell(rng.uniform(-1.0, 1.0, size=(3, 2)))
        except ValueError:
            continue
        if cell.volume < 1e-3:
            continue
        curl = curl2d(bubble, cell)
        x, y = coordinate_fields(cell)
        xc, yc = cell.centroid
        integrand = curl.component(0) * (y - constant(3, yc)) - curl.component(1) * (x - constant(3, xc))
        value = float(integrate(integrand, cell)[0])
        expected = -cell.volume / 30.0
        worst = max(worst, abs(value - expected) / abs(expected))
        checked += 1
    return worst


def direct_sum_ranks(dim) -> Dict[Tuple[int, int], Tuple[int, int]]:
    """
    Per vertex pair (i, j): rank of {lambda_k} + {(lambda_i - lambda_j) lambda_l, l != i, j}
    + {lambda_i lambda_j} and the number of fields (7 in 3D, 5 in 2D).
    """
    if dim not in (2, 3):
        raise ValueError(f"dim must be 2 or 3, got {dim}")
    nvar = dim + 1
    lam = [variable(nvar, k) for k in range(nvar)]
    ranks = {}
    for i, j in combinations(range(nvar), 2):
        others = [k for k in range(nvar) if k not in (i, j)]
        fields = lam + [(lam[i] - lam[j]) * lam[k] for k in others] + [lam[i] * lam[j]]
        ranks[(i, j)] = (numerical_rank(coefficient_matrix(fields, nvar)), len(fields))
    return ranks


## trace compatibility

class FacetSample(NamedTuple):
    cells: Tuple[int, int]
    points: np.ndarray
    weights: np.ndarray
    normal: np.ndarray
    facet_bary: np.ndarray


class TraceReport(NamedTuple):
    kind: str
    n_facets: int
    moment_jump: float
    pointwise_jump: float


def _segment_rule(a, b, degree):
    rule = quad_rule("interval", degree)
    s = rule.points[:, 0]
    bary = np.column_stack([1.0 - s, s])
    return bary @ np.vstack([a, b]), rule.weights * np.linalg.norm(b - a), bary


def _triangle_rule(corners, degree):
    rule = quad_rule("triangle", degree)
    edges = corners[1:] - corners[0]
    area = 0.5 * np.sqrt(np.linalg.det(edges @ edges.T))
    return rule.points @ corners, rule.weights * (area / 0.5), rule.points


def interior_facet_samples(mesh, degree=FACET_DEGREE):
    """Quadrature on every interior facet, with the two cells and the global facet normal."""
    samples = []
    if isinstance(mesh, TriMesh2D):
        for e in mesh.interior_edges:
            a, b = mesh.vertices[mesh.edges[e]]
            points, weights, bary = _segment_rule(a, b, degree)
            samples.append(FacetSample(tuple(mesh.edge_cells[e]), points, weights, mesh.edge_normals[e], bary))
    elif isinstance(mesh, TetMesh):
        for f in mesh.interior_faces:
            points, weights, bary = _triangle_rule(mesh.vertices[mesh.faces[f]], degree)
            samples.append(FacetSample(tuple(mesh.face_cells[f]), points, weights, mesh.face_normals[f], bary))
    elif isinstance(mesh, PrismMesh):
        base, axis = mesh.base, mesh.axis
        rule = quad_rule("interval", degree)
        xi, w_xi = rule.points[:, 0], rule.weights
        for c in range(axis.n_cells):
            z0, z1 = axis.cell_bounds(c)
            for e in base.interior_edges:
                a, b = base.vertices[base.edges[e]]
                planar, w_planar, bary = _segment_rule(a, b, degree)
                points = np.column_stack([np.repeat(planar, xi.size, axis=0), np.tile(z0 + (z1 - z0) * xi, len(planar))])
                weights = np.repeat(w_planar, xi.size) * np.tile(w_xi * (z1 - z0), len(planar))
                t0, t1 = base.edge_cells[e]
                normal = np.append(base.edge_normals[e], 0.0)
                samples.append(FacetSample(
                    (mesh.cell_index(t0, c), mesh.cell_index(t1, c)), points, weights, normal,
                    np.repeat(bary, xi.size, axis=0),
                ))
        for node in range(1, axis.n_cells):
            for t in range(base.n_triangles):
                planar, weights, bary = _triangle_rule(base.cell_vertices(t), degree)
                points = np.column_stack([planar, np.full(len(planar), axis.nodes[node])])
                samples.append(FacetSample(
                    (mesh.cell_index(t, node - 1), mesh.cell_index(t, node)), points, weights,
                    np.array([0.0, 0.0, 1.0]), bary,
                ))
    else:
        raise ValueError(f"unsupported mesh type {type(mesh).__name__}")
    return samples


def global_tractions(space, k, sample: FacetSample):
    """Normal traction of every global stress basis field restricted to cell k, shape (n_sigma, Q, d)."""
    element = space.element(k)
    reference = space.cell(k).to_reference(sample.points)
    values = to_full(evaluate_fields(element.stress_fields, reference), element.stress_fields[0].kind)
    traction = values @ sample.normal
    dofs, signs = space.stress_dofs(k)
    out = np.zeros((space.n_sigma,) + traction.shape[1:])
    np.add.at(out, dofs, signs[:, None, None] * traction)
    return out


def trace_compatibility(space, degree=FACET_DEGREE) -> TraceReport:
    """
    Jumps of the global stress basis across interior facets: moments against
    P1 facet fields, and pointwise values, each relative to the largest trace.
    """
    samples = interior_facet_samples(space.mesh, degree)
    jump = np.zeros(2)
    size = np.zeros(2)
    for sample in samples:
        first, second = (global_tractions(space, k, sample) for k in sample.cells)
        moments = [np.einsum("gqa,qp,q->gpa", t, sample.facet_bary, sample.weights) for t in (first, second)]
        jump = np.maximum(jump, (np.abs(moments[0] - moments[1]).max(), np.abs(first - second).max()))
        size = np.maximum(size, (np.abs(moments[0]).max(), np.abs(first).max()))
    relative = np.where(size > 0.0, jump / np.where(size > 0.0, size, 1.0), jump)
    return TraceReport(space.kind, len(samples), float(relative[0]), float(relative[1]))


## certificate

class ElementCertificate:
    """
    Runs every element-level check of one element kind and collects a JSON-ready certificate.
    """

    def __init__(self, run_obj, tol=DEFAULT_CHECK_TOL):
        self.run_obj = run_obj
        self.element = run_obj["element"]
        _check_kind(self.element)
        self.tol = tol
        self.logger = run_obj.get("logger") or logging.getLogger(__name__)

    def _bubble_kinds(self):
        return ("prism", "hz2d") if self.element == "prism" else (self.element,)

    @timeit
    def run_certificate(self) -> dict:
        kind = self.element
        self.logger.info(f"Verifying element {kind} (tol {self.tol:.1e})")
        element = reference_element(kind)
        n_stress, n_disp = element.counts

        unisolvence = unisolvence_report(kind)
        self.logger.info(
            f"Unisolvence {unisolvence.size}x{unisolvence.size}: "
            f"min singular value {unisolvence.min_singular_value:.3e}, condition {unisolvence.condition_number:.3e}"
        )

        bubbles = [verify_bubble_divergence(k) for k in self._bubble_kinds()]
        for report in bubbles:
            self.logger.info(f"Bubble divergence {report.kind}: rank {report.rank} / target {report.target}")

        inclusion = divergence_inclusion_residual(kind)
        rigid = rigid_motion_residual(kind)
        self.logger.info(f"Divergence inclusion residual {inclusion:.3e}, rigid motion residual {rigid:.3e}")

        space = build_space(kind, build_mesh(kind, 1))
        trace = trace_compatibility(space)
        self.logger.info(
            f"Trace compatibility on {trace.n_facets} facets: moments {trace.moment_jump:.3e}, "
            f"pointwise {trace.pointwise_jump:.3e}"
        )

        checks = {
            "unisolvence": unisolvence.min_singular_value > UNISOLVENCE_TOL,
            "bubble_divergence_rank": all(r.rank == r.target for r in bubbles),
            "bubble_divergence_orthogonal": all(r.rigid_motion_projection <= self.tol for r in bubbles),
            "divergence_inclusion": inclusion <= self.tol and all(r.inclusion_residual <= self.tol for r in bubbles),
            "rigid_motion_reproduction": rigid <= self.tol,
            "trace_moments": trace.moment_jump <= self.tol,
        }
        certificate = {
            "element": kind,
            "counts": {"n_stress": n_stress, "n_disp": n_disp, "n_sigma_n1": space.n_sigma, "n_u_n1": space.n_u},
            "unisolvence": {
                "size": unisolvence.size,
                "min_singular_value": unisolvence.min_singular_value,
                "condition_number": unisolvence.condition_number,
                "item_counts": unisolvence.item_counts,
            },
            "bubble_divergence": [r._asdict() for r in bubbles],
            "divergence_inclusion_residual": inclusion,
            "rigid_motion_residual": rigid,
            "trace_compatibility": trace._asdict(),
        }

        if kind == "prism":
            curl_error = bubble_curl_identity()
            certificate["curl_identity_error"] = curl_error
            checks["curl_identity"] = curl_error <= 1e-12
            checks["trace_pointwise"] = trace.pointwise_jump <= self.tol
        else:
            dim = element.cell.dim
            ranks = direct_sum_ranks(dim)
            certificate["direct_sum_ranks"] = {f"{i}-{j}": list(v) for (i, j), v in ranks.items()}
            checks["direct_sum_ranks"] = all(r == n for r, n in ranks.values())
            checks["nonconformity_witness"] = trace.pointwise_jump >= WITNESS_JUMP

        certificate["checks"] = checks
        certificate["passed"] = all(checks.values())
        for name, ok in checks.items():
            if not ok:
                self.logger.error(f"Check {name} failed for element {kind}")
        self.logger.info(f"Element {kind} certificate {'passed' if certificate['passed'] else 'FAILED'}")
        return certificate
