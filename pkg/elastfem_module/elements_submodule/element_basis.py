from collections import Counter
from dataclasses import dataclass, field
from typing import List, NamedTuple

import numpy as np
import scipy.linalg

from ..poly_submodule.cells import CartesianCell, PrismCell, SimplexCell
from ..poly_submodule.poly_field import (
    FROBENIUS_WEIGHTS,
    PolyField,
    constant,
    evaluate_fields,
    to_full,
    variable,
    vec_kind,
    zero,
)


class ShapeMeta(NamedTuple):
    entity: str
    entity_id: int
    component: int


@dataclass(frozen=True, eq=False)
class ElementBasis:
    kind: str
    cell: object
    stress_fields: List[PolyField]
    stress_meta: List[ShapeMeta]
    disp_fields: List[PolyField] = field(default_factory=list)
    disp_meta: List[ShapeMeta] = field(default_factory=list)

    def __post_init__(self):
        if len(self.stress_fields) != len(self.stress_meta):
            raise ValueError("every stress shape field needs one metadata entry")
        if len(self.disp_fields) != len(self.disp_meta):
            raise ValueError("every displacement shape field needs one metadata entry")

    @property
    def counts(self):
        return len(self.stress_fields), len(self.disp_fields)


@dataclass(frozen=True, eq=False)
class DofFunctional:
    """
    Linear functional tau -> sum_q weights[q] : tau(points[q]) on a cell.

    weights carry the quadrature weights, the physical measure and the test function.
    """
    item: str
    entity: str
    points: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True, eq=False)
class DofFunctionalSet:
    kind: str
    functionals: List[DofFunctional]

    def __len__(self):
        return len(self.functionals)

    def item_counts(self):
        return dict(Counter(f.item for f in self.functionals))

    def apply(self, fields):
        return apply_functionals(self.functionals, fields)


def apply_functionals(functionals, fields):
    """Matrix with entry (i, j) = functional i applied to field j."""
    if not fields:
        return np.zeros((len(functionals), 0))
    kind = fields[0].kind
    matrix = np.zeros((len(functionals), len(fields)))
    for i, functional in enumerate(functionals):
        values = to_full(evaluate_fields(fields, functional.points), kind)
        matrix[i] = np.einsum("fqab,qab->f", values, functional.weights)
    return matrix


def equilibrated_singular_values(matrix):
    """Singular values after scaling rows, then columns, to unit max-norm."""
    scaled = np.array(matrix, dtype=float)
    row = np.abs(scaled).max(axis=1)
    row[row == 0.0] = 1.0
    scaled /= row[:, None]
    col = np.abs(scaled).max(axis=0)
    col[col == 0.0] = 1.0
    scaled /= col[None, :]
    return scipy.linalg.svdvals(scaled)


def coordinate_fields(cell):
    """Physical coordinates x_a as PolyFields in the cell's reference variables."""
    if isinstance(cell, CartesianCell):
        return [variable(cell.nvar, a) for a in range(cell.dim)]
    if isinstance(cell, SimplexCell):
        exponents = np.eye(cell.nvar, dtype=np.int64)
        return [PolyField(exponents, cell.vertices[:, a].reshape(-1, 1)) for a in range(cell.dim)]
    if isinstance(cell, PrismCell):
        exponents = np.zeros((3, 4), dtype=np.int64)
        exponents[:, :3] = np.eye(3, dtype=np.int64)
        planar = [PolyField(exponents, cell.base.vertices[:, a].reshape(-1, 1)) for a in range(2)]
        z = constant(4, cell.z0) + variable(4, 3) * cell.h0
        return planar + [z]
    raise ValueError(f"unsupported cell type {type(cell).__name__}")


def _vector(components, kind):
    nvar = next(c for c in components if c is not None).nvar
    result = zero(nvar, kind)
    for a, comp in enumerate(components):
        if comp is None:
            continue
        unit = np.zeros(len(components))
        unit[a] = 1.0
        result = result + comp.times(unit, kind)
    return result


def rigid_motion_basis(cell):
    """
    Translations and infinitesimal rotations: 6 fields in 3D, 3 in 2D.
    """
    coords = coordinate_fields(cell)
    kind = vec_kind(cell.dim)
    translations = [constant(cell.nvar, np.eye(cell.dim)[a], kind) for a in range(cell.dim)]
    if cell.dim == 2:
        x, y = coords
        return translations + [_vector([-y, x], kind)]
    x, y, z = coords
    rotations = [
        _vector([y, -x, None], kind),
        _vector([z, None, -x], kind),
        _vector([None, z, -y], kind),
    ]
    return translations + rotations


def gram_matrix(cell, fields_a, fields_b=None, degree=13):
    """L2 (Frobenius for matrices) inner products of two field lists on a cell."""
    fields_b = fields_a if fields_b is None else fields_b
    points, weights = cell.quadrature(degree)
    va = evaluate_fields(fields_a, points)
    vb = evaluate_fields(fields_b, points)
    metric = FROBENIUS_WEIGHTS[fields_a[0].kind]
    return np.einsum("ipc,jpc,p,c->ij", va, vb, weights, metric)


def project_onto(cell, basis_fields, targets, degree=13):
    """
    L2 projection of target fields onto span(basis_fields).

    Returns:
    tuple: coefficients (n_targets, n_basis) and relative residual norms (n_targets,).
    """
    mass = gram_matrix(cell, basis_fields, degree=degree)
    rhs = gram_matrix(cell, basis_fields, targets, degree=degree)
    coefficients = scipy.linalg.solve(mass, rhs, assume_a="pos").T

    points, weights = cell.quadrature(degree)
    basis_values = evaluate_fields(basis_fields, points)
    target_values = evaluate_fields(targets, points)
    approx = np.einsum("tb,bpc->tpc", coefficients, basis_values)
    metric = FROBENIUS_WEIGHTS[targets[0].kind]
    err = np.sqrt(np.einsum("tpc,p,c->t", (target_values - approx) ** 2, weights, metric))
    norm = np.sqrt(np.einsum("tpc,p,c->t", target_values ** 2, weights, metric))
    relative = np.where(norm > 0.0, err / np.where(norm > 0.0, norm, 1.0), err)
    return coefficients, relative
