from dataclasses import dataclass

import numpy as np

from ..poly_submodule.cells import CartesianCell
from ..poly_submodule.poly_field import (
    PolyField,
    constant,
    divergence,
    product,
    sym_kind,
    symmetric_gradient,
    variable,
    vec_kind,
)
from ..utils_module.config import Material

DISPLACEMENT_SCALES = {3: (16.0, 32.0, 64.0), 2: (16.0, 32.0)}


@dataclass(frozen=True, eq=False)
class ManufacturedCase:
    """Exact displacement, stress and load as Cartesian PolyFields."""
    u: PolyField
    sigma: PolyField
    f: PolyField
    material: Material
    cell: CartesianCell

    @property
    def dim(self):
        return self.cell.dim

    def strain(self):
        return symmetric_gradient(self.u, self.cell)


def stress_from_strain(strain: PolyField, material: Material) -> PolyField:
    """sigma = 2 mu eps + lambda tr(eps) I."""
    dim = material.dim
    kind = sym_kind(dim)
    trace = strain.component(0)
    for a in range(1, dim):
        trace = trace + strain.component(a)
    return strain * (2.0 * material.mu) + trace.times(material.lam * np.eye(dim), kind)


def apply_compliance(sigma: PolyField, material: Material) -> PolyField:
    """A sigma = (sigma - c tr(sigma) I) / (2 mu)."""
    dim = material.dim
    a, c = material.compliance_coefficients()
    trace = sigma.component(0)
    for b in range(1, dim):
        trace = trace + sigma.component(b)
    return (sigma - trace.times(c * np.eye(dim), sym_kind(dim))) * a


def manufactured_case(dim=3, material=None) -> ManufacturedCase:
    """
    u = (16, 32, 64) x(1-x) y(1-y) z(1-z) in 3D, (16, 32) x(1-x) y(1-y) in 2D,
    sigma = 2 mu eps(u) + lambda tr(eps(u)) I and f = div sigma.
    """
    if dim not in DISPLACEMENT_SCALES:
        raise ValueError(f"dim must be 2 or 3, got {dim}")
    material = material or Material(dim=dim)
    if material.dim != dim:
        raise ValueError(f"material is {material.dim}D, case is {dim}D")
    cell = CartesianCell(dim)
    one = constant(dim, 1.0)
    bubble = product(*(variable(dim, a) * (one - variable(dim, a)) for a in range(dim)))
    u = bubble.times(np.array(DISPLACEMENT_SCALES[dim]), vec_kind(dim))
    sigma = stress_from_strain(symmetric_gradient(u, cell), material)
    f = divergence(sigma, cell)
    return ManufacturedCase(u=u, sigma=sigma, f=f, material=material, cell=cell)
