"""
L2 errors of a discrete solution against a manufactured case, L2 projection
of an exact stress onto a space, and the consistency functional used for the
Galerkin orthogonality check.
"""
import logging
from typing import NamedTuple

import numpy as np
import scipy.sparse.linalg as spla

from ..assembly_submodule.saddle_assembly import (
    DEFAULT_QUAD_DEGREE,
    LocalKernels,
    scatter_local_blocks,
    stress_trace,
)
from ..poly_submodule.poly_field import FROBENIUS_WEIGHTS, sym_kind
from ..utils_module.config import Material
from ..utils_module.timeit_decorator import timeit


class ErrorNorms(NamedTuple):
    sigma: float
    u: float
    div: float


def local_coefficients(space, coefficients, k):
    dofs, signs = space.stress_dofs(k)
    return coefficients[dofs] * signs


@timeit
def error_norms(space, solution, case, degree=DEFAULT_QUAD_DEGREE, logger=None) -> ErrorNorms:
    """
    (||sigma - sigma_h||, ||u - u_h||, ||div_h (sigma - sigma_h)||) with the
    cell-wise divergence.
    """
    logger = logger or logging.getLogger(__name__)
    kernels = LocalKernels(space, case.material, degree)
    metric = FROBENIUS_WEIGHTS[sym_kind(space.dim)]
    sums = np.zeros(3)
    for k in range(space.n_cells):
        kernel = kernels(k)
        physical = space.cell(k).to_physical(kernel.points)
        c_sigma = local_coefficients(space, solution.sigma, k)
        c_u = solution.u[space.disp_dofs(k)]

        sigma_h = np.einsum("f,fqc->qc", c_sigma, kernel.stress_values)
        div_h = np.einsum("f,fqa->qa", c_sigma, kernel.div_values)
        u_h = np.einsum("g,gqa->qa", c_u, kernel.disp_values)

        e_sigma = case.sigma.evaluate(physical) - sigma_h
        e_div = case.f.evaluate(physical) - div_h
        e_u = case.u.evaluate(physical) - u_h
        w = kernel.weights
        sums += (
            np.einsum("qc,q,c->", e_sigma ** 2, w, metric),
            np.einsum("qa,q->", e_u ** 2, w),
            np.einsum("qa,q->", e_div ** 2, w),
        )
    norms = ErrorNorms(*np.sqrt(sums).tolist())
    logger.info(f"Errors: sigma={norms.sigma:.8f}, u={norms.u:.8f}, div={norms.div:.8f}")
    return norms


def stress_moments(space, sigma_field, degree=DEFAULT_QUAD_DEGREE, material=None):
    """Global vector of (sigma, tau_i) for an exact stress given as a Cartesian PolyField."""
    kernels = LocalKernels(space, material or _material_for(space), degree)
    metric = FROBENIUS_WEIGHTS[sym_kind(space.dim)]
    moments = np.zeros(space.n_sigma)
    for k in range(space.n_cells):
        kernel = kernels(k)
        values = sigma_field.evaluate(space.cell(k).to_physical(kernel.points))
        dofs, signs = space.stress_dofs(k)
        local = np.einsum("fqc,qc,q,c->f", kernel.stress_values, values, kernel.weights, metric)
        np.add.at(moments, dofs, signs * local)
    return moments


def _material_for(space):
    return Material(dim=space.dim)


def stress_mass_matrix(space, degree=DEFAULT_QUAD_DEGREE, material=None):
    kernels = LocalKernels(space, material or _material_for(space), degree)
    cells = list(range(space.n_cells))
    return scatter_local_blocks(space, [kernels(k) for k in cells], "stress_mass", cells, (space.n_sigma, space.n_sigma))


def project_stress(space, sigma_field, degree=DEFAULT_QUAD_DEGREE):
    """Coefficients of the L2 projection of an exact stress onto the discrete stress space."""
    mass = stress_mass_matrix(space, degree)
    rhs = stress_moments(space, sigma_field, degree)
    return spla.splu(mass.tocsc()).solve(rhs)


def consistency_functional(space, case, degree=DEFAULT_QUAD_DEGREE):
    """
    l_i = (A sigma, tau_i) + (div tau_i, u) for the exact (sigma, u).

    It vanishes on an H(div)-conforming space when u = 0 on the boundary, which
    is Galerkin orthogonality of the discrete solution.
    """
    kernels = LocalKernels(space, case.material, degree)
    metric = FROBENIUS_WEIGHTS[sym_kind(space.dim)]
    a, c = case.material.compliance_coefficients()
    values = np.zeros(space.n_sigma)
    for k in range(space.n_cells):
        kernel = kernels(k)
        physical = space.cell(k).to_physical(kernel.points)
        sigma = case.sigma.evaluate(physical)
        u = case.u.evaluate(physical)
        w = kernel.weights
        trace = stress_trace(sigma, space.dim)
        tau_trace = stress_trace(kernel.stress_values, space.dim)
        compliance = a * (
            np.einsum("fqc,qc,q,c->f", kernel.stress_values, sigma, w, metric)
            - c * np.einsum("fq,q,q->f", tau_trace, trace, w)
        )
        coupling = np.einsum("fqa,qa,q->f", kernel.div_values, u, w)
        dofs, signs = space.stress_dofs(k)
        np.add.at(values, dofs, signs * (compliance + coupling))
    return values
