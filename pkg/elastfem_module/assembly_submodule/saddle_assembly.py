"""
Assembly of the mixed elasticity system

    [ A  B^T ] [sigma]   [0]
    [ B   0  ] [  u  ] = [F]

with A_ij = (A sigma_j, sigma_i), B_ij = (div sigma_j, v_i), F_i = (f, v_i).
Divergences are taken cell by cell, which is the broken divergence for the
nonconforming spaces.
"""
from dataclasses import dataclass
import logging
import threading
from typing import NamedTuple, Optional

import numpy as np
import scipy.io
import scipy.sparse as sp

from ..multi_thread_cells import run_cells_multi_thread
from ..poly_submodule.poly_field import FROBENIUS_WEIGHTS, PolyField, divergence, evaluate_fields
from ..utils_module.config import Material
from ..utils_module.timeit_decorator import timeit

DEFAULT_QUAD_DEGREE = 13
SCATTER_CHUNK = 256


class LocalKernel(NamedTuple):
    points: np.ndarray
    weights: np.ndarray
    stress_values: np.ndarray
    div_values: np.ndarray
    disp_values: np.ndarray
    stress_mass: np.ndarray
    compliance: np.ndarray
    div_div: np.ndarray
    coupling: np.ndarray
    disp_mass: np.ndarray


def stress_trace(values, dim):
    """Trace of stored symmetric components (..., ncomp) -> (...)."""
    return values[..., :dim].sum(axis=-1)


def compute_local_kernel(cell, element, material: Material, degree=DEFAULT_QUAD_DEGREE) -> LocalKernel:
    stress = element.stress_fields
    kind = stress[0].kind
    dim = cell.dim
    points, weights = cell.quadrature(degree)

    sigma = evaluate_fields(stress, points)
    div = evaluate_fields([divergence(f, cell) for f in stress], points)
    disp = evaluate_fields(element.disp_fields, points)

    metric = FROBENIUS_WEIGHTS[kind]
    stress_mass = np.einsum("iqc,jqc,q,c->ij", sigma, sigma, weights, metric)
    trace = stress_trace(sigma, dim)
    a, c = material.compliance_coefficients()
    compliance = a * (stress_mass - c * np.einsum("iq,jq,q->ij", trace, trace, weights))
    div_div = np.einsum("iqa,jqa,q->ij", div, div, weights)
    coupling = np.einsum("gqa,fqa,q->gf", disp, div, weights)
    disp_mass = np.einsum("gqa,hqa,q->gh", disp, disp, weights)
    return LocalKernel(points, weights, sigma, div, disp, stress_mass, compliance, div_div, coupling, disp_mass)


class LocalKernels:
    """Per-signature cache of local kernels of a space."""

    def __init__(self, space, material: Material, degree=DEFAULT_QUAD_DEGREE):
        if material.dim != space.dim:
            raise ValueError(f"material is {material.dim}D but the space is {space.dim}D")
        self.space = space
        self.material = material
        self.degree = degree
        self._cache = {}
        self._lock = threading.Lock()

    def __call__(self, k) -> LocalKernel:
        key = self.space.signature(k)
        kernel = self._cache.get(key)
        if kernel is None:
            kernel = compute_local_kernel(self.space.cell(k), self.space.element(k), self.material, self.degree)
            with self._lock:
                self._cache.setdefault(key, kernel)
        return kernel

    @property
    def n_signatures(self):
        return len(self._cache)


@dataclass(eq=False)
class SaddleSystem:
    A: sp.csr_matrix
    B: sp.csr_matrix
    load: np.ndarray
    space: object
    material: Material
    stress_gram: Optional[sp.csr_matrix] = None
    disp_mass: Optional[sp.csr_matrix] = None

    @property
    def n_sigma(self):
        return self.A.shape[0]

    @property
    def n_u(self):
        return self.B.shape[0]

    def block_matrix(self):
        return sp.bmat([[self.A, self.B.T], [self.B, None]], format="csc")

    def rhs(self):
        return np.concatenate([np.zeros(self.n_sigma), self.load])

    def with_load(self, load):
        load = np.asarray(load, dtype=float)
        if load.shape != (self.n_u,):
            raise ValueError(f"load must have length {self.n_u}, got {load.shape}")
        return SaddleSystem(self.A, self.B, load, self.space, self.material, self.stress_gram, self.disp_mass)


def scatter_local_blocks(space, kernels, block, cells, shape):
    """Sum signed local blocks into a CSR matrix, in fixed cell order, chunk by chunk."""
    total = sp.csr_matrix(shape)
    for start in range(0, len(cells), SCATTER_CHUNK):
        rows, cols, vals = [], [], []
        for k in cells[start:start + SCATTER_CHUNK]:
            local = getattr(kernels[k], block)
            dofs, signs = space.stress_dofs(k)
            disp = space.disp_dofs(k)
            if block in ("compliance", "stress_mass", "div_div"):
                r, c = dofs, dofs
                local = local * np.outer(signs, signs)
            elif block == "coupling":
                r, c = disp, dofs
                local = local * signs[None, :]
            else:
                r, c = disp, disp
            rows.append(np.repeat(r, c.size))
            cols.append(np.tile(c, r.size))
            vals.append(local.ravel())
        chunk = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=shape
        ).tocsr()
        total = total + chunk
    total.sum_duplicates()
    return total


def local_kernels(space, material, degree=DEFAULT_QUAD_DEGREE, num_workers=1, progress=False):
    """Kernels of every cell in cell order (one computation per signature)."""
    cache = LocalKernels(space, material, degree)
    return run_cells_multi_thread(cache, range(space.n_cells), num_workers, progress, desc="local kernels")


@timeit
def assemble(space, material: Material, degree=DEFAULT_QUAD_DEGREE, num_workers=1, progress=False,
             with_norms=False, logger=None) -> SaddleSystem:
    """
    Assemble A and B (and optionally the H(div) stress Gram matrix and the
    displacement mass matrix) of a space; the load is zero until assemble_load.
    """
    logger = logger or logging.getLogger(__name__)
    kernels = local_kernels(space, material, degree, num_workers, progress)
    cells = list(range(space.n_cells))
    n_s, n_u = space.n_sigma, space.n_u

    A = scatter_local_blocks(space, kernels, "compliance", cells, (n_s, n_s))
    B = scatter_local_blocks(space, kernels, "coupling", cells, (n_u, n_s))
    system = SaddleSystem(A, B, np.zeros(n_u), space, material)
    if with_norms:
        mass = scatter_local_blocks(space, kernels, "stress_mass", cells, (n_s, n_s))
        div_div = scatter_local_blocks(space, kernels, "div_div", cells, (n_s, n_s))
        system.stress_gram = (mass + div_div).tocsr()
        system.disp_mass = scatter_local_blocks(space, kernels, "disp_mass", cells, (n_u, n_u))
    logger.info(f"Assembled {space.kind} system: n_sigma={n_s}, n_u={n_u}, nnz(A)={A.nnz}, nnz(B)={B.nnz}")
    return system


def evaluate_source(source, physical_points):
    """Values (Q, d) of a load given as a Cartesian PolyField or a callable of (Q, d) points."""
    if isinstance(source, PolyField):
        return source.evaluate(physical_points)
    values = np.asarray(source(physical_points), dtype=float)
    if values.shape != physical_points.shape:
        raise ValueError(f"load callable returned shape {values.shape}, expected {physical_points.shape}")
    return values


@timeit
def assemble_load(space, source, degree=DEFAULT_QUAD_DEGREE, material=None):
    """Entries (f, v_i) for every displacement degree of freedom."""
    material = material or Material(dim=space.dim)
    kernels = LocalKernels(space, material, degree)
    load = np.zeros(space.n_u)
    for k in range(space.n_cells):
        kernel = kernels(k)
        values = evaluate_source(source, space.cell(k).to_physical(kernel.points))
        load[space.disp_dofs(k)] += np.einsum("gqa,qa,q->g", kernel.disp_values, values, kernel.weights)
    return load


def assemble_system(space, material: Material, source=None, degree=DEFAULT_QUAD_DEGREE, num_workers=1,
                    progress=False, with_norms=False, logger=None) -> SaddleSystem:
    system = assemble(space, material, degree, num_workers, progress, with_norms, logger)
    if source is not None:
        system = system.with_load(assemble_load(space, source, degree, material))
    return system


def dump_system(system: SaddleSystem, path: str):
    """Write <path>_A.mtx, <path>_B.mtx (Matrix Market) and <path>_load.txt."""
    scipy.io.mmwrite(f"{path}_A.mtx", system.A)
    scipy.io.mmwrite(f"{path}_B.mtx", system.B)
    np.savetxt(f"{path}_load.txt", system.load)
    return [f"{path}_A.mtx", f"{path}_B.mtx", f"{path}_load.txt"]
