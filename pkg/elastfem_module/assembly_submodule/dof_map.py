"""
Global numbering of stress and displacement degrees of freedom.

Prism stress numbering is a tensor product of a planar numbering (Hu-Zhang for
tau1, BDM for tau2, per-triangle P1 for tau3) and an axial numbering
(discontinuous P1 for tau1, continuous P2 for tau2, continuous P3 for tau3).
Nonconforming stresses share d * d moments per facet and keep their bubbles local.
Displacements are discontinuous everywhere.
"""
from dataclasses import dataclass
from typing import List

import numpy as np

from ..elements_submodule.prism_element import N_PRISM_DISP, N_PRISM_STRESS, prism_slots
from ..mesh_submodule.mesh import PrismMesh, TetMesh, TriMesh2D

N_HZ_LOCAL = 30
N_BDM_LOCAL = 12


@dataclass(frozen=True, eq=False)
class DofMap:
    kind: str
    cell_dofs: List[np.ndarray]
    cell_signs: List[np.ndarray]
    n_sigma: int
    n_u: int
    n_disp_local: int

    @property
    def n_cells(self):
        return len(self.cell_dofs)

    def disp_dofs(self, k):
        start = k * self.n_disp_local
        return np.arange(start, start + self.n_disp_local)

    def shared_counts(self):
        """Number of cells referencing each global stress index."""
        counts = np.zeros(self.n_sigma, dtype=np.int64)
        for dofs in self.cell_dofs:
            np.add.at(counts, dofs, 1)
        return counts


def _check_edge_orientation(base: TriMesh2D):
    for e in base.interior_edges:
        t0, t1 = base.edge_cells[e]
        s0 = base.tri_edge_signs[t0, base.edge_local_index(t0, e)]
        s1 = base.tri_edge_signs[t1, base.edge_local_index(t1, e)]
        if s0 == s1:
            raise ValueError(f"inconsistent orientation across edge {e}: both cells report sign {s0}")


def hz_global_index(base: TriMesh2D, t, local):
    """Global Hu-Zhang index of local field `local` (vertex 3i+j, edge 9+4m+l, interior 21+q) of triangle t."""
    n_v, n_e = base.n_vertices, base.n_edges
    if local < 9:
        i, j = divmod(local, 3)
        return 3 * int(base.triangles[t, i]) + j
    if local < 21:
        m, l = divmod(local - 9, 4)
        return 3 * n_v + 4 * int(base.tri_edges[t, m]) + l
    return 3 * n_v + 4 * n_e + 9 * t + (local - 21)


def bdm_global_index(base: TriMesh2D, t, local):
    """(global BDM index, sign) of local field `local` (edge 3m+l, interior 9+p) of triangle t."""
    if local < 9:
        m, l = divmod(local, 3)
        return 3 * int(base.tri_edges[t, m]) + l, int(base.tri_edge_signs[t, m])
    return 3 * base.n_edges + 3 * t + (local - 9), 1


def prism_counts(mesh: PrismMesh):
    base = mesh.base
    nz = mesh.axis.n_cells
    n_hz = 3 * base.n_vertices + 4 * base.n_edges + 9 * base.n_triangles
    n_bdm = 3 * base.n_edges + 3 * base.n_triangles
    offset_tau2 = n_hz * 2 * nz
    offset_tau3 = offset_tau2 + n_bdm * (2 * nz + 1)
    n_sigma = offset_tau3 + 3 * base.n_triangles * (3 * nz + 1)
    return {
        "n_hz": n_hz,
        "n_bdm": n_bdm,
        "offset_tau2": offset_tau2,
        "offset_tau3": offset_tau3,
        "n_sigma": n_sigma,
        "n_u": N_PRISM_DISP * mesh.n_cells,
    }


def build_dof_map_prism(mesh: PrismMesh) -> DofMap:
    """
    Global indices and signs of the 108 local stress fields of every prism.

    tau1: hz * 2nz + 2c + zl
    tau2: offset_tau2 + bdm * (2nz + 1) + node (c, c + 1) or nz + 1 + c for the bubble
    tau3: offset_tau3 + (3t + i) * (3nz + 1) + node (c, c + 1) or nz + 1 + 2c + {0, 1}
    """
    if not isinstance(mesh, PrismMesh):
        raise ValueError(f"expected a PrismMesh, got {type(mesh).__name__}")
    base = mesh.base
    _check_edge_orientation(base)
    nz = mesh.axis.n_cells
    counts = prism_counts(mesh)
    slots = prism_slots()

    cell_dofs, cell_signs = [], []
    for k in range(mesh.n_cells):
        t, c = mesh.cell_parts(k)
        dofs = np.empty(N_PRISM_STRESS, dtype=np.int64)
        signs = np.ones(N_PRISM_STRESS, dtype=np.int64)
        for f, slot in enumerate(slots):
            if slot.block == 1:
                dofs[f] = hz_global_index(base, t, slot.planar) * 2 * nz + 2 * c + slot.axial
            elif slot.block == 2:
                planar, sign = bdm_global_index(base, t, slot.planar)
                axial = (c, c + 1, nz + 1 + c)[slot.axial]
                dofs[f] = counts["offset_tau2"] + planar * (2 * nz + 1) + axial
                signs[f] = sign
            else:
                axial = (c, c + 1, nz + 1 + 2 * c, nz + 2 + 2 * c)[slot.axial]
                dofs[f] = counts["offset_tau3"] + (3 * t + slot.planar) * (3 * nz + 1) + axial
        dofs.setflags(write=False)
        signs.setflags(write=False)
        cell_dofs.append(dofs)
        cell_signs.append(signs)
    return DofMap("prism", cell_dofs, cell_signs, counts["n_sigma"], counts["n_u"], N_PRISM_DISP)


def check_tet_frames(mesh: TetMesh, tol=1e-10):
    """Every face frame must be dual to the tangents of its owner."""
    for f in range(mesh.n_faces):
        owner, i = mesh.face_cells[f, 0], mesh.face_local[f, 0]
        apex = mesh.vertices[mesh.tets[owner, i]]
        tangents = (mesh.vertices[mesh.faces[f]] - apex).T
        if not np.allclose(mesh.face_frames[f] @ tangents, np.eye(3), atol=tol):
            raise ValueError(f"face {f}: frame is not dual to the tangents of owner cell {owner}")


def _nc_dof_map(kind, n_cells, cell_facets, n_facets, dim):
    per_facet = dim * dim
    n_bubbles = 6 if dim == 3 else 3
    n_disp = dim * (dim + 1)
    cell_dofs, cell_signs = [], []
    for k in range(n_cells):
        facet_part = [per_facet * int(f) + m for f in cell_facets[k] for m in range(per_facet)]
        bubble_part = [per_facet * n_facets + n_bubbles * k + p for p in range(n_bubbles)]
        dofs = np.array(facet_part + bubble_part, dtype=np.int64)
        signs = np.ones(dofs.size, dtype=np.int64)
        dofs.setflags(write=False)
        signs.setflags(write=False)
        cell_dofs.append(dofs)
        cell_signs.append(signs)
    n_sigma = per_facet * n_facets + n_bubbles * n_cells
    return DofMap(kind, cell_dofs, cell_signs, n_sigma, n_disp * n_cells, n_disp)


def build_dof_map_tet_nc(mesh: TetMesh) -> DofMap:
    """9 shared moments per face (index 9f + l), 6 bubbles per tet, all weights +1."""
    if not isinstance(mesh, TetMesh):
        raise ValueError(f"expected a TetMesh, got {type(mesh).__name__}")
    check_tet_frames(mesh)
    return _nc_dof_map("tet_nc", mesh.n_cells, mesh.tet_faces, mesh.n_faces, 3)


def build_dof_map_tri_nc(mesh: TriMesh2D) -> DofMap:
    """4 shared moments per edge (index 4e + l), 3 bubbles per triangle, all weights +1."""
    if not isinstance(mesh, TriMesh2D):
        raise ValueError(f"expected a TriMesh2D, got {type(mesh).__name__}")
    return _nc_dof_map("tri_nc", mesh.n_cells, mesh.tri_edges, mesh.n_edges, 2)


def build_dof_map(mesh) -> DofMap:
    if isinstance(mesh, PrismMesh):
        return build_dof_map_prism(mesh)
    if isinstance(mesh, TetMesh):
        return build_dof_map_tet_nc(mesh)
    if isinstance(mesh, TriMesh2D):
        return build_dof_map_tri_nc(mesh)
    raise ValueError(f"no element is defined on {type(mesh).__name__}")
