"""
Discrete stress/displacement spaces: a mesh, its DofMap and the local element
of every cell.

Local elements only depend on the cell shape, the order of its global vertex
ids and the facet frames, never on its position, so cells are grouped by a
signature and each group's element is built once.
"""
from functools import lru_cache

import numpy as np

from ..elements_submodule.element_basis import ElementBasis
from ..elements_submodule.nonconforming_element import FacetFrame, dual_frame, nc_element
from ..elements_submodule.prism_element import prism_element
from ..mesh_submodule.mesh import PrismMesh, TetMesh, TriMesh2D, build_level_mesh
from ..poly_submodule.cells import PrismCell, SimplexCell
from .dof_map import build_dof_map_prism, build_dof_map_tet_nc, build_dof_map_tri_nc

SIGNATURE_DECIMALS = 12


def _shape_key(array):
    return tuple(np.round(np.asarray(array, dtype=float), SIGNATURE_DECIMALS).ravel().tolist())


class FunctionSpace:
    """Common interface of the three mixed spaces."""

    kind = None
    dim = None

    def __init__(self, mesh, dof_map):
        self.mesh = mesh
        self.dof_map = dof_map
        self._elements = {}

    @property
    def n_cells(self):
        return self.dof_map.n_cells

    @property
    def n_sigma(self):
        return self.dof_map.n_sigma

    @property
    def n_u(self):
        return self.dof_map.n_u

    @property
    def mesh_size(self):
        return self.mesh.mesh_size

    def cell(self, k):
        raise NotImplementedError

    def signature(self, k):
        raise NotImplementedError

    def _build_element(self, k) -> ElementBasis:
        raise NotImplementedError

    def element(self, k) -> ElementBasis:
        key = self.signature(k)
        if key not in self._elements:
            self._elements[key] = self._build_element(k)
        return self._elements[key]

    def stress_dofs(self, k):
        return self.dof_map.cell_dofs[k], self.dof_map.cell_signs[k]

    def disp_dofs(self, k):
        return self.dof_map.disp_dofs(k)

    def counts(self):
        return {"n_sigma": self.n_sigma, "n_u": self.n_u, "cells": self.n_cells}


class PrismSpace(FunctionSpace):
    kind = "prism"
    dim = 3

    def __init__(self, mesh: PrismMesh):
        super().__init__(mesh, build_dof_map_prism(mesh))

    def cell(self, k):
        vertices, z0, z1 = self.mesh.cell_geometry(k)
        return PrismCell(vertices, z0, z1)

    def _global_ids(self, k):
        t, _ = self.mesh.cell_parts(k)
        return tuple(int(v) for v in self.mesh.base.triangles[t])

    def signature(self, k):
        vertices, z0, z1 = self.mesh.cell_geometry(k)
        ids = self._global_ids(k)
        order = tuple(int(r) for r in np.argsort(ids))
        return _shape_key(vertices - vertices[0]), round(z1 - z0, SIGNATURE_DECIMALS), order

    def _build_element(self, k):
        return prism_element(self.cell(k), self._global_ids(k))


class TetNcSpace(FunctionSpace):
    kind = "tet_nc"
    dim = 3

    def __init__(self, mesh: TetMesh, degree=13):
        super().__init__(mesh, build_dof_map_tet_nc(mesh))
        self.degree = degree

    def cell(self, k):
        return SimplexCell(self.mesh.cell_vertices(k))

    def facet_frames(self, k):
        tet = self.mesh.tets[k]
        frames = []
        for i in range(4):
            f = self.mesh.tet_faces[k, i]
            local = tuple(sorted((j for j in range(4) if j != i), key=lambda j: tet[j]))
            frames.append(FacetFrame(local, self.mesh.face_frames[f], self.mesh.face_normals[f]))
        return frames

    def signature(self, k):
        vertices = self.mesh.cell_vertices(k)
        frames = self.facet_frames(k)
        return (
            _shape_key(vertices - vertices[0]),
            tuple(fr.vertices for fr in frames),
            tuple(_shape_key(fr.frame) + _shape_key(fr.normal) for fr in frames),
        )

    def _build_element(self, k):
        return nc_element(self.cell(k), self.facet_frames(k), self.degree)


class TriNcSpace(FunctionSpace):
    kind = "tri_nc"
    dim = 2

    def __init__(self, mesh: TriMesh2D, degree=13):
        super().__init__(mesh, build_dof_map_tri_nc(mesh))
        self.degree = degree
        self._edge_frames = self._owner_edge_frames()

    def _owner_edge_frames(self):
        mesh = self.mesh
        frames = np.zeros((mesh.n_edges, 2, 2))
        for e in range(mesh.n_edges):
            owner = mesh.edge_cells[e, 0]
            i = mesh.edge_local_index(owner, e)
            cell = SimplexCell(mesh.cell_vertices(owner))
            tri = mesh.triangles[owner]
            local = sorted((j for j in range(3) if j != i), key=lambda j: tri[j])
            frames[e] = dual_frame(cell, i, local)
        frames.setflags(write=False)
        return frames

    def cell(self, k):
        return SimplexCell(self.mesh.cell_vertices(k))

    def facet_frames(self, k):
        tri = self.mesh.triangles[k]
        frames = []
        for i in range(3):
            e = self.mesh.tri_edges[k, i]
            local = tuple(sorted((j for j in range(3) if j != i), key=lambda j: tri[j]))
            frames.append(FacetFrame(local, self._edge_frames[e], self.mesh.edge_normals[e]))
        return frames

    def signature(self, k):
        vertices = self.mesh.cell_vertices(k)
        frames = self.facet_frames(k)
        return (
            _shape_key(vertices - vertices[0]),
            tuple(fr.vertices for fr in frames),
            tuple(_shape_key(fr.frame) + _shape_key(fr.normal) for fr in frames),
        )

    def _build_element(self, k):
        return nc_element(self.cell(k), self.facet_frames(k), self.degree)


SPACE_BY_ELEMENT = {"prism": PrismSpace, "tet": TetNcSpace, "tri": TriNcSpace}


def build_space(element: str, mesh):
    if element not in SPACE_BY_ELEMENT:
        raise ValueError(f"unknown element {element!r}; expected one of {sorted(SPACE_BY_ELEMENT)}")
    return SPACE_BY_ELEMENT[element](mesh)


@lru_cache(maxsize=8)
def level_space(element: str, level: int):
    """Space on the structured mesh of a refinement level (meshes: prism/tet/tri as the element)."""
    return build_space(element, build_level_mesh(element, level))
