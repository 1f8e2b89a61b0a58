"""
Structured meshes of the unit square / unit cube with globally oriented entities.

Conventions shared by every mesh:
  - a global edge runs from its lower to its higher vertex index; its normal is
    the unit tangent rotated by +90 degrees (2D);
  - a face (3D) or edge (2D) is owned by the lower of its two cell indices; the
    owner fixes the global normal and, for tetrahedra, the dual tangent frame.
"""
from dataclasses import dataclass

import numpy as np

from ..utils_module.utils import level_to_cells_per_axis


def _readonly(*arrays):
    for a in arrays:
        a.setflags(write=False)


def _check_n(n):
    if int(n) != n or n < 1:
        raise ValueError(f"cells per axis must be an integer >= 1, got {n!r}")
    return int(n)


@dataclass(frozen=True, eq=False)
class Partition1D:
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("a partition needs at least two nodes")
        if not np.all(np.diff(nodes) > 0.0):
            raise ValueError("partition nodes must be strictly increasing")
        if nodes[0] != 0.0 or nodes[-1] != 1.0:
            raise ValueError(f"partition must span [0, 1], got [{nodes[0]}, {nodes[-1]}]")
        _readonly(nodes)
        object.__setattr__(self, "nodes", nodes)

    @property
    def n_cells(self):
        return self.nodes.size - 1

    @property
    def cells(self):
        return np.column_stack([np.arange(self.n_cells), np.arange(1, self.n_cells + 1)])

    def cell_bounds(self, c):
        return float(self.nodes[c]), float(self.nodes[c + 1])

    @property
    def mesh_size(self):
        return float(np.diff(self.nodes).max())


def uniform_partition(n) -> Partition1D:
    n = _check_n(n)
    return Partition1D(np.linspace(0.0, 1.0, n + 1))


@dataclass(frozen=True, eq=False)
class TriMesh2D:
    vertices: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray
    tri_edges: np.ndarray
    tri_edge_signs: np.ndarray
    edge_cells: np.ndarray
    edge_tangents: np.ndarray
    edge_normals: np.ndarray

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_triangles(self):
        return self.triangles.shape[0]

    @property
    def n_cells(self):
        return self.n_triangles

    @property
    def n_edges(self):
        return self.edges.shape[0]

    @property
    def boundary_edges(self):
        return np.flatnonzero(self.edge_cells[:, 1] < 0)

    @property
    def interior_edges(self):
        return np.flatnonzero(self.edge_cells[:, 1] >= 0)

    def cell_vertices(self, t):
        return self.vertices[self.triangles[t]]

    @property
    def mesh_size(self):
        return float(max(_simplex_diameter(self.vertices[tri]) for tri in self.triangles))

    def edge_local_index(self, t, e):
        """Local index (opposite vertex) of global edge e in triangle t."""
        hits = np.flatnonzero(self.tri_edges[t] == e)
        if hits.size != 1:
            raise ValueError(f"edge {e} is not an edge of triangle {t}")
        return int(hits[0])


@dataclass(frozen=True, eq=False)
class PrismMesh:
    base: TriMesh2D
    axis: Partition1D

    @property
    def n_cells(self):
        return self.base.n_triangles * self.axis.n_cells

    @property
    def n_vertices(self):
        return self.base.n_vertices * (self.axis.n_cells + 1)

    @property
    def vertices(self):
        xy = np.tile(self.base.vertices, (self.axis.nodes.size, 1))
        z = np.repeat(self.axis.nodes, self.base.n_vertices)
        return np.column_stack([xy, z])

    def cell_index(self, triangle, interval):
        return interval * self.base.n_triangles + triangle

    def cell_parts(self, k):
        """(triangle index, interval index) of prism k."""
        return k % self.base.n_triangles, k // self.base.n_triangles

    def cell_geometry(self, k):
        t, c = self.cell_parts(k)
        z0, z1 = self.axis.cell_bounds(c)
        return self.base.cell_vertices(t), z0, z1

    @property
    def side_faces(self):
        """(edge, interval) pairs."""
        return [(e, c) for c in range(self.axis.n_cells) for e in range(self.base.n_edges)]

    @property
    def horizontal_faces(self):
        """(triangle, node) pairs."""
        return [(t, z) for z in range(self.axis.nodes.size) for t in range(self.base.n_triangles)]

    @property
    def mesh_size(self):
        return max(self.base.mesh_size, self.axis.mesh_size)


@dataclass(frozen=True, eq=False)
class TetMesh:
    vertices: np.ndarray
    tets: np.ndarray
    faces: np.ndarray
    tet_faces: np.ndarray
    face_cells: np.ndarray
    face_local: np.ndarray
    face_normals: np.ndarray
    face_frames: np.ndarray

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_cells(self):
        return self.tets.shape[0]

    @property
    def n_faces(self):
        return self.faces.shape[0]

    @property
    def boundary_faces(self):
        return np.flatnonzero(self.face_cells[:, 1] < 0)

    @property
    def interior_faces(self):
        return np.flatnonzero(self.face_cells[:, 1] >= 0)

    def cell_vertices(self, k):
        return self.vertices[self.tets[k]]

    @property
    def mesh_size(self):
        return float(max(_simplex_diameter(self.vertices[tet]) for tet in self.tets))


def _simplex_diameter(points):
    diffs = points[:, None, :] - points[None, :, :]
    return np.sqrt((diffs ** 2).sum(axis=2)).max()


def _signed_measure(points):
    return np.linalg.det((points[1:] - points[0]).T)


def _orient_cells(vertices, cells):
    cells = np.array(cells, dtype=np.int64)
    for k, cell in enumerate(cells):
        det = _signed_measure(vertices[cell])
        if abs(det) <= 1e-14:
            raise ValueError(f"cell {k} is degenerate")
        if det < 0.0:
            cells[k, [-2, -1]] = cells[k, [-1, -2]]
    return cells


def _incidence(cells):
    """Map sorted vertex tuples of codimension-1 entities to (cell, opposite local vertex) lists."""
    incidence = {}
    n_local = cells.shape[1]
    for k, cell in enumerate(cells):
        for i in range(n_local):
            key = tuple(sorted(int(cell[j]) for j in range(n_local) if j != i))
            incidence.setdefault(key, []).append((k, i))
    for key, users in incidence.items():
        if len(users) > 2:
            raise ValueError(f"non-manifold connectivity: entity {key} is shared by {len(users)} cells")
    return incidence


def orient_triangles(vertices, triangles) -> TriMesh2D:
    vertices = np.asarray(vertices, dtype=float)
    triangles = _orient_cells(vertices, triangles)
    incidence = _incidence(triangles)

    keys = sorted(incidence)
    edges = np.array(keys, dtype=np.int64)
    n_edges = len(keys)
    tri_edges = np.zeros_like(triangles)
    tri_edge_signs = np.zeros(triangles.shape, dtype=np.int64)
    edge_cells = -np.ones((n_edges, 2), dtype=np.int64)

    tangents = vertices[edges[:, 1]] - vertices[edges[:, 0]]
    tangents /= np.linalg.norm(tangents, axis=1)[:, None]
    normals = np.column_stack([-tangents[:, 1], tangents[:, 0]])

    for e, key in enumerate(keys):
        users = sorted(incidence[key])
        for slot, (t, i) in enumerate(users):
            edge_cells[e, slot] = t
            tri_edges[t, i] = e
            outward = vertices[list(key)].mean(axis=0) - vertices[triangles[t]].mean(axis=0)
            tri_edge_signs[t, i] = 1 if outward @ normals[e] > 0.0 else -1
        if len(users) == 2 and tri_edge_signs[users[0][0], users[0][1]] == tri_edge_signs[users[1][0], users[1][1]]:
            raise ValueError(f"inconsistent orientation across edge {key}")

    _readonly(vertices, triangles, edges, tri_edges, tri_edge_signs, edge_cells, tangents, normals)
    return TriMesh2D(vertices, triangles, edges, tri_edges, tri_edge_signs, edge_cells, tangents, normals)


def orient_tetrahedra(vertices, tets) -> TetMesh:
    vertices = np.asarray(vertices, dtype=float)
    tets = _orient_cells(vertices, tets)
    incidence = _incidence(tets)

    keys = sorted(incidence)
    faces = np.array(keys, dtype=np.int64)
    n_faces = len(keys)
    tet_faces = np.zeros_like(tets)
    face_cells = -np.ones((n_faces, 2), dtype=np.int64)
    face_local = -np.ones((n_faces, 2), dtype=np.int64)
    face_normals = np.zeros((n_faces, 3))
    face_frames = np.zeros((n_faces, 3, 3))

    for f, key in enumerate(keys):
        users = sorted(incidence[key])
        for slot, (k, i) in enumerate(users):
            face_cells[f, slot] = k
            face_local[f, slot] = i
            tet_faces[k, i] = f
        owner, i = users[0]
        apex = vertices[tets[owner, i]]
        corners = vertices[list(key)]
        normal = np.cross(corners[1] - corners[0], corners[2] - corners[0])
        normal /= np.linalg.norm(normal)
        if normal @ (corners[0] - apex) < 0.0:
            normal = -normal
        face_normals[f] = normal
        # rows n_a with n_a . (x_{j_b} - x_i) = delta_ab, j_b in ascending global order
        tangents = (corners - apex).T
        face_frames[f] = np.linalg.inv(tangents)

    _readonly(vertices, tets, faces, tet_faces, face_cells, face_local, face_normals, face_frames)
    return TetMesh(vertices, tets, faces, tet_faces, face_cells, face_local, face_normals, face_frames)


def orient_entities(vertices, cells):
    """
    Orient cells positively and give every edge/face a unique global orientation and owner.

    Parameters:
    vertices (array): (V, 2) for triangles or (V, 3) for tetrahedra.
    cells (array): (C, 3) triangles or (C, 4) tetrahedra.

    Returns:
    TriMesh2D or TetMesh
    """
    vertices = np.asarray(vertices, dtype=float)
    cells = np.asarray(cells, dtype=np.int64)
    if cells.ndim != 2 or cells.shape[1] != vertices.shape[1] + 1:
        raise ValueError(f"cells of shape {cells.shape} do not match {vertices.shape[1]}D vertices")
    if cells.size and (cells.min() < 0 or cells.max() >= vertices.shape[0]):
        raise ValueError("cell connectivity references unknown vertices")
    if vertices.shape[1] == 2:
        return orient_triangles(vertices, cells)
    if vertices.shape[1] == 3:
        return orient_tetrahedra(vertices, cells)
    raise ValueError(f"unsupported dimension {vertices.shape[1]}")


def build_tri_mesh(n) -> TriMesh2D:
    """
    n x n grid on the unit square, each square split by its (0,0)-(1,1) diagonal.
    """
    n = _check_n(n)
    x = np.linspace(0.0, 1.0, n + 1)
    xx, yy = np.meshgrid(x, x, indexing="xy")
    vertices = np.column_stack([xx.ravel(), yy.ravel()])

    triangles = []
    for j in range(n):
        for i in range(n):
            v00 = j * (n + 1) + i
            v10 = v00 + 1
            v01 = v00 + (n + 1)
            v11 = v01 + 1
            triangles.append([v00, v10, v11])
            triangles.append([v00, v11, v01])
    return orient_entities(vertices, np.array(triangles))


def build_prism_mesh(n) -> PrismMesh:
    n = _check_n(n)
    return PrismMesh(base=build_tri_mesh(n), axis=uniform_partition(n))


def build_tet_mesh(n) -> TetMesh:
    """
    n^3 sub-cubes, each split into 6 tetrahedra around its main diagonal.
    """
    n = _check_n(n)
    x = np.linspace(0.0, 1.0, n + 1)
    c = np.meshgrid(x, x, x, indexing="ij")
    vertices = np.transpose(c).reshape((n + 1) ** 3, 3)

    tets = np.zeros((6 * n ** 3, 4), dtype=np.int64)
    for iz in range(n):
        for iy in range(n):
            for ix in range(n):
                v0 = iz * (n + 1) * (n + 1) + iy * (n + 1) + ix
                v1 = v0 + 1
                v2 = v0 + (n + 1)
                v3 = v1 + (n + 1)
                v4 = v0 + (n + 1) * (n + 1)
                v5 = v1 + (n + 1) * (n + 1)
                v6 = v2 + (n + 1) * (n + 1)
                v7 = v3 + (n + 1) * (n + 1)

                c0 = 6 * (iz * n * n + iy * n + ix)
                tets[c0 + 0, :] = [v0, v1, v3, v7]
                tets[c0 + 1, :] = [v0, v1, v7, v5]
                tets[c0 + 2, :] = [v0, v5, v7, v4]
                tets[c0 + 3, :] = [v0, v3, v2, v7]
                tets[c0 + 4, :] = [v0, v6, v4, v7]
                tets[c0 + 5, :] = [v0, v2, v6, v7]
    return orient_entities(vertices, tets)


def build_mesh(kind: str, n: int):
    builders = {"prism": build_prism_mesh, "tet": build_tet_mesh, "tri": build_tri_mesh}
    if kind not in builders:
        raise ValueError(f"unknown mesh kind {kind!r}; expected one of {sorted(builders)}")
    return builders[kind](n)


def build_level_mesh(kind: str, level: int):
    return build_mesh(kind, level_to_cells_per_axis(level))


def mesh_to_dict(mesh) -> dict:
    """JSON-shaped dump of a mesh: vertex array, cell arrays, oriented-entity arrays."""
    if isinstance(mesh, TriMesh2D):
        return {
            "kind": "tri",
            "vertices": mesh.vertices.tolist(),
            "cells": mesh.triangles.tolist(),
            "edges": mesh.edges.tolist(),
            "edge_normals": mesh.edge_normals.tolist(),
            "edge_owner": mesh.edge_cells[:, 0].tolist(),
            "cell_edges": mesh.tri_edges.tolist(),
            "cell_edge_signs": mesh.tri_edge_signs.tolist(),
            "h": mesh.mesh_size,
        }
    if isinstance(mesh, PrismMesh):
        base = mesh_to_dict(mesh.base)
        return {
            "kind": "prism",
            "vertices": mesh.vertices.tolist(),
            "cells": [list(mesh.cell_parts(k)) for k in range(mesh.n_cells)],
            "base": base,
            "axis_nodes": mesh.axis.nodes.tolist(),
            "h": mesh.mesh_size,
        }
    if isinstance(mesh, TetMesh):
        return {
            "kind": "tet",
            "vertices": mesh.vertices.tolist(),
            "cells": mesh.tets.tolist(),
            "faces": mesh.faces.tolist(),
            "face_owner": mesh.face_cells[:, 0].tolist(),
            "face_neighbor": mesh.face_cells[:, 1].tolist(),
            "face_normals": mesh.face_normals.tolist(),
            "face_frames": mesh.face_frames.tolist(),
            "cell_faces": mesh.tet_faces.tolist(),
            "h": mesh.mesh_size,
        }
    raise ValueError(f"cannot dump object of type {type(mesh).__name__}")


def mesh_counts(mesh) -> dict:
    if isinstance(mesh, TriMesh2D):
        return {"cells": mesh.n_triangles, "vertices": mesh.n_vertices, "edges": mesh.n_edges}
    if isinstance(mesh, PrismMesh):
        return {
            "cells": mesh.n_cells,
            "vertices": mesh.n_vertices,
            "side_faces": len(mesh.side_faces),
            "horizontal_faces": len(mesh.horizontal_faces),
        }
    if isinstance(mesh, TetMesh):
        return {
            "cells": mesh.n_cells,
            "vertices": mesh.n_vertices,
            "faces": mesh.n_faces,
            "boundary_faces": int(mesh.boundary_faces.size),
        }
    raise ValueError(f"unknown mesh type {type(mesh).__name__}")
