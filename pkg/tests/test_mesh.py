"""Structured meshes: entity counts, orientation conventions and the JSON dump."""
import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from elastfem_module.mesh_submodule.mesh import (
    Partition1D,
    PrismMesh,
    TetMesh,
    TriMesh2D,
    build_level_mesh,
    build_mesh,
    build_prism_mesh,
    build_tet_mesh,
    build_tri_mesh,
    mesh_counts,
    mesh_to_dict,
    orient_entities,
    uniform_partition,
)


def signed_measures(vertices, cells):
    return np.array([np.linalg.det((vertices[c][1:] - vertices[c][0]).T) for c in cells])


# =============================================================================
# Counts
# =============================================================================


class TestCounts:
    @pytest.mark.parametrize("n,cells,vertices,edges", [(1, 2, 4, 5), (2, 8, 9, 16), (3, 18, 16, 33)])
    def test_tri_mesh(self, n, cells, vertices, edges):
        mesh = build_tri_mesh(n)
        assert isinstance(mesh, TriMesh2D)
        assert mesh.n_triangles == cells
        assert mesh.n_vertices == vertices
        assert mesh.n_edges == edges
        assert mesh.boundary_edges.size == 4 * n

    @pytest.mark.parametrize("n,cells,vertices,faces,boundary", [(1, 6, 8, 18, 12), (2, 48, 27, 120, 48)])
    def test_tet_mesh(self, n, cells, vertices, faces, boundary):
        mesh = build_tet_mesh(n)
        assert isinstance(mesh, TetMesh)
        assert mesh.n_cells == cells
        assert mesh.n_vertices == vertices
        assert mesh.n_faces == faces
        assert mesh.boundary_faces.size == boundary

    def test_prism_mesh_n1(self):
        mesh = build_prism_mesh(1)
        assert isinstance(mesh, PrismMesh)
        assert mesh.n_cells == 2
        assert mesh.n_vertices == 8
        assert mesh_counts(mesh) == {"cells": 2, "vertices": 8, "side_faces": 5, "horizontal_faces": 4}

    def test_prism_mesh_n2(self):
        mesh = build_prism_mesh(2)
        assert mesh.n_cells == 16
        assert mesh.n_vertices == 27
        assert len(mesh.side_faces) == 2 * 16
        assert len(mesh.horizontal_faces) == 3 * 8

    @pytest.mark.parametrize("kind", ["prism", "tet", "tri"])
    def test_level_mesh_doubles_cells_per_axis(self, kind):
        per_cube = {"prism": 2, "tet": 6, "tri": 2}[kind]
        dim = 2 if kind == "tri" else 3
        for level in (1, 2, 3):
            n = 2 ** (level - 1)
            assert build_level_mesh(kind, level).n_cells == per_cube * n ** dim

    @pytest.mark.parametrize("kind", ["prism", "tet", "tri"])
    @pytest.mark.parametrize("n", [0, -1, 1.5])
    def test_invalid_cells_per_axis(self, kind, n):
        with pytest.raises(ValueError):
            build_mesh(kind, n)

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown mesh kind"):
            build_mesh("hex", 1)


# =============================================================================
# Mesh size
# =============================================================================


class TestMeshSize:
    @pytest.mark.parametrize("kind,h1", [("prism", math.sqrt(2.0)), ("tet", math.sqrt(3.0)), ("tri", math.sqrt(2.0))])
    def test_coarsest_mesh_size(self, kind, h1):
        assert_allclose(build_mesh(kind, 1).mesh_size, h1, rtol=1e-14)

    @pytest.mark.parametrize("kind", ["prism", "tet", "tri"])
    def test_mesh_size_halves(self, kind):
        coarse = build_mesh(kind, 1).mesh_size
        for n in (2, 4):
            assert_allclose(build_mesh(kind, n).mesh_size, coarse / n, rtol=1e-12)


# =============================================================================
# Orientation
# =============================================================================


class TestOrientation:
    def test_triangles_positively_oriented(self):
        mesh = build_tri_mesh(3)
        assert np.all(signed_measures(mesh.vertices, mesh.triangles) > 0.0)

    def test_tets_positively_oriented(self):
        mesh = build_tet_mesh(2)
        assert np.all(signed_measures(mesh.vertices, mesh.tets) > 0.0)

    def test_edges_run_from_lower_to_higher_vertex(self):
        mesh = build_tri_mesh(3)
        assert np.all(mesh.edges[:, 0] < mesh.edges[:, 1])
        tangents = mesh.vertices[mesh.edges[:, 1]] - mesh.vertices[mesh.edges[:, 0]]
        tangents /= np.linalg.norm(tangents, axis=1)[:, None]
        assert_allclose(mesh.edge_tangents, tangents, atol=1e-15)
        rotated = np.column_stack([-mesh.edge_tangents[:, 1], mesh.edge_tangents[:, 0]])
        assert_allclose(mesh.edge_normals, rotated, atol=1e-15)

    def test_shared_edges_see_opposite_signs(self):
        mesh = build_tri_mesh(3)
        for e in mesh.interior_edges:
            t0, t1 = mesh.edge_cells[e]
            s0 = mesh.tri_edge_signs[t0, mesh.edge_local_index(t0, e)]
            s1 = mesh.tri_edge_signs[t1, mesh.edge_local_index(t1, e)]
            assert s0 == -s1

    def test_owner_is_lower_cell_index(self):
        tri = build_tri_mesh(3)
        interior = tri.interior_edges
        assert np.all(tri.edge_cells[interior, 0] < tri.edge_cells[interior, 1])
        tet = build_tet_mesh(2)
        interior = tet.interior_faces
        assert np.all(tet.face_cells[interior, 0] < tet.face_cells[interior, 1])

    def test_face_normals_point_away_from_owner(self):
        mesh = build_tet_mesh(1)
        for f in range(mesh.n_faces):
            owner, i = mesh.face_cells[f, 0], mesh.face_local[f, 0]
            apex = mesh.vertices[mesh.tets[owner, i]]
            corner = mesh.vertices[mesh.faces[f, 0]]
            assert mesh.face_normals[f] @ (corner - apex) > 0.0
            assert_allclose(np.linalg.norm(mesh.face_normals[f]), 1.0, rtol=1e-14)

    def test_face_frames_dual_to_owner_tangents(self):
        mesh = build_tet_mesh(1)
        for f in range(mesh.n_faces):
            owner, i = mesh.face_cells[f, 0], mesh.face_local[f, 0]
            apex = mesh.vertices[mesh.tets[owner, i]]
            tangents = (mesh.vertices[mesh.faces[f]] - apex).T
            assert_allclose(mesh.face_frames[f] @ tangents, np.eye(3), atol=1e-12)

    def test_rebuild_is_deterministic(self):
        first, second = build_tet_mesh(2), build_tet_mesh(2)
        assert np.array_equal(first.faces, second.faces)
        assert np.array_equal(first.face_cells, second.face_cells)
        assert np.array_equal(first.face_frames, second.face_frames)

    def test_negative_cells_are_flipped(self):
        vertices = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        mesh = orient_entities(vertices, [[0, 2, 1]])
        assert signed_measures(mesh.vertices, mesh.triangles)[0] > 0.0

    def test_mesh_arrays_are_read_only(self):
        mesh = build_tri_mesh(1)
        with pytest.raises(ValueError):
            mesh.vertices[0, 0] = 5.0


class TestOrientEntitiesErrors:
    def test_non_manifold_edge(self):
        vertices = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, -1.0], [1.0, 1.0]])
        with pytest.raises(ValueError, match="non-manifold"):
            orient_entities(vertices, [[0, 1, 2], [0, 1, 3], [0, 1, 4]])

    def test_degenerate_cell(self):
        vertices = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
        with pytest.raises(ValueError, match="degenerate"):
            orient_entities(vertices, [[0, 1, 2]])

    def test_unknown_vertex(self):
        vertices = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        with pytest.raises(ValueError, match="unknown vertices"):
            orient_entities(vertices, [[0, 1, 3]])

    def test_shape_mismatch(self):
        vertices = np.zeros((4, 3))
        with pytest.raises(ValueError, match="do not match"):
            orient_entities(vertices, [[0, 1, 2]])


# =============================================================================
# Partition and dump
# =============================================================================


class TestPartition:
    def test_uniform(self):
        axis = uniform_partition(4)
        assert axis.n_cells == 4
        assert axis.cell_bounds(1) == (0.25, 0.5)
        assert_allclose(axis.mesh_size, 0.25)

    @pytest.mark.parametrize("nodes", [[0.0], [0.0, 0.5, 0.5, 1.0], [0.1, 1.0], [0.0, 0.9]])
    def test_invalid_nodes(self, nodes):
        with pytest.raises(ValueError):
            Partition1D(np.array(nodes))


class TestMeshDump:
    @pytest.mark.parametrize("kind", ["prism", "tet", "tri"])
    def test_dump_is_json_serializable(self, kind):
        mesh = build_mesh(kind, 1)
        data = json.loads(json.dumps(mesh_to_dict(mesh)))
        assert data["kind"] == kind
        assert len(data["vertices"]) == mesh.n_vertices
        assert_allclose(data["h"], mesh.mesh_size)

    def test_tet_dump_fields(self):
        data = mesh_to_dict(build_tet_mesh(1))
        assert len(data["faces"]) == 18
        assert sum(1 for k in data["face_neighbor"] if k < 0) == 12
        assert np.array(data["face_frames"]).shape == (18, 3, 3)

    def test_dump_rejects_other_objects(self):
        with pytest.raises(ValueError):
            mesh_to_dict(object())
