"""Saddle-point solves, the energy identity and the discrete inf-sup constant."""
import numpy as np
import pytest
import scipy.sparse as sp
from numpy.testing import assert_allclose

from elastfem_module.assembly_submodule.dof_map import prism_counts
from elastfem_module.assembly_submodule.function_space import build_space
from elastfem_module.assembly_submodule.saddle_assembly import assemble, assemble_system
from elastfem_module.harness_submodule.manufactured import manufactured_case
from elastfem_module.mesh_submodule.mesh import build_mesh
from elastfem_module.solver_submodule import infsup
from elastfem_module.solver_submodule.infsup import infsup_constant, restrict_stress
from elastfem_module.solver_submodule.saddle_solver import (
    Solution,
    block_residual,
    check_energy_identity,
    check_nonsingular,
    energy_identity,
    solve_saddle,
)
from elastfem_module.utils_module.config import Material
from elastfem_module.utils_module.errors import SolverError


@pytest.fixture(scope="module")
def tri_norm_system(tri_space_n2):
    return assemble(tri_space_n2, Material(dim=2), with_norms=True)


@pytest.fixture(scope="module")
def prism_space_n2():
    return build_space("prism", build_mesh("prism", 2))


@pytest.fixture(scope="module")
def tet_space_n2():
    return build_space("tet", build_mesh("tet", 2))


# =============================================================================
# Linear solves
# =============================================================================


class TestSolveSaddle:
    def test_zero_load_gives_zero_solution(self, tri_space_n1, material_2d):
        solution = solve_saddle(assemble(tri_space_n1, material_2d))
        assert np.all(solution.sigma == 0.0)
        assert np.all(solution.u == 0.0)
        assert solution.residual_history == [0.0]

    def test_manufactured_prism_level1(self, prism_space_n1, material_3d):
        case = manufactured_case(3, material_3d)
        system = assemble_system(prism_space_n1, material_3d, source=case.f)
        solution = solve_saddle(system)
        assert solution.relative_residual <= 1e-10
        assert block_residual(system, solution.sigma, solution.u) <= 1e-10
        energy, work, reldiff = energy_identity(system, solution)
        assert energy > 0.0
        assert reldiff <= 1e-9

    def test_direct_and_schur_agree(self, tri_space_n2, material_2d):
        case = manufactured_case(2, material_2d)
        system = assemble_system(tri_space_n2, material_2d, source=case.f)
        direct = solve_saddle(system, method="direct")
        schur = solve_saddle(system, method="schur")
        assert schur.method == "schur"
        assert_allclose(schur.u, direct.u, rtol=1e-8, atol=1e-10)
        assert_allclose(schur.sigma, direct.sigma, rtol=1e-8, atol=1e-10)

    def test_matches_dense_solve(self, tet_space_n1, material_3d, rng):
        system = assemble(tet_space_n1, material_3d)
        system = system.with_load(rng.standard_normal(system.n_u))
        solution = solve_saddle(system)
        dense = np.linalg.solve(system.block_matrix().toarray(), system.rhs())
        assert_allclose(np.concatenate([solution.sigma, solution.u]), dense, rtol=1e-7, atol=1e-9)

    def test_zero_displacement_row_is_singular(self, tri_space_n1, material_2d):
        system = assemble(tri_space_n1, material_2d).with_load(np.ones(12))
        mask = np.ones(system.n_u)
        mask[0] = 0.0
        system.B = (sp.diags(mask) @ system.B).tocsr()
        with pytest.raises(SolverError, match="singular system"):
            check_nonsingular(system)
        with pytest.raises(SolverError):
            solve_saddle(system)

    @pytest.mark.parametrize("space_name,dim", [
        ("tri_space_n2", 2),
        ("tet_space_n2", 3),
        ("prism_space_n2", 3),
    ])
    def test_energy_identity_on_refined_meshes(self, request, space_name, dim):
        space = request.getfixturevalue(space_name)
        material = Material(dim=dim)
        system = assemble_system(space, material, source=manufactured_case(dim, material).f)
        energy, work, reldiff = check_energy_identity(system, solve_saddle(system))
        assert energy > 0.0
        assert reldiff <= 1e-9

    def test_energy_identity_violation_raises(self, tri_space_n2, material_2d):
        system = assemble_system(tri_space_n2, material_2d, source=manufactured_case(2, material_2d).f)
        solution = solve_saddle(system)
        perturbed = Solution(solution.sigma, 1.01 * solution.u, solution.residual_history)
        with pytest.raises(SolverError, match="energy identity"):
            check_energy_identity(system, perturbed)

    def test_invalid_arguments(self, tri_space_n1, material_2d):
        system = assemble(tri_space_n1, material_2d)
        with pytest.raises(ValueError, match="unknown solver method"):
            solve_saddle(system, method="cg")
        with pytest.raises(ValueError, match="tolerance"):
            solve_saddle(system, tol=2.0)

    def test_solver_error_reports_history(self):
        error = SolverError("did not converge", [1e-3, 1e-5])
        assert "1.000e-03" in str(error)
        assert error.residual_history == [1e-3, 1e-5]
        assert str(SolverError("plain")) == "plain"


# =============================================================================
# Inf-sup constant
# =============================================================================


class TestInfSup:
    def test_positive_on_triangles(self, tri_norm_system):
        result = infsup_constant(tri_norm_system)
        assert result.beta > 0.0
        assert result.residual <= 1e-6
        assert (result.n_sigma, result.n_u) == (tri_norm_system.n_sigma, tri_norm_system.n_u)

    def test_requires_norm_blocks(self, tri_space_n1, material_2d):
        with pytest.raises(ValueError, match="with_norms"):
            infsup_constant(assemble(tri_space_n1, material_2d))

    def test_sparse_path_matches_dense(self, tri_norm_system, monkeypatch):
        dense = infsup_constant(tri_norm_system)
        monkeypatch.setattr(infsup, "DENSE_LIMIT", 0)
        sparse = infsup_constant(tri_norm_system)
        assert_allclose(sparse.beta, dense.beta, rtol=1e-6)

    def test_tau3_ablation_cannot_increase_beta(self, prism_space_n1, material_3d):
        system = assemble(prism_space_n1, material_3d, with_norms=True)
        full = infsup_constant(system)
        keep = np.arange(prism_counts(prism_space_n1.mesh)["offset_tau3"])
        restricted = restrict_stress(system, keep)
        assert restricted.n_sigma == keep.size
        assert restricted.n_u == system.n_u
        assert infsup_constant(restricted).beta <= full.beta + 1e-8

    def test_tau3_ablation_has_displacement_kernel(self, prism_space_n2, material_3d):
        # v3 is discontinuous in z but div_xy of tau2 is continuous: 6 n^2 (n - 1) lost directions
        n = 2
        system = assemble(prism_space_n2, material_3d)
        keep = np.arange(prism_counts(prism_space_n2.mesh)["offset_tau3"])
        restricted = restrict_stress(system, keep)
        assert np.linalg.matrix_rank(system.B.toarray()) == system.n_u
        assert np.linalg.matrix_rank(restricted.B.toarray()) <= system.n_u - 6 * n * n * (n - 1)
