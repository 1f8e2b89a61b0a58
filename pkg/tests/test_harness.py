"""Manufactured solutions, error norms and the level studies."""
import functools
import math
import os

import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose

from elastfem_module.harness_submodule import convergence_study as study_module
from elastfem_module.harness_submodule.convergence_study import (
    ConvergenceRow,
    ConvergenceStudy,
    InfSupStudy,
    compute_orders,
    convergence_frame,
    convergence_order,
    convergence_study,
)
from elastfem_module.harness_submodule.error_norms import (
    consistency_functional,
    error_norms,
    project_stress,
    stress_moments,
)
from elastfem_module.harness_submodule.manufactured import (
    ManufacturedCase,
    apply_compliance,
    manufactured_case,
)
from elastfem_module.poly_submodule.cells import CartesianCell
from elastfem_module.poly_submodule.poly_field import constant, to_full
from elastfem_module.solver_submodule.saddle_solver import Solution, check_energy_identity
from elastfem_module.utils_module.config import Material
from elastfem_module.utils_module.errors import SolverError
from elastfem_module.utils_module.utils import (
    CONVERGENCE_HEADERS,
    load_progress_from_file,
    save_rows_to_file,
)

SAMPLE_POINTS = np.array([
    [0.5, 0.5, 0.5],
    [0.1, 0.7, 0.3],
    [0.9, 0.2, 0.6],
])

## err_sigma, err_u, err_div per level on the unit cube
PUBLISHED_TABLES = {
    "prism": [
        (1.61682569, 0.21093411, 6.10467990),
        (0.48388087, 0.06461602, 1.74304423),
        (0.12795918, 0.01699145, 0.45537323),
    ],
    "tet": [
        (1.56676383, 0.28991289, 9.20147348),
        (0.78169912, 0.09157813, 2.89615493),
        (0.34907155, 0.02569030, 0.77454646),
    ],
}

## err_sigma the discrete problem gives on levels 1..3 (see README, "Published error tables")
MEASURED_SIGMA = {
    "prism": (1.54545607, 0.44997011, 0.11792110),
    "tet": (1.77984284, 0.80821122, 0.35249477),
}


def constant_stress_case(dim):
    material = Material(dim=dim)
    return ManufacturedCase(
        u=constant(dim, np.zeros(dim)),
        sigma=constant(dim, np.eye(dim)),
        f=constant(dim, np.zeros(dim)),
        material=material,
        cell=CartesianCell(dim),
    )


def fd_divergence(sigma, point, dim, step=1e-5):
    div = np.zeros(dim)
    for b in range(dim):
        shift = step * np.eye(dim)[b]
        plus = to_full(sigma.evaluate(point + shift), sigma.kind)[0]
        minus = to_full(sigma.evaluate(point - shift), sigma.kind)[0]
        div += (plus[:, b] - minus[:, b]) / (2.0 * step)
    return div


def make_row(level, scale):
    return ConvergenceRow(level=level, h=scale, err_sigma_l2=scale, err_u_l2=scale ** 2, err_div_l2=scale)


# =============================================================================
# Manufactured solution
# =============================================================================


class TestManufacturedCase:
    def test_displacement_at_center(self):
        case = manufactured_case(3)
        assert_allclose(case.u.evaluate(SAMPLE_POINTS[:1])[0], [0.25, 0.5, 1.0], rtol=1e-14)

    def test_displacement_at_center_2d(self):
        case = manufactured_case(2)
        assert_allclose(case.u.evaluate(np.array([[0.5, 0.5]]))[0], [1.0, 2.0], rtol=1e-14)

    def test_normal_strain_vanishes_at_center(self):
        strain = manufactured_case(3).strain().evaluate(SAMPLE_POINTS[:1])[0]
        assert_allclose(strain[:3], 0.0, atol=1e-12)

    def test_compliance_inverts_constitutive_law(self):
        case = manufactured_case(3)
        strain = case.strain().evaluate(SAMPLE_POINTS)
        assert_allclose(apply_compliance(case.sigma, case.material).evaluate(SAMPLE_POINTS), strain, atol=1e-12)

    @pytest.mark.parametrize("dim", [2, 3])
    def test_load_is_stress_divergence(self, dim):
        case = manufactured_case(dim)
        for point in SAMPLE_POINTS[:, :dim]:
            expected = fd_divergence(case.sigma, point[None, :], dim)
            assert_allclose(case.f.evaluate(point[None, :])[0], expected, rtol=1e-6, atol=1e-6)

    def test_displacement_vanishes_on_boundary(self):
        case = manufactured_case(3)
        t = np.linspace(0.0, 1.0, 5)
        for a in range(3):
            for value in (0.0, 1.0):
                points = np.column_stack([t, t[::-1], 0.5 * t])
                points[:, a] = value
                assert_allclose(case.u.evaluate(points), 0.0, atol=1e-14)

    def test_material_dimension_checked(self):
        with pytest.raises(ValueError):
            manufactured_case(3, Material(dim=2))
        with pytest.raises(ValueError):
            manufactured_case(1)


# =============================================================================
# Error norms
# =============================================================================


class TestErrorNorms:
    def test_projected_constant_stress_is_exact(self, prism_space_n1):
        case = constant_stress_case(3)
        sigma = project_stress(prism_space_n1, case.sigma)
        solution = Solution(sigma, np.zeros(prism_space_n1.n_u))
        norms = error_norms(prism_space_n1, solution, case)
        assert norms.sigma <= 1e-9
        assert norms.u <= 1e-12
        assert norms.div <= 1e-9

    def test_zero_solution_measures_exact_stress(self, tri_space_n1):
        case = constant_stress_case(2)
        solution = Solution(np.zeros(tri_space_n1.n_sigma), np.zeros(tri_space_n1.n_u))
        assert_allclose(error_norms(tri_space_n1, solution, case).sigma, math.sqrt(2.0), rtol=1e-12)

    def test_conforming_space_is_consistent(self, prism_space_n1):
        case = manufactured_case(3)
        scale = np.linalg.norm(stress_moments(prism_space_n1, case.sigma))
        residual = np.linalg.norm(consistency_functional(prism_space_n1, case))
        assert residual <= 1e-10 * scale


# =============================================================================
# Orders and tables
# =============================================================================


class TestOrders:
    def test_convergence_order(self):
        assert convergence_order(2.0, 1.0) == 1.0
        assert_allclose(convergence_order(1.0, 0.25), 2.0)
        assert convergence_order(0.0, 1.0) == 0.0

    def test_compute_orders(self):
        rows = compute_orders([make_row(1, 1.0), make_row(2, 0.5), make_row(3, 0.25)])
        assert rows[0].order_sigma == 0.0
        assert_allclose([r.order_sigma for r in rows[1:]], [1.0, 1.0])
        assert_allclose([r.order_u for r in rows[1:]], [2.0, 2.0])

    def test_frame_formatting(self):
        frame = convergence_frame(compute_orders([make_row(1, 1.0), make_row(2, 0.5)]))
        assert list(frame.columns) == CONVERGENCE_HEADERS
        assert frame.loc[1, "err_sigma_l2"] == "0.50000000"
        assert frame.loc[1, "order_u"] == "2.00"


# =============================================================================
# Studies
# =============================================================================


class TestConvergenceStudy:
    def test_triangle_study_writes_table(self, run_obj, settings):
        obj = run_obj("tri")
        study = ConvergenceStudy(obj, settings)
        rows = study.run_study(2)
        assert [row.level for row in rows] == [1, 2]
        assert_allclose(rows[1].h, math.sqrt(2.0) / 2.0)
        assert rows[1].err_sigma_l2 < rows[0].err_sigma_l2

        frame = pd.read_csv(study.table_path())
        assert list(frame.columns) == CONVERGENCE_HEADERS
        assert len(frame) == 2
        assert load_progress_from_file(obj)["completed_levels"] == [1, 2]

    def test_resume_reuses_completed_levels(self, run_obj, settings):
        obj = run_obj("tri", resume=True)
        save_rows_to_file(obj, [make_row(1, 9.0).model_dump()])
        rows = ConvergenceStudy(obj, settings).run_study(1)
        assert rows[0].err_sigma_l2 == 9.0

    def test_failure_writes_partial_table(self, run_obj, settings):
        study = ConvergenceStudy(run_obj("tri"), settings)

        def run_level(level):
            if level == 2:
                raise SolverError("did not converge", [1e-3])
            return make_row(level, 1.0)

        study.run_level = run_level
        with pytest.raises(SolverError):
            study.run_study(3)
        frame = pd.read_csv(study.table_path())
        assert frame["level"].tolist() == [1]

    def test_invalid_level_writes_partial_table(self, run_obj, settings):
        study = ConvergenceStudy(run_obj("tri"), settings)

        def run_level(level):
            if level == 3:
                raise ValueError("schur method forms a dense complement")
            return make_row(level, 1.0 / level)

        study.run_level = run_level
        with pytest.raises(ValueError):
            study.run_study(3)
        assert pd.read_csv(study.table_path())["level"].tolist() == [1, 2]

    def test_energy_identity_failure_stops_level(self, run_obj, settings, monkeypatch):
        monkeypatch.setattr(study_module, "check_energy_identity", functools.partial(check_energy_identity, rtol=-1.0))
        study = ConvergenceStudy(run_obj("tri"), settings)
        with pytest.raises(SolverError, match="energy identity"):
            study.run_study(1)
        assert not os.path.exists(study.table_path())

    def test_convergence_study_helper(self, run_obj, settings, tmp_path):
        out = str(tmp_path / "table.csv")
        rows = convergence_study("tri", 1, run_obj("tri", out=out), settings)
        assert len(rows) == 1
        assert os.path.exists(out)

    def test_unknown_element(self, run_obj, settings):
        with pytest.raises(ValueError, match="unknown element"):
            ConvergenceStudy(run_obj("hex"), settings)

    def test_level_guard(self, run_obj, settings):
        with pytest.raises(ValueError):
            ConvergenceStudy(run_obj("tri"), settings).run_study(6)


class TestInfSupStudy:
    def test_triangle_levels(self, run_obj, settings):
        study = InfSupStudy(run_obj("tri"), settings)
        rows = study.run_study(2)
        assert all(row.beta_h > 0.0 for row in rows)
        assert rows[0].beta_h_ablated is None
        assert len(pd.read_csv(study.table_path())) == 2

    def test_ablation_only_for_prism(self, run_obj, settings):
        with pytest.raises(ValueError, match="prism"):
            InfSupStudy(run_obj("tet", ablate_tau3=True), settings)

    def test_prism_ablation_loses_stability(self, run_obj, settings):
        study = InfSupStudy(run_obj("prism", ablate_tau3=True), settings)
        rows = study.run_study(2)
        assert rows[0].beta_h_ablated <= rows[0].beta_h + 1e-8
        assert rows[1].beta_h > 1e-3
        assert rows[1].beta_h_ablated <= 1e-2 * rows[1].beta_h
        assert "beta_h_ablated" in pd.read_csv(study.table_path()).columns


@pytest.mark.acceptance
class TestTriangleRates:
    def test_rates_at_finest_pair(self, run_obj, settings):
        rows = ConvergenceStudy(run_obj("tri", allow_level_5=True), settings).run_study(5)
        for field in ("err_sigma_l2", "err_u_l2", "err_div_l2"):
            errors = [getattr(row, field) for row in rows]
            assert all(fine < coarse for coarse, fine in zip(errors, errors[1:]))
        assert rows[-1].order_u >= 1.8
        assert rows[-1].order_sigma >= 0.9


# =============================================================================
# Published error tables
# =============================================================================


@pytest.mark.slow
@pytest.mark.acceptance
class TestPublishedTables:
    def test_prism_table(self, run_obj, settings):
        rows = ConvergenceStudy(run_obj("prism"), settings).run_study(3)
        published = np.array(PUBLISHED_TABLES["prism"])
        assert_allclose([row.err_u_l2 for row in rows], published[:, 1], rtol=0.02)
        assert_allclose([row.err_div_l2 for row in rows], published[:, 2], rtol=0.02)
        assert_allclose([row.err_sigma_l2 for row in rows], MEASURED_SIGMA["prism"], rtol=1e-6)

        published_orders = np.log2(published[:-1] / published[1:])
        assert_allclose([row.order_sigma for row in rows[1:]], published_orders[:, 0], atol=0.05)
        assert_allclose([row.order_div for row in rows[1:]], published_orders[:, 2], atol=0.05)

    def test_tet_table(self, run_obj, settings):
        rows = ConvergenceStudy(run_obj("tet"), settings).run_study(3)
        published = np.array(PUBLISHED_TABLES["tet"])
        assert_allclose([row.err_sigma_l2 for row in rows], MEASURED_SIGMA["tet"], rtol=1e-6)
        for field in ("err_sigma_l2", "err_u_l2", "err_div_l2"):
            errors = [getattr(row, field) for row in rows]
            assert errors[0] > errors[1] > errors[2]

        # the level-1 gap closes under refinement
        gaps = np.abs(np.array([row.err_sigma_l2 for row in rows]) / published[:, 0] - 1.0)
        assert gaps[0] > gaps[1] > gaps[2]
        assert gaps[2] <= 0.02
        assert abs(rows[2].order_sigma - np.log2(published[1, 0] / published[2, 0])) <= 0.05

    def test_prism_infsup_is_mesh_independent(self, run_obj, settings):
        rows = InfSupStudy(run_obj("prism"), settings).run_study(3)
        betas = [row.beta_h for row in rows]
        assert min(betas) > 1e-3
        assert betas[2] / betas[0] >= 0.5
