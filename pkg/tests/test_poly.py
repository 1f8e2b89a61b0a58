"""Polynomial fields, cell geometry and quadrature."""
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from elastfem_module.elements_submodule.element_verification import numerical_rank
from elastfem_module.poly_submodule.cells import CartesianCell, PrismCell, SimplexCell, exact_simplex_integral
from elastfem_module.poly_submodule.poly_field import (
    PolyField,
    coefficient_matrix,
    constant,
    curl2d,
    divergence,
    eval_field,
    evaluate_fields,
    integrate,
    product,
    symmetric_gradient,
    to_full,
    variable,
    zero,
)
from elastfem_module.poly_submodule.quadrature import MAX_SIMPLEX_DEGREE, REFERENCE_MEASURE, quad_rule

UNIT_TRIANGLE = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
SKEW_TRIANGLE = np.array([[0.1, -0.2], [1.3, 0.1], [0.4, 0.8]])
SKEW_TETRAHEDRON = np.array([[0.0, 0.0, 0.0], [1.2, 0.1, 0.0], [0.3, 0.9, 0.2], [0.1, 0.2, 1.1]])


def fd_divergence(field, cell, x, step=1e-5):
    """Row-wise divergence of a matrix field by central differences."""
    dim = len(x)
    div = np.zeros(dim)
    for b in range(dim):
        e = np.zeros(dim)
        e[b] = step
        d = (eval_field(field, cell, x + e) - eval_field(field, cell, x - e)) / (2.0 * step)
        div += d[:, b]
    return div


def random_monomials(rng, nvar, degree, count):
    found = []
    while len(found) < count:
        exponents = rng.integers(0, degree + 1, size=nvar)
        if exponents.sum() <= degree:
            found.append(exponents)
    return found


# =============================================================================
# Point evaluation
# =============================================================================


class TestEvaluation:
    def test_barycentric_at_centroid(self):
        cell = SimplexCell(UNIT_TRIANGLE)
        assert_allclose(eval_field(variable(3, 1), cell, cell.centroid), 1.0 / 3.0, rtol=1e-14)

    def test_cubic_bubble_at_centroid(self):
        cell = SimplexCell(SKEW_TRIANGLE)
        bubble = product(*(variable(3, k) for k in range(3)))
        assert_allclose(eval_field(bubble, cell, cell.centroid), 1.0 / 27.0, rtol=1e-13)

    def test_axial_variable_on_prism(self):
        cell = PrismCell(UNIT_TRIANGLE, 0.0, 1.0)
        xi = variable(4, 3)
        field = xi * (constant(4, 1.0) - xi)
        assert_allclose(eval_field(field, cell, [0.2, 0.2, 0.5]), 0.25, rtol=1e-14)

    def test_matrix_field_returns_full_matrix(self):
        cell = SimplexCell(UNIT_TRIANGLE)
        field = constant(3, np.array([[1.0, 2.0], [2.0, 3.0]]))
        assert_allclose(eval_field(field, cell, [0.2, 0.3]), [[1.0, 2.0], [2.0, 3.0]])

    def test_point_outside_cell(self):
        cell = SimplexCell(UNIT_TRIANGLE)
        with pytest.raises(ValueError, match="outside"):
            eval_field(variable(3, 0), cell, [2.0, 2.0])

    def test_reference_round_trip(self, rng):
        cell = SimplexCell(SKEW_TETRAHEDRON)
        points = rng.uniform(0.0, 1.0, size=(5, 3))
        assert_allclose(cell.to_physical(cell.to_reference(points)), points, atol=1e-14)

    def test_evaluate_fields_stacks(self):
        fields = [variable(3, 0), variable(3, 1), constant(3, 2.0)]
        values = evaluate_fields(fields, np.array([[0.2, 0.3, 0.5]]))
        assert values.shape == (3, 1, 1)
        assert_allclose(values[:, 0, 0], [0.2, 0.3, 2.0])


# =============================================================================
# Arithmetic and structure
# =============================================================================


class TestArithmetic:
    def test_compact_merges_terms(self):
        field = variable(3, 0) + variable(3, 0) - variable(3, 0)
        assert field.n_terms == 1
        assert_allclose(field.coefficients, [[1.0]])

    def test_difference_with_itself_is_zero(self):
        field = variable(3, 0) * variable(3, 1)
        assert (field - field).n_terms == 0

    def test_scalar_times_matrix(self):
        field = variable(3, 2).times(np.array([[1.0, 0.5], [0.5, 2.0]]))
        assert field.kind == "sym2"
        assert_allclose(field.coefficients, [[1.0, 2.0, 0.5]])

    def test_sym3_component_order(self):
        matrix = np.array([[1.0, 4.0, 5.0], [4.0, 2.0, 6.0], [5.0, 6.0, 3.0]])
        field = constant(4, matrix)
        assert field.kind == "sym3"
        assert_allclose(field.coefficients, [[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]])
        assert_allclose(to_full(field.coefficients[0], "sym3"), matrix)

    def test_partial_degree(self):
        xi = variable(4, 3)
        field = variable(4, 0) * variable(4, 1) * xi * xi
        assert field.partial_degree([0, 1, 2]) == 2
        assert field.partial_degree([3]) == 2
        assert field.degree == 4
        assert zero(4).degree == -1

    def test_adding_different_kinds(self):
        with pytest.raises(ValueError):
            variable(3, 0).times(np.ones(2)) + constant(3, np.eye(2))

    def test_variable_count_mismatch(self):
        with pytest.raises(ValueError):
            variable(3, 0) + variable(4, 0)

    def test_times_needs_scalar(self):
        with pytest.raises(ValueError):
            constant(3, np.eye(2)).times(np.ones(2))

    def test_non_symmetric_matrix(self):
        with pytest.raises(ValueError, match="symmetric"):
            constant(3, np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_negative_exponents(self):
        with pytest.raises(ValueError):
            PolyField(np.array([[-1, 0, 0]]), np.array([[1.0]]))


# =============================================================================
# Calculus
# =============================================================================


class TestCalculus:
    def test_divergence_matches_finite_differences(self):
        cell = SimplexCell(SKEW_TRIANGLE)
        lam = [variable(3, k) for k in range(3)]
        field = (lam[1] * lam[2]).times(np.array([[1.0, 2.0], [2.0, 3.0]])) + lam[0].times(
            np.array([[0.5, 0.0], [0.0, -1.0]])
        )
        div = divergence(field, cell)
        for bary in ([0.3, 0.3, 0.4], [0.6, 0.2, 0.2], [0.15, 0.5, 0.35]):
            x = np.array(bary) @ cell.vertices
            assert_allclose(div.evaluate(np.array([bary]))[0], fd_divergence(field, cell, x), rtol=1e-6, atol=1e-8)

    def test_prism_divergence_matches_finite_differences(self):
        cell = PrismCell(SKEW_TRIANGLE, 0.2, 0.7)
        xi = variable(4, 3)
        matrix = np.array([[1.0, 0.5, -0.3], [0.5, 2.0, 0.7], [-0.3, 0.7, 1.5]])
        field = (xi * variable(4, 1) * variable(4, 0)).times(matrix)
        div = divergence(field, cell)
        ref = np.array([[0.4, 0.3, 0.3, 0.5]])
        x = cell.to_physical(ref)[0]
        assert_allclose(div.evaluate(ref)[0], fd_divergence(field, cell, x), rtol=1e-6, atol=1e-8)

    def test_divergence_of_constant_vanishes(self):
        cell = SimplexCell(SKEW_TETRAHEDRON)
        div = divergence(constant(4, np.eye(3)), cell)
        assert div.n_terms == 0
        assert_allclose(div.evaluate(np.array([[0.25, 0.25, 0.25, 0.25]])), 0.0)

    def test_divergence_of_curl_vanishes(self):
        cell = SimplexCell(SKEW_TRIANGLE)
        bubble = product(*(variable(3, k) for k in range(3)))
        div = divergence(curl2d(bubble, cell), cell)
        points = quad_rule("triangle", 4).points
        assert_allclose(div.evaluate(points), 0.0, atol=1e-12)

    def test_symmetric_gradient_of_rotation_vanishes(self):
        cell = CartesianCell(2)
        x, y = variable(2, 0), variable(2, 1)
        rotation = (-y).times(np.array([1.0, 0.0])) + x.times(np.array([0.0, 1.0]))
        assert symmetric_gradient(rotation, cell).n_terms == 0

    def test_wrong_cell_dimension(self):
        with pytest.raises(ValueError):
            divergence(constant(3, np.eye(2)), SimplexCell(SKEW_TETRAHEDRON))


# =============================================================================
# Integration and quadrature
# =============================================================================


class TestIntegration:
    def test_exact_barycentric_integrals(self):
        cell = SimplexCell(UNIT_TRIANGLE)
        assert_allclose(exact_simplex_integral([0, 1, 0], cell), 1.0 / 6.0)
        assert_allclose(exact_simplex_integral([0, 1, 1], cell), cell.volume / 12.0)
        assert_allclose(exact_simplex_integral([1, 1, 1, 1], 1.0), 6.0 / math.factorial(7))

    def test_integrate_matches_closed_form(self):
        cell = SimplexCell(SKEW_TETRAHEDRON)
        field = variable(4, 0) * variable(4, 2) * variable(4, 2)
        assert_allclose(integrate(field, cell)[0], exact_simplex_integral([1, 0, 2, 0], cell), rtol=1e-13)

    def test_prism_monomial(self):
        cell = PrismCell(SKEW_TRIANGLE, 0.0, 2.0)
        field = variable(4, 1) * variable(4, 1) * variable(4, 3)
        assert_allclose(integrate(field, cell)[0], cell.exact_monomial_integral([0, 2, 0, 1]), rtol=1e-13)

    @pytest.mark.parametrize("kind", ["interval", "triangle", "tetrahedron", "prism"])
    @pytest.mark.parametrize("degree", [0, 3, 8, 13])
    def test_weights_sum_to_reference_measure(self, kind, degree):
        rule = quad_rule(kind, degree)
        assert_allclose(rule.weights.sum(), REFERENCE_MEASURE[kind], rtol=1e-14)
        assert np.all(rule.weights > 0.0)

    def test_interval_point_count(self):
        assert quad_rule("interval", 13).n_points == 7

    def test_triangle_degree_12_monomial(self):
        rule = quad_rule("triangle", 12)
        value = rule.weights @ np.prod(rule.points ** 4, axis=1)
        assert_allclose(value, exact_simplex_integral([4, 4, 4], 0.5), rtol=1e-12)

    def test_tetrahedron_degree_8_monomials(self, rng):
        rule = quad_rule("tetrahedron", 8)
        for exponents in random_monomials(rng, 4, 8, 50):
            value = rule.weights @ np.prod(rule.points ** exponents, axis=1)
            assert_allclose(value, exact_simplex_integral(exponents, 1.0 / 6.0), rtol=1e-12)

    def test_tetrahedron_degree_14(self):
        rule = quad_rule("tetrahedron", MAX_SIMPLEX_DEGREE)
        exponents = np.array([4, 3, 5, 2])
        value = rule.weights @ np.prod(rule.points ** exponents, axis=1)
        assert_allclose(value, exact_simplex_integral(exponents, 1.0 / 6.0), rtol=1e-11)

    @pytest.mark.parametrize("kind", ["triangle", "tetrahedron", "prism"])
    def test_unsupported_degree(self, kind):
        with pytest.raises(ValueError, match="unsupported quadrature degree"):
            quad_rule(kind, MAX_SIMPLEX_DEGREE + 1)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            quad_rule("hexahedron", 2)


# =============================================================================
# Cells and rank oracles
# =============================================================================


class TestCells:
    def test_simplex_volume_and_gradients(self):
        cell = SimplexCell(SKEW_TETRAHEDRON)
        assert_allclose(cell.volume, abs(np.linalg.det((SKEW_TETRAHEDRON[1:] - SKEW_TETRAHEDRON[0]).T)) / 6.0)
        assert_allclose(cell.gradients.sum(axis=0), 0.0, atol=1e-14)

    def test_degenerate_simplex(self):
        with pytest.raises(ValueError, match="degenerate"):
            SimplexCell(np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]))

    def test_prism_interval_must_be_positive(self):
        with pytest.raises(ValueError):
            PrismCell(UNIT_TRIANGLE, 1.0, 1.0)

    def test_prism_volume(self):
        cell = PrismCell(UNIT_TRIANGLE, 0.25, 0.75)
        assert_allclose(cell.volume, 0.25)
        assert cell.nvar == 4


class TestCoefficientMatrix:
    def test_partition_of_unity_is_dependent(self):
        one = constant(3, 1.0)
        lam_sum = variable(3, 0) + variable(3, 1) + variable(3, 2)
        assert numerical_rank(coefficient_matrix([one, lam_sum], 3)) == 1

    def test_barycentric_monomials_are_independent(self):
        lam = [variable(3, k) for k in range(3)]
        fields = lam + [lam[0] * lam[1], lam[1] * lam[2], lam[0] * lam[2]]
        assert numerical_rank(coefficient_matrix(fields, 3)) == 6
