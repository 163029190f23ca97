"""Tests for the small building blocks: symmetry groups, nonlinearities, differences, records."""

import numpy as np
import pytest

from nonlocal_spikes.components import differentiation
from nonlocal_spikes.components.check_result import ClauseResult
from nonlocal_spikes.components.constants import MAX_HISTORY_LENGTH
from nonlocal_spikes.components.errors import ConfigError, KernelError
from nonlocal_spikes.components.iteration_record import IterationHistory, IterationRecord
from nonlocal_spikes.components.nonlinearity import Nonlinearity, PolynomialNonlinearity
from nonlocal_spikes.components.symmetry import SymmetryGroup


class TestSymmetryGroup:
    """Test SymmetryGroup class."""

    @pytest.mark.parametrize(
        ("name", "n", "order"),
        [
            ("inversion", 1, 2),
            ("inversion", 3, 2),
            ("reflections", 2, 4),
            ("reflections", 3, 8),
            ("hyperoctahedral", 2, 8),
            ("hyperoctahedral", 3, 48),
        ],
    )
    def test_named_group_orders(self, name, n, order):
        """Test the closure of the standard generator sets."""
        group = SymmetryGroup.named(name, n)
        assert group.order == order
        assert group.contains_inversion()
        assert group.fixes_only_origin()

    def test_rejects_non_signed_permutations(self):
        """Test generator validation."""
        with pytest.raises(KernelError):
            SymmetryGroup([[[2, 0], [0, 1]]])
        with pytest.raises(KernelError):
            SymmetryGroup([[[1, 1], [0, 1]]])
        with pytest.raises(KernelError):
            SymmetryGroup([[[1, 0], [0, 1]], [[1]]])

    def test_empty_generators_need_dimension(self):
        """Test the trivial group."""
        with pytest.raises(KernelError):
            SymmetryGroup([])
        group = SymmetryGroup([], 2)
        assert group.order == 1
        assert group.fixed_subspace_dim() == 2

    def test_unknown_name(self):
        """Test that an unknown group name is rejected."""
        with pytest.raises(KernelError):
            SymmetryGroup.named("octahedral", 3)

    def test_to_dict(self):
        """Test the serialized group."""
        info = SymmetryGroup.named("reflections", 2).to_dict()
        assert info["order"] == 4
        assert info["fixed_subspace_dim"] == 0
        assert info["fixes_only_origin"]
        assert len(info["generators"]) == 2


class TestPolynomialNonlinearity:
    """Test polynomial nonlinearities and their exact derivatives."""

    def test_evaluate_quadratic(self, quadratic_nonlinearity):
        """Test N(u; mu) = -mu u + u^2 on a field."""
        U = np.array([[0.0, 1.0, 2.0]])
        values = quadratic_nonlinearity(U, 0.5)
        assert np.allclose(values, [[0.0, 0.5, 3.0]])

    def test_exact_derivatives(self, quadratic_nonlinearity):
        """Test jacobian, mixed and second derivatives."""
        U = np.array([[0.3]])
        N = quadratic_nonlinearity

        assert N.has_analytic_derivatives
        assert N.jacobian(U, 0.2)[0, 0, 0] == pytest.approx(-0.2 + 0.6)
        assert N.mixed(U, 0.2)[0, 0, 0] == pytest.approx(-1.0)
        assert N.second(U, 0.2)[0, 0, 0, 0] == pytest.approx(2.0)
        assert N.third(U, 0.2)[0, 0, 0, 0, 0] == pytest.approx(0.0)

    def test_two_component_jacobian(self):
        """Test cross terms of a k = 2 table."""
        N = PolynomialNonlinearity.from_table(
            [
                [{"coef": 1.0, "powers": [1, 1]}],
                [{"coef": 3.0, "powers": [2, 0]}],
            ]
        )
        J = N.jacobian(np.array([[2.0], [5.0]]), 0.0)[..., 0]
        assert np.allclose(J, [[5.0, 2.0], [12.0, 0.0]])

    def test_power_count_must_match_k(self):
        """Test that a term with the wrong number of powers is rejected."""
        with pytest.raises(ConfigError):
            PolynomialNonlinearity.from_table([[{"coef": 1.0, "powers": [1, 0]}]])
        with pytest.raises(ConfigError):
            PolynomialNonlinearity.from_table([[{"coef": 1.0, "powers": [-1]}]])

    def test_finite_difference_jacobian(self):
        """Test the fallback jacobian of a generic nonlinearity."""
        N = Nonlinearity(1, lambda U, mu: np.sin(U) - mu * U)
        U = np.array([[0.4, -1.1]])
        J = N.jacobian(U, 0.3)

        assert not N.has_analytic_derivatives
        assert np.allclose(J[0, 0], np.cos(U[0]) - 0.3, atol=1e-8)

    def test_parameter_map(self, quadratic_nonlinearity):
        """Test N(offset + V; mu_map(mu))."""
        shifted = quadratic_nonlinearity.with_parameter_map(
            offset=np.array([1.0]), mu_map=lambda m: 2.0 * m
        )
        value = shifted(np.array([[1.0]]), 0.25)
        assert value[0, 0] == pytest.approx(-0.5 * 2.0 + 4.0)


class TestDifferentiation:
    """Test the finite-difference helpers."""

    def test_richardson_improves_second_difference(self):
        """Test extrapolation of the second difference of exp."""
        steps = [0.1, 0.05, 0.025]
        values = [differentiation.second(np.exp, h) for h in steps]
        best, margin = differentiation.richardson(values)

        assert abs(best - 1.0) < 1e-8
        assert abs(best - 1.0) < abs(values[-1] - 1.0)
        assert margin > 0

    def test_third_and_mixed(self):
        """Test third and mixed central differences."""
        assert differentiation.third(lambda s: s**3, 1e-2) == pytest.approx(6.0)
        assert differentiation.mixed_second(lambda s, t: s * t + s * s, 1e-3) == pytest.approx(1.0)

    def test_hessian_of_quadratic_form(self):
        """Test the Hessian of x^T A x."""
        A = np.array([[2.0, 0.5], [0.5, 1.0]])
        H, margin = differentiation.richardson_hessian(lambda x: x @ A @ x, 2, 1e-2)

        assert np.allclose(H, 2.0 * A, atol=1e-8)
        assert margin < 1e-6


class TestRecords:
    """Test ClauseResult and the iteration history."""

    def test_clause_result(self):
        """Test the serialized clause outcome."""
        result = ClauseResult("minimal_nullspace", False, "I + K_hat(0) is invertible", code="no_nullspace")

        assert result.id == "minimal_nullspace_no_nullspace"
        assert result.to_dict()["passed"] is False
        assert result.to_dict()["id"] == result.id
        assert "FAIL" in str(result)

    def test_history_is_bounded(self):
        """Test that old records are dropped."""
        history = IterationHistory("outer")
        for i in range(MAX_HISTORY_LENGTH + 5):
            history.record(i, 1.0 / (i + 1))

        assert len(history) == MAX_HISTORY_LENGTH
        assert history.records[0].iteration == 5
        assert history.is_monotone()

    def test_history_monotonicity(self):
        """Test detection of a residual increase."""
        history = IterationHistory("inner")
        history.record(0, 1.0)
        history.record(1, 2.0)

        assert not history.is_monotone()
        assert IterationRecord(3, 0.1, 0.2).to_dict() == {"iteration": 3, "residual": 0.1, "step": 0.2}
