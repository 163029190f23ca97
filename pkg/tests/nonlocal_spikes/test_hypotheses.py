"""Tests for the hypothesis checks."""

import numpy as np
import pytest

from nonlocal_spikes.components.errors import (
    CriticalityViolation,
    DegenerateQuadratic,
    DegenerateUnfolding,
    ExcessNullspace,
    IndefiniteHessian,
    InvertibilityViolation,
    NoNullspace,
)
from nonlocal_spikes.components.hypotheses import (
    ConstantBranch,
    HypothesisChecker,
    effective_hessian,
    fourier_determinant_scan,
    null_vectors,
    raw_hessian,
    saddle_node_to_transcritical,
    tc_coefficients,
    transcritical_from_fold,
)
from nonlocal_spikes.components.kernel import AnalyticEntry, KernelSpec
from nonlocal_spikes.components.nonlinearity import Nonlinearity, PolynomialNonlinearity
from nonlocal_spikes.components.symmetry import SymmetryGroup


def scalar_kernel(amplitude, family="exponential", n=1, width=1.0):
    return KernelSpec([[AnalyticEntry(family, n, amplitude, width)]])


def polynomial(*terms):
    return PolynomialNonlinearity.from_table([[dict(t) for t in terms]])


class TestNullVectors:
    """Test the null vector search of I + K_hat(0)."""

    def test_scalar_null_vector(self, exponential_kernel):
        """Test e = e* = 1 for a kernel of mass -1."""
        e, e_star = null_vectors(exponential_kernel)
        assert e.tolist() == pytest.approx([1.0])
        assert e_star.tolist() == pytest.approx([1.0])

    def test_no_nullspace(self):
        """Test that mass -0.9 leaves I + K_hat(0) invertible."""
        with pytest.raises(NoNullspace):
            null_vectors(scalar_kernel(-0.9))

    def test_excess_nullspace(self):
        """Test that two critical components are rejected."""
        entry = AnalyticEntry("exponential", 1, -1.0)
        K = KernelSpec([[entry, None], [None, AnalyticEntry("exponential", 1, -1.0)]])
        with pytest.raises(ExcessNullspace):
            null_vectors(K)

    def test_two_component_pairing(self):
        """Test the normalization <e, e*> = 1 for a coupled system."""
        K = KernelSpec(
            [
                [AnalyticEntry("exponential", 1, -1.0), AnalyticEntry("gaussian", 1, 0.5)],
                [None, AnalyticEntry("exponential", 1, -0.5)],
            ]
        )
        e, e_star = null_vectors(K)
        T = np.eye(2) + K.mass()

        assert e @ e_star == pytest.approx(1.0)
        assert np.max(np.abs(T @ e)) < 1e-12
        assert np.max(np.abs(T.T @ e_star)) < 1e-12


class TestHessianAndScan:
    """Test the projected second moments and the determinant scan."""

    def test_raw_hessian_of_exponential(self, exponential_kernel):
        """Test S = -<e*, M2 e> = 2 for K = -1/2 exp(-|x|)."""
        S, margin = raw_hessian(exponential_kernel, np.ones(1), np.ones(1))
        assert S[0, 0] == pytest.approx(2.0)
        assert margin == 0.0

        S_eff, sign_flip = effective_hessian(exponential_kernel, np.ones(1), np.ones(1))
        assert not sign_flip
        assert S_eff[0, 0] == pytest.approx(2.0)

    def test_negative_hessian_flips_sign(self):
        """Test that a negative definite Hessian is negated."""
        K = KernelSpec([[AnalyticEntry("exponential", 1, 1.0)]])
        S_eff, sign_flip = effective_hessian(K, np.ones(1), np.ones(1))

        assert sign_flip
        assert S_eff[0, 0] == pytest.approx(2.0)

    def test_indefinite_hessian(self):
        """Test a two-dimensional kernel with opposite curvature per axis."""
        K = KernelSpec(
            [[AnalyticEntry("gaussian", 2, -2.0, width=[1.0, 1.0])]]
        )
        S, _ = raw_hessian(K, np.ones(1), np.ones(1))
        assert np.allclose(S, 2.0 * np.eye(2))

        def fake(K, e, e_star):
            return np.diag([1.0, -1.0]), 0.0

        with pytest.MonkeyPatch.context() as mp:
            mp.setattr("nonlocal_spikes.components.hypotheses.raw_hessian", fake)
            with pytest.raises(IndefiniteHessian):
                effective_hessian(K, np.ones(1), np.ones(1))

    def test_scan_of_exponential(self, exponential_kernel):
        """Test that D(xi) = xi^2 / (1 + xi^2) stays away from zero."""
        report = fourier_determinant_scan(exponential_kernel)

        assert report.min_abs == pytest.approx(0.2, rel=1e-6)
        assert report.quadratic_coefficient == pytest.approx(1.0, rel=1e-6)
        assert report.roots == []

    def test_scan_finds_root(self):
        """Test that K = -exp(-|x|) has det(I + K_hat) = 0 at |xi| = 1."""
        with pytest.raises(InvertibilityViolation) as excinfo:
            fourier_determinant_scan(scalar_kernel(-2.0))

        roots = excinfo.value.details["roots"]
        assert any(abs(abs(r[0]) - 1.0) < 1e-8 for r in roots)
        assert excinfo.value.code == "invertibility_violation"


class TestCoefficients:
    """Test criticality and the transcritical coefficients."""

    def test_quadratic_coefficients(self):
        """Test alpha = 1, beta = -1 for N = mu u - u^2."""
        N = polynomial({"coef": 1.0, "mu": 1, "powers": [1]}, {"coef": -1.0, "powers": [2]})
        coefficients = tc_coefficients(N, np.ones(1), np.ones(1))
        alpha, beta = coefficients

        assert alpha == pytest.approx(1.0)
        assert beta == pytest.approx(-1.0)
        assert coefficients.gamma is None
        assert coefficients.margins["beta"] < 1e-6

    def test_cubic_degenerates_at_order_two(self):
        """Test that N = mu u - u^3 has no quadratic part."""
        N = polynomial({"coef": 1.0, "mu": 1, "powers": [1]}, {"coef": -1.0, "powers": [3]})
        with pytest.raises(DegenerateQuadratic):
            tc_coefficients(N, np.ones(1), np.ones(1))

        coefficients = tc_coefficients(N, np.ones(1), np.ones(1), order=3)
        assert coefficients.gamma == pytest.approx(-1.0)

    def test_missing_unfolding(self):
        """Test that alpha = 0 is rejected."""
        N = polynomial({"coef": 1.0, "powers": [2]})
        with pytest.raises(DegenerateUnfolding):
            tc_coefficients(N, np.ones(1), np.ones(1))

    def test_criticality_and_trivial_state(self):
        """Test N(0; mu) = 0 and D_U N(0; 0) = 0."""
        linear = polynomial({"coef": 0.5, "powers": [1]}, {"coef": 1.0, "powers": [2]})
        with pytest.raises(CriticalityViolation):
            tc_coefficients(linear, np.ones(1), np.ones(1))

        shifted = polynomial({"coef": 1.0, "mu": 1, "powers": [0]}, {"coef": 1.0, "powers": [2]})
        with pytest.raises(CriticalityViolation):
            tc_coefficients(shifted, np.ones(1), np.ones(1))

    def test_finite_difference_coefficients(self):
        """Test coefficients of a nonlinearity without analytic derivatives."""
        N = Nonlinearity(1, lambda U, mu: -mu * U + U**2 + U**4)
        alpha, beta = tc_coefficients(N, np.ones(1), np.ones(1))

        assert alpha == pytest.approx(-1.0, abs=1e-6)
        assert beta == pytest.approx(1.0, abs=1e-6)


class TestFoldUnfolding:
    """Test the saddle-node to transcritical transformation."""

    def test_closed_form_branch(self):
        """Test shifting along a known constant branch."""
        N = polynomial({"coef": 1.0, "mu": 1, "powers": [0]}, {"coef": -1.0, "powers": [2]})
        # U + (-1) U = mu - U^2 has constants U = +-sqrt(mu)
        branch = ConstantBranch(N, [[-1.0]], closed_form=lambda mu_t: [mu_t])
        shifted = saddle_node_to_transcritical(N, branch)

        assert shifted(np.zeros((1, 3)), 0.3) == pytest.approx(np.zeros((1, 3)))
        assert branch.parameter(0.3) == pytest.approx(0.09)

    def test_root_found_branch(self):
        """Test the Newton branch of U - U^3 - mu = 0 near its fold."""
        base = Nonlinearity(1, lambda U, mu: U - U**3 - mu)
        state = 1.0 / np.sqrt(3.0)
        mu_fold = state - state**3
        tangent = np.sqrt(2.0 * 1.0 / (6.0 * state))
        N = transcritical_from_fold(base, [[-1.0]], [state], mu_fold, [tangent], mu_sign=-1.0)

        assert np.max(np.abs(N(np.zeros((1, 2)), 0.05))) < 1e-12
        assert np.max(np.abs(N.jacobian(np.zeros((1, 1)), 0.0))) < 1e-6

    def test_fold_passes_the_checker(self):
        """Test that the unfolded nonlinearity satisfies every clause."""
        base = Nonlinearity(1, lambda U, mu: U - U**3 - mu)
        state = 1.0 / np.sqrt(3.0)
        tangent = np.sqrt(1.0 / (3.0 * state))
        N = transcritical_from_fold(base, [[-1.0]], [state], state - state**3, [tangent], mu_sign=-1.0)
        checker = HypothesisChecker(scalar_kernel(-1.0, "gaussian"), N)

        assert checker.run() is not None
        assert checker.passed


class TestHypothesisChecker:
    """Test HypothesisChecker class."""

    def test_all_clauses_pass(self, exponential_kernel, quadratic_nonlinearity, inversion_1d):
        """Test the scalar exponential problem."""
        checker = HypothesisChecker(exponential_kernel, quadratic_nonlinearity, inversion_1d)
        data = checker.run()

        assert checker.passed
        assert data is not None
        assert data.alpha == pytest.approx(-1.0)
        assert data.beta == pytest.approx(1.0)
        assert not data.sign_flip
        assert data.alpha_scheme == pytest.approx(1.0)
        assert data.beta_scheme == pytest.approx(-1.0)
        assert data.T0[0, 0] == pytest.approx(1.0)
        assert data.epsilon(0.01) == pytest.approx(0.1)
        clauses = [r.clause for r in checker.results]
        assert "fourier_determinant" in clauses
        assert "normalization" in clauses

    def test_report_lists_failure(self, quadratic_nonlinearity):
        """Test that a failing clause is reported with its code."""
        checker = HypothesisChecker(scalar_kernel(-0.9), quadratic_nonlinearity)

        assert checker.run() is None
        report = checker.report()
        assert report["passed"] is False
        assert report["error"]["code"] == "no_nullspace"
        assert isinstance(checker.first_failure, NoNullspace)
        with pytest.raises(NoNullspace):
            checker.raise_if_failed()

    def test_degenerate_quadratic_clause(self, exponential_kernel):
        """Test that N = mu u - u^3 fails at order 2 and passes at order 3."""
        N = polynomial({"coef": 1.0, "mu": 1, "powers": [1]}, {"coef": -1.0, "powers": [3]})

        checker = HypothesisChecker(exponential_kernel, N)
        assert checker.run() is None
        assert checker.report()["error"]["code"] == "degenerate_quadratic"

        cubic = HypothesisChecker(exponential_kernel, N, order=3)
        data = cubic.run()
        assert data is not None
        assert data.gamma == pytest.approx(-1.0)
        assert data.amplitude_exponent == 1

    def test_symmetry_clause(self):
        """Test a kernel that breaks the configured group."""
        K = KernelSpec([[AnalyticEntry("gaussian", 2, -1.0, width=[1.0, 2.0])]])
        N = PolynomialNonlinearity.from_table(
            [[{"coef": -1.0, "mu": 1, "powers": [1]}, {"coef": 1.0, "powers": [2]}]]
        )
        checker = HypothesisChecker(K, N, SymmetryGroup.named("hyperoctahedral", 2))

        assert checker.run() is None
        assert checker.report()["error"]["code"] == "symmetry_violation"

    def test_anisotropic_normalization(self):
        """Test T0 for an anisotropic kernel."""
        K = KernelSpec([[AnalyticEntry("gaussian", 2, -1.0, width=[1.0, 2.0])]])
        N = PolynomialNonlinearity.from_table(
            [[{"coef": -1.0, "mu": 1, "powers": [1]}, {"coef": 1.0, "powers": [2]}]]
        )
        data = HypothesisChecker(K, N, SymmetryGroup.named("reflections", 2)).run()

        assert data is not None
        assert np.allclose(data.S_eff, np.diag([1.0, 4.0]))
        assert np.allclose(data.T0, np.diag([np.sqrt(0.5), np.sqrt(2.0)]))
