"""Tests for the preset problems."""

import numpy as np
import pytest

from nonlocal_spikes.components.errors import ConfigError
from nonlocal_spikes.presets import PRESETS, preset
from nonlocal_spikes.spike_solver import SpikeSolver


def preset_solver(name, params=None):
    config = {
        "dimension": 1,
        "preset": {"name": name, "params": params or {}},
        "symmetry": {"named": "inversion"},
        "grid": {"L": 30.0, "N": 256},
    }
    return SpikeSolver(config)


class TestPresets:
    """Test preset lookup and construction."""

    def test_unknown_preset(self):
        """Test that the error lists the available presets."""
        with pytest.raises(ConfigError) as err:
            preset("swift_hohenberg")

        assert "exponential" in err.value.message
        assert err.value.details["available"] == sorted(PRESETS)

    @pytest.mark.parametrize("name", sorted(PRESETS))
    def test_kernel_matches_nonlinearity(self, name):
        """Test that every preset has consistent component counts."""
        problem = preset(name)

        assert len(problem.kernel) == problem.k
        assert all(len(row) == problem.k for row in problem.kernel)
        assert problem.to_dict()["name"] == name

    def test_cubic_order(self):
        """Test that the cubic preset asks for the cubic scaling."""
        assert preset("nls_cubic").order == 3
        assert preset("exponential").order == 2

    def test_cahn_morral_fold(self):
        """Test the fold of u - u^3 at u = 1/sqrt(3)."""
        fold = preset("cahn_morral_like").notes["fold"]
        state = 1.0 / np.sqrt(3.0)

        assert fold["state"] == pytest.approx(state, rel=1e-12)
        assert fold["mu"] == pytest.approx(state - state**3, rel=1e-12)
        assert fold["mu_sign"] == -1

    def test_neural_field_fold(self):
        """Test theta U (1 - U) = 1 at both folds of the sigmoid."""
        lower = preset("neural_field", params={"theta": 10.0}).notes["fold"]
        upper = preset("neural_field", params={"theta": 10.0, "fold": "upper"}).notes["fold"]

        for fold in (lower, upper):
            assert 10.0 * fold["state"] * (1.0 - fold["state"]) == pytest.approx(1.0, rel=1e-10)
        assert lower["state"] < 0.5 < upper["state"]

    def test_neural_field_needs_steep_sigmoid(self):
        """Test that theta <= 4 has no fold."""
        with pytest.raises(ConfigError):
            preset("neural_field", params={"theta": 4.0})

    def test_grid_family_rejected(self):
        """Test that presets need an analytic kernel family."""
        with pytest.raises(ConfigError):
            preset("exponential", params={"family": "grid"})

    def test_algebraic_family(self):
        """Test that an algebraic family carries its power."""
        problem = preset("exponential", params={"family": "algebraic", "p": 3.0})
        assert problem.kernel[0][0]["p"] == 3.0


class TestPresetHypotheses:
    """Test that the presets satisfy the hypotheses in one dimension."""

    @pytest.mark.parametrize("name", ["exponential", "nls_cubic", "cahn_morral_like", "two_component"])
    def test_hypotheses_hold(self, name):
        """Test every clause including nondegeneracy on the even subspace."""
        solver = preset_solver(name)
        checker = solver.check_hypotheses()

        assert checker.passed, checker.report()
        assert solver.bifurcation is not None
        assert solver.bifurcation.order == solver.order

    def test_two_component_null_vector(self):
        """Test that the critical direction is the first component."""
        solver = preset_solver("two_component")
        solver.check_hypotheses()

        assert np.allclose(np.abs(solver.bifurcation.e), [1.0, 0.0])
