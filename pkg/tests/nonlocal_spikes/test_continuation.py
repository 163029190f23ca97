"""Tests for sweeps, slope fits, tail classification and periodic studies."""

import numpy as np
import pytest

from nonlocal_spikes.components.continuation import (
    PeriodicReport,
    fit_slope,
    periodic_grid,
    sweep,
    tail_analysis,
)
from nonlocal_spikes.components.errors import AllFailed, ConfigError, MaxIterations, WindowUnderResolved
from nonlocal_spikes.components.grid import UniformGrid
from nonlocal_spikes.spike_solver import SpikeSolver


class FailingSolver:
    """Solver stub whose every solve diverges."""

    def __init__(self):
        self.grid_z = UniformGrid(1, 10.0, 32)
        self.calls = []

    def solve(self, mu, w0=None, grid_z=None):
        self.calls.append(mu)
        raise MaxIterations(f"diverged at {mu}")


@pytest.fixture(scope="module")
def short_sweep(solver_1d):
    return solver_1d.sweep([0.02, 0.01, 0.005])


@pytest.fixture(scope="module")
def algebraic_solver():
    config = {
        "dimension": 1,
        "preset": {"name": "exponential", "params": {"family": "algebraic", "p": 2.0}},
        "symmetry": {"named": "inversion"},
        "grid": {"L": 40.0, "N": 512},
    }
    solver = SpikeSolver(config)
    solver.check_hypotheses()
    return solver


class TestFitSlope:
    """Test the log-log slope fit."""

    def test_power_law(self):
        """Test an exact power law."""
        x = [0.1, 0.05, 0.025, 0.0125]
        assert fit_slope(x, [v**2 for v in x]) == pytest.approx(2.0)

    def test_first_point_is_skipped(self):
        """Test that a pre-asymptotic first point does not bias the fit."""
        x = [0.1, 0.05, 0.025]
        y = [1.0, 0.05, 0.025]
        assert fit_slope(x, y) == pytest.approx(1.0)
        assert fit_slope(x, y, skip_first=False) != pytest.approx(1.0)

    def test_degenerate_input(self):
        """Test that too few positive samples give no slope."""
        assert fit_slope([0.1], [0.2]) is None
        assert fit_slope([0.1, 0.05, 0.02], [0.0, -1.0, 0.3]) is None


class TestSweep:
    """Test the continuation in mu."""

    def test_amplitude_scales_linearly(self, short_sweep):
        """Test max |U| ~ mu for the quadratic scaling."""
        assert short_sweep.mu_values == [0.02, 0.01, 0.005]
        assert short_sweep.fitted_slopes["amplitude_vs_mu"] == pytest.approx(1.0, abs=0.1)
        assert short_sweep.largest_converged() == 0.02
        assert not short_sweep.failures

    def test_warm_starts(self, short_sweep):
        """Test that every point after the first reuses the previous corrector."""
        assert [e.warm for e in short_sweep.entries] == [False, True, True]

    def test_scalar_problem_has_no_hyperbolic_norm(self, short_sweep):
        """Test that v_h vanishes identically when k = 1."""
        assert all(e.norm_v_h == 0.0 for e in short_sweep.entries)
        assert short_sweep.fitted_slopes["norm_v_h_vs_mu"] is None

    def test_outputs(self, short_sweep, tmp_path):
        """Test the CSV and JSON forms, which carry no timing."""
        csv_path = short_sweep.to_csv(tmp_path / "sweep.csv")
        json_path = short_sweep.to_json(tmp_path / "sweep.json")

        lines = csv_path.read_text().splitlines()
        assert lines[0].startswith("mu,eps,amplitude,")
        assert lines[0].endswith("tail_class,tail_parameter")
        assert len(lines) == 4
        assert "wall_time" not in json_path.read_text()

    def test_invalid_mu_lists(self, solver_1d):
        """Test validation before any solve."""
        with pytest.raises(ConfigError):
            sweep(solver_1d, [])
        with pytest.raises(ConfigError):
            sweep(solver_1d, [0.01, -0.01])
        with pytest.raises(ConfigError):
            sweep(solver_1d, [0.01, 0.02])

    def test_all_failed(self):
        """Test that a sweep with no converged point raises."""
        solver = FailingSolver()
        with pytest.raises(AllFailed) as err:
            sweep(solver, [0.02, 0.01])

        assert solver.calls == [0.02, 0.01]
        assert len(err.value.details["failures"]) == 2


class TestTailAnalysis:
    """Test the far-field classification."""

    def test_exponential_tail(self, solver_1d):
        """Test decay rate sqrt(mu / (1 + mu)) for the exponential kernel."""
        solution = solver_1d.solve(0.01)
        report = tail_analysis(solution, window=(0.3, 0.6))

        assert report.classification == "exponential"
        assert report.rate == pytest.approx(np.sqrt(0.01 / 1.01), rel=0.05)
        assert report.parameter == report.rate
        assert report.samples >= 10
        assert "kernel_exponent" not in report.to_dict()

    def test_window_below_noise_floor(self, solver_1d):
        """Test that a window beyond the noise floor is reported."""
        solution = solver_1d.solve(0.01)
        with pytest.raises(WindowUnderResolved):
            tail_analysis(solution, window=(0.95, 0.96))

    def test_algebraic_tail(self, algebraic_solver):
        """Test that a kernel decaying like |x|^-4 gives an |x|^-4 spike tail."""
        report = algebraic_solver.tail(algebraic_solver.solve(0.02))
        info = report.to_dict()

        assert algebraic_solver.kernel_exponent() == 4.0
        assert report.classification == "algebraic"
        assert report.parameter == report.exponent
        assert report.exponent == pytest.approx(4.0, rel=0.1)
        assert info["kernel_exponent"] == 4.0
        assert info["exponent_ratio"] == pytest.approx(1.0, rel=0.1)

    def test_sweep_passes_kernel_exponent(self, algebraic_solver):
        """Test that sweep tails agree with tail mode for algebraic kernels."""
        result = algebraic_solver.sweep([0.03, 0.02], tails=True)
        single = algebraic_solver.tail(result.entries[-1].solution)

        for entry in result.entries:
            assert entry.tail.kernel_exponent == 4.0
            assert entry.tail.classification == "algebraic"
        assert result.entries[-1].tail.to_dict() == single.to_dict()

    def test_tail_csv(self, solver_1d, tmp_path):
        """Test the profile written next to the fit."""
        report = tail_analysis(solver_1d.solve(0.01), window=(0.3, 0.6))
        path = report.to_csv(tmp_path / "tail.csv")
        assert path.read_text().splitlines()[0] == "x,abs_u"


class TestPeriodic:
    """Test the periodic study."""

    def test_periodic_grid_keeps_spacing(self):
        """Test that the period grid has at most the base spacing."""
        base = UniformGrid(1, 30.0, 1024)
        grid = periodic_grid(base, 10.0)

        assert grid.L[0] == 10.0
        assert grid.N % 2 == 0
        assert grid.h[0] <= base.h[0]

    def test_single_period_has_no_fit(self):
        """Test that one L0 gives no slopes."""
        report = PeriodicReport(0.01, [5.0], [0.015], [UniformGrid(1, 5.0, 32)])

        assert report.increments == []
        assert report.semilog_slope is None
        assert report.loglog_slope is None
        assert report.converges_monotonically()

    def test_exponential_convergence(self):
        """Test the semilog slope of geometrically shrinking increments."""
        L0 = [2.0, 3.0, 4.0, 5.0]
        amplitudes = [1.0 + np.exp(-2.0 * v) for v in L0]
        report = PeriodicReport(0.01, L0, amplitudes, [UniformGrid(1, v, 32) for v in L0])

        assert report.semilog_slope == pytest.approx(-2.0)
        assert report.converges_monotonically()
        assert report.to_dict()["monotone"]

    def test_periodic_spikes_approach_the_isolated_spike(self, solver_1d):
        """Test amplitudes on growing periods."""
        isolated = solver_1d.solve(0.01).amplitude
        report = solver_1d.periodic(0.01, [8.0, 6.0])

        assert report.L0 == [6.0, 8.0]
        assert len(report.grids) == 2
        for amplitude in report.amplitudes:
            assert amplitude == pytest.approx(isolated, rel=1e-3)
        assert abs(report.amplitudes[1] - isolated) < abs(report.amplitudes[0] - isolated)
