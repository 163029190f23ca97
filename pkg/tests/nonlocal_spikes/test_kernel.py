"""Tests for kernel entries and KernelSpec."""

import json

import numpy as np
import pytest

from nonlocal_spikes.components.errors import KernelError
from nonlocal_spikes.components.grid import Field, UniformGrid
from nonlocal_spikes.components.kernel import (
    AnalyticEntry,
    GriddedEntry,
    KernelSpec,
    check_symmetry,
    make_entry,
    traveling_transform,
)
from nonlocal_spikes.components.symmetry import SymmetryGroup


class TestAnalyticEntry:
    """Test the closed-form kernel families."""

    def test_exponential_profile_and_moments(self):
        """Test the one-dimensional exponential entry 1/2 exp(-|x|)."""
        entry = AnalyticEntry("exponential", 1, 1.0)

        assert entry.sample(np.array([[0.0]]))[0] == pytest.approx(0.5)
        assert entry.sample(np.array([[2.0]]))[0] == pytest.approx(0.5 * np.exp(-2.0))
        assert entry.mass() == 1.0
        assert entry.second_moments()[0, 0] == pytest.approx(2.0)
        assert entry.symbol(np.array([[1.0]]))[0].real == pytest.approx(0.5)

    def test_gaussian_symbol_matches_discrete_transform(self):
        """Test that the symbol is the transform of the samples."""
        grid = UniformGrid(1, 20.0, 256)
        entry = AnalyticEntry("gaussian", 1, -0.7, width=1.3)
        samples = entry.sample(np.moveaxis(grid.nodes, 0, -1))
        transformed = grid.forward(samples[np.newaxis])[0]
        symbol = entry.symbol(np.moveaxis(grid.frequencies, 0, -1))

        assert np.max(np.abs(transformed - symbol)) < 1e-10
        assert entry.second_moments()[0, 0] == pytest.approx(-0.7 * 1.3**2)

    def test_exponential_symbol_in_two_dimensions(self):
        """Test the symbol (1 + |xi|^2)^(-3/2) against quadrature of the samples."""
        grid = UniformGrid(2, 30.0, 512)
        entry = AnalyticEntry("exponential", 2, 1.0)
        samples = entry.sample(np.moveaxis(grid.nodes, 0, -1))

        assert np.sum(samples) * grid.cell_volume == pytest.approx(1.0, rel=1e-3)
        assert entry.symbol(np.array([[1.0, 0.0]]))[0].real == pytest.approx(2.0**-1.5)

    def test_algebraic_moments(self):
        """Test unit mass and second moment 1/(2(nu - 1)) for p = 2 in 1D."""
        entry = AnalyticEntry("algebraic", 1, 1.0, p=2.0)

        assert entry.symbol(np.array([[0.0]]))[0].real == pytest.approx(1.0)
        assert entry.second_moments()[0, 0] == pytest.approx(1.0)
        grid = UniformGrid(1, 400.0, 2**16)
        samples = entry.sample(np.moveaxis(grid.nodes, 0, -1))
        assert np.sum(samples) * grid.cell_volume == pytest.approx(1.0, rel=1e-2)

    def test_algebraic_needs_finite_second_moment(self):
        """Test that p <= (n + 2)/2 is rejected."""
        with pytest.raises(KernelError):
            AnalyticEntry("algebraic", 1, 1.0, p=1.5)
        with pytest.raises(KernelError):
            AnalyticEntry("algebraic", 2, 1.0)

    def test_unknown_family_and_bad_width(self):
        """Test entry validation."""
        with pytest.raises(KernelError):
            AnalyticEntry("cauchy", 1, 1.0)
        with pytest.raises(KernelError):
            AnalyticEntry("gaussian", 1, 1.0, width=0.0)


class TestGriddedEntry:
    """Test kernels given as grid samples."""

    def test_symbol_and_moments_of_sampled_gaussian(self):
        """Test that a sampled Gaussian reproduces the analytic data."""
        grid = UniformGrid(1, 15.0, 256)
        analytic = AnalyticEntry("gaussian", 1, 1.0)
        values = analytic.sample(np.moveaxis(grid.nodes, 0, -1))
        entry = GriddedEntry(grid, values)

        assert entry.mass() == pytest.approx(1.0, abs=1e-10)
        assert entry.second_moments()[0, 0] == pytest.approx(1.0, abs=1e-8)
        xi = np.array([[0.3], [1.7]])
        assert np.max(np.abs(entry.symbol(xi) - analytic.symbol(xi))) < 1e-10

    def test_symbol_beyond_resolution(self):
        """Test that frequencies past the grid cutoff are rejected."""
        grid = UniformGrid(1, 10.0, 32)
        entry = GriddedEntry(grid, np.exp(-(grid.axis_nodes(0) ** 2)))
        with pytest.raises(KernelError):
            entry.symbol(np.array([[100.0]]))

    def test_make_entry_from_file(self, tmp_path):
        """Test loading a JSON profile relative to the config directory."""
        grid = UniformGrid(1, 15.0, 128)
        x = grid.axis_nodes(0)
        profile = Field(grid, -np.exp(-0.5 * x**2) / np.sqrt(2.0 * np.pi)).to_json_profile()
        (tmp_path / "kernel.json").write_text(json.dumps(profile))

        entry = make_entry({"family": "grid", "file": "kernel.json"}, 1, str(tmp_path))
        assert entry.mass() == pytest.approx(-1.0, abs=1e-8)
        with pytest.raises(KernelError):
            make_entry({"family": "grid", "file": "kernel.json"}, 2, str(tmp_path))
        with pytest.raises(KernelError):
            make_entry({"family": "grid"}, 1)


class TestKernelSpec:
    """Test the matrix kernel."""

    def test_square_and_nonempty(self):
        """Test KernelSpec validation."""
        entry = AnalyticEntry("gaussian", 1, 1.0)
        with pytest.raises(KernelError):
            KernelSpec([[entry, None]])
        with pytest.raises(KernelError):
            KernelSpec([[None]])
        with pytest.raises(KernelError):
            KernelSpec([[entry, None], [None, AnalyticEntry("gaussian", 2, 1.0)]])

    def test_symbol_matrix_and_moments(self):
        """Test the block structure of eval_symbol, mass and second moments."""
        K = KernelSpec(
            [
                [AnalyticEntry("exponential", 1, -1.0), None],
                [None, AnalyticEntry("exponential", 1, -0.5)],
            ]
        )
        symbol = K.eval_symbol(np.zeros((3, 1)))

        assert symbol.shape == (3, 2, 2)
        assert np.allclose(K.mass(), np.diag([-1.0, -0.5]))
        assert np.allclose(K.second_moments()[:, :, 0, 0], np.diag([-2.0, -1.0]))
        with pytest.raises(KernelError):
            K.eval_symbol(np.zeros((3, 2)))

    def test_convolve_matches_symbol(self, exponential_kernel):
        """Test periodic convolution of a Fourier mode."""
        grid = UniformGrid(1, np.pi * 4, 128)
        x = grid.axis_nodes(0)
        values = np.cos(x)[np.newaxis]

        result = exponential_kernel.convolve(grid, values)
        assert np.max(np.abs(result + 0.5 * values)) < 1e-12

    def test_transformed_normalizes_second_moment(self, exponential_kernel):
        """Test that x = T y scales second moments by T^-2."""
        mapped = exponential_kernel.transformed(np.array([[2.0]]))
        assert mapped.second_moments()[0, 0, 0, 0] == pytest.approx(-0.5)
        assert mapped.mass()[0, 0] == pytest.approx(-1.0)

    def test_traveling_transform_moments(self, exponential_kernel):
        """Test the drift and second moment introduced by a speed c."""
        moving = traveling_transform(exponential_kernel, 0.5)

        assert moving.moment((1,))[0, 0] == pytest.approx(0.5)
        assert moving.second_moments()[0, 0, 0, 0] == pytest.approx(-2.0 - 0.5)
        assert traveling_transform(exponential_kernel, 0.0) is exponential_kernel
        with pytest.raises(KernelError):
            KernelSpec([[AnalyticEntry("gaussian", 2, 1.0)]]).traveling(1.0)


class TestCheckSymmetry:
    """Test kernel symmetry checks."""

    def test_radial_kernel_is_invariant(self):
        """Test an isotropic kernel under the hyperoctahedral group."""
        K = KernelSpec([[AnalyticEntry("gaussian", 2, -1.0)]])
        report = check_symmetry(K, SymmetryGroup.named("hyperoctahedral", 2))

        assert report.passed
        assert report.deviation < 1e-12

    def test_anisotropic_kernel_breaks_axis_swap(self):
        """Test that unequal widths are flagged under axis permutations."""
        K = KernelSpec([[AnalyticEntry("gaussian", 2, -1.0, width=[1.0, 2.0])]])

        assert check_symmetry(K, SymmetryGroup.named("reflections", 2)).passed
        assert not check_symmetry(K, SymmetryGroup.named("hyperoctahedral", 2)).passed

    def test_traveling_kernel_breaks_inversion(self, exponential_kernel):
        """Test that a moving frame is not inversion symmetric."""
        report = check_symmetry(exponential_kernel.traveling(0.3), SymmetryGroup.named("inversion", 1))
        assert not report.passed

    def test_group_with_fixed_directions(self):
        """Test that a group fixing a line is flagged."""
        K = KernelSpec([[AnalyticEntry("gaussian", 2, -1.0)]])
        group = SymmetryGroup([[[1, 0], [0, -1]]])

        report = check_symmetry(K, group)
        assert report.fixed_subspace_dim == 1
        assert not report.passed
