"""Tests for UniformGrid and Field."""

import numpy as np
import pytest

from nonlocal_spikes.components.errors import GridError
from nonlocal_spikes.components.grid import (
    DUAL,
    Field,
    UniformGrid,
    apply_multiplier,
    from_dual,
    make_grid,
    sobolev_norm,
    to_dual,
)


class TestUniformGrid:
    """Test UniformGrid class."""

    def test_create_grid(self):
        """Test spacing and shape of a new grid."""
        grid = UniformGrid(2, [4.0, 8.0], 16)

        assert grid.n == 2
        assert grid.L == (4.0, 8.0)
        assert grid.h == (0.5, 1.0)
        assert grid.shape == (16, 16)
        assert not grid.is_isotropic

    def test_make_grid(self):
        """Test node counts, spacing and dual frequencies."""
        grid = make_grid(2, 10.0, 16)

        assert grid.size == 256
        assert grid.h == (1.25, 1.25)
        assert np.allclose(make_grid(1, np.pi, 8).dual_frequencies(), np.arange(-4, 4))
        assert make_grid(1, 30.0, 2048).dual_frequencies()[1025] == pytest.approx(np.pi / 30.0)

    @pytest.mark.parametrize("N", [7, 6, 0])
    def test_rejects_bad_node_count(self, N):
        """Test that odd or tiny node counts are rejected."""
        with pytest.raises(GridError):
            UniformGrid(1, 10.0, N)

    def test_rejects_bad_dimension_and_width(self):
        """Test that dimension and half-width are validated."""
        with pytest.raises(GridError):
            UniformGrid(4, 10.0, 16)
        with pytest.raises(GridError):
            UniformGrid(1, -1.0, 16)

    def test_nodes_start_at_minus_L(self, grid_1d):
        """Test that nodes are -L + j h."""
        x = grid_1d.axis_nodes(0)
        assert x[0] == pytest.approx(-10.0)
        assert x[grid_1d.N // 2] == pytest.approx(0.0)
        assert x[-1] == pytest.approx(10.0 - grid_1d.h[0])

    def test_forward_of_gaussian(self):
        """Test the transform against the continuous Fourier transform."""
        grid = UniformGrid(1, 20.0, 256)
        x = grid.axis_nodes(0)
        values = np.exp(-0.5 * x**2)[np.newaxis]
        transformed = grid.forward(values)[0]
        xi = grid.frequencies[0]
        expected = np.sqrt(2.0 * np.pi) * np.exp(-0.5 * xi**2)

        assert np.max(np.abs(transformed - expected)) < 1e-10

    def test_inverse_undoes_forward(self, grid_2d):
        """Test that inverse(forward(f)) recovers f."""
        rng = np.random.default_rng(3)
        values = rng.standard_normal((2,) + grid_2d.shape)

        recovered = grid_2d.inverse(grid_2d.forward(values))
        assert np.max(np.abs(recovered - values)) < 1e-12

    def test_apply_symbol_laplacian(self):
        """Test that -|xi|^2 differentiates a periodic mode twice."""
        grid = UniformGrid(1, np.pi, 32)
        x = grid.axis_nodes(0)
        values = np.sin(3.0 * x)[np.newaxis]

        result = grid.apply_symbol(-grid.xi_squared, values)
        assert np.max(np.abs(result + 9.0 * values)) < 1e-10

    def test_norm_of_constant(self, grid_1d):
        """Test that the H^ell norm of 1 is sqrt(volume)."""
        values = np.ones((1,) + grid_1d.shape)
        assert grid_1d.norm(values, 2) == pytest.approx(np.sqrt(grid_1d.volume))

    def test_act_and_symmetrize(self, grid_1d):
        """Test the inversion action and group averaging."""
        x = grid_1d.axis_nodes(0)
        odd = np.sin(2.0 * np.pi * x / 20.0)[np.newaxis]
        inversion = -np.eye(1, dtype=int)

        flipped = grid_1d.act(inversion, odd)
        averaged = grid_1d.symmetrize(odd, [np.eye(1, dtype=int), inversion])

        assert np.max(np.abs(flipped + odd)) < 1e-12
        assert np.max(np.abs(averaged)) < 1e-12

    def test_anisotropic_permutation_rejected(self):
        """Test that a swap of axes with different widths is not compatible."""
        grid = UniformGrid(2, [4.0, 8.0], 16)
        with pytest.raises(GridError):
            grid.check_compatible(np.array([[0, 1], [1, 0]]))

    def test_equality_by_key(self):
        """Test that grids compare by (n, L, N)."""
        assert UniformGrid(1, 10.0, 64) == UniformGrid(1, [10.0], 64)
        assert UniformGrid(1, 10.0, 64) != UniformGrid(1, 10.0, 128)


class TestField:
    """Test Field class."""

    def test_scalar_values_gain_component_axis(self, grid_1d):
        """Test that a grid-shaped array becomes a k = 1 field."""
        field = Field(grid_1d, np.zeros(grid_1d.shape))
        assert field.k == 1
        assert field.values.shape == (1, 64)

    def test_rejects_shape_mismatch_and_nan(self, grid_1d):
        """Test validation of field values."""
        with pytest.raises(GridError):
            Field(grid_1d, np.zeros(32))
        bad = np.zeros(grid_1d.shape)
        bad[3] = np.nan
        with pytest.raises(GridError):
            Field(grid_1d, bad)

    def test_values_are_read_only(self, grid_1d):
        """Test field immutability."""
        field = Field(grid_1d, np.zeros(grid_1d.shape))
        with pytest.raises(ValueError):
            field.values[0, 0] = 1.0

    def test_dual_and_back(self, grid_1d):
        """Test to_dual / from_dual."""
        x = grid_1d.axis_nodes(0)
        field = Field(grid_1d, np.exp(-(x**2)))
        dual = to_dual(field)

        assert dual.space == DUAL
        assert np.max(np.abs(from_dual(dual).values - field.values)) < 1e-12
        with pytest.raises(GridError):
            from_dual(field)

    def test_sobolev_norm_agrees_in_both_spaces(self, grid_1d):
        """Test that the norm does not depend on the representation."""
        x = grid_1d.axis_nodes(0)
        field = Field(grid_1d, np.exp(-(x**2)))
        assert sobolev_norm(field, 1) == pytest.approx(sobolev_norm(to_dual(field), 1))
        with pytest.raises(GridError):
            sobolev_norm(field, -1)

    def test_apply_multiplier_shape_check(self, grid_1d):
        """Test that a mismatched symbol is rejected."""
        field = Field(grid_1d, np.zeros(grid_1d.shape))
        with pytest.raises(GridError):
            apply_multiplier(np.ones(10), field)

    def test_csv_and_json_profile(self, grid_1d, tmp_path):
        """Test the CSV header and the JSON profile format."""
        x = grid_1d.axis_nodes(0)
        field = Field(grid_1d, np.cos(x))
        path = field.to_csv(tmp_path / "profile.csv")

        assert path.read_text().splitlines()[0] == "x1,u1"
        restored = Field.from_json_profile(field.to_json_profile())
        assert restored.grid == grid_1d
        assert np.array_equal(restored.values, field.values)
