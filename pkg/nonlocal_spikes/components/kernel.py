"""Matrix convolution kernels with evaluable symbols and moments.

Symbols use the convention K_hat(xi) = int K(x) exp(-i <xi, x>) dx.
Every scalar entry is one of

* an analytic radial profile a / prod(sigma) * phi(x / sigma) with phi of unit
  mass (gaussian, exponential, algebraic),
* samples on a UniformGrid,
* a traveling-wave or linear change-of-variable wrapper around another entry.
"""

from __future__ import annotations

import itertools
import logging
from functools import lru_cache
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy import integrate, special

from .errors import KernelError
from .grid import Field, UniformGrid
from .symmetry import SymmetryGroup
from .constants import TOL_SYMMETRY_ANALYTIC, TOL_SYMMETRY_GRIDDED

logger = logging.getLogger(__name__)

FAMILIES = ("exponential", "gaussian", "algebraic", "grid")
BOUNDARY_MASS_TOLERANCE = 1e-12


@lru_cache(maxsize=None)
def algebraic_normalization(n: int, p: float) -> float:
    """c_{n,p} with c * int (1 + |y|^2)^(-p) dy = 1, by radial quadrature."""
    sphere = 2.0 * np.pi ** (n / 2) / special.gamma(n / 2)
    radial, _ = integrate.quad(
        lambda r: r ** (n - 1) * (1.0 + r * r) ** (-p), 0.0, np.inf, epsabs=0.0, epsrel=1e-13
    )
    return 1.0 / (sphere * radial)


def _alpha_axes(alpha: Sequence[int], n: int) -> list[int]:
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != n or any(a < 0 for a in alpha):
        raise KernelError(f"Multi-index {alpha} is not valid in dimension {n}")
    if sum(alpha) > 2:
        raise KernelError(f"Moments are available up to order 2, got {alpha}")
    axes: list[int] = []
    for d, a in enumerate(alpha):
        axes.extend([d] * a)
    return axes


class KernelEntry:
    """Scalar kernel entry interface."""

    n: int
    closed_form = True
    cutoff = np.inf

    def symbol(self, xi: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sample(self, points: np.ndarray) -> np.ndarray:
        raise KernelError(f"{type(self).__name__} has no physical samples")

    def mass(self) -> float:
        raise NotImplementedError

    def first_moment(self) -> np.ndarray:
        raise NotImplementedError

    def second_moments(self) -> np.ndarray:
        raise NotImplementedError

    def moment(self, alpha: Sequence[int]) -> float:
        axes = _alpha_axes(alpha, self.n)
        if not axes:
            return self.mass()
        if len(axes) == 1:
            return float(self.first_moment()[axes[0]])
        return float(self.second_moments()[axes[0], axes[1]])

    @property
    def width_scale(self) -> float:
        return 1.0

    def describe(self) -> dict:
        return {"type": type(self).__name__}


class AnalyticEntry(KernelEntry):
    """Radial profile family scaled by per-axis widths."""

    def __init__(
        self,
        family: str,
        n: int,
        amplitude: float,
        width: float | Sequence[float] = 1.0,
        p: Optional[float] = None,
    ):
        if family not in ("exponential", "gaussian", "algebraic"):
            raise KernelError(f"Unknown analytic family '{family}'")
        widths = np.broadcast_to(np.asarray(width, dtype=float), (n,)).copy()
        if np.any(widths <= 0):
            raise KernelError(f"Kernel widths must be positive, got {width}")
        if family == "algebraic":
            if p is None or p <= (n + 2) / 2:
                raise KernelError(
                    f"Algebraic kernels need p > (n+2)/2 = {(n + 2) / 2} for finite second moments, got {p}"
                )
        self.family = family
        self.n = n
        self.amplitude = float(amplitude)
        self.widths = widths
        self.p = None if p is None else float(p)

    @property
    def width_scale(self) -> float:
        return float(np.min(self.widths))

    @property
    def nu(self) -> float:
        return self.p - self.n / 2

    def _profile_constant(self) -> float:
        n = self.n
        if self.family == "gaussian":
            return (2.0 * np.pi) ** (-n / 2)
        if self.family == "exponential":
            return special.gamma(n / 2) / (2.0 * np.pi ** (n / 2) * special.gamma(n))
        return algebraic_normalization(n, self.p)

    def _second_moment_unit(self) -> float:
        # per-axis second moment of the unit-mass profile
        if self.family == "gaussian":
            return 1.0
        if self.family == "exponential":
            return float(self.n + 1)
        return 1.0 / (2.0 * (self.nu - 1.0))

    def sample(self, points: np.ndarray) -> np.ndarray:
        y = np.asarray(points, dtype=float) / self.widths
        r2 = np.sum(y * y, axis=-1)
        scale = self.amplitude * self._profile_constant() / np.prod(self.widths)
        if self.family == "gaussian":
            return scale * np.exp(-0.5 * r2)
        if self.family == "exponential":
            return scale * np.exp(-np.sqrt(r2))
        return scale * (1.0 + r2) ** (-self.p)

    def symbol(self, xi: np.ndarray) -> np.ndarray:
        s2 = np.sum((np.asarray(xi, dtype=float) * self.widths) ** 2, axis=-1)
        if self.family == "gaussian":
            values = np.exp(-0.5 * s2)
        elif self.family == "exponential":
            values = (1.0 + s2) ** (-(self.n + 1) / 2)
        else:
            values = self._matern(np.sqrt(s2))
        return (self.amplitude * values).astype(complex)

    def _matern(self, s: np.ndarray) -> np.ndarray:
        nu = self.nu
        s = np.asarray(s, dtype=float)
        small = s < 1e-8
        safe = np.where(small, 1.0, s)
        with np.errstate(over="ignore", invalid="ignore", under="ignore"):
            values = 2.0 ** (1.0 - nu) / special.gamma(nu) * safe**nu * special.kv(nu, safe)
        values = np.where(np.isfinite(values), values, 0.0)
        return np.where(small, 1.0 - s * s / (4.0 * (nu - 1.0)), values)

    def mass(self) -> float:
        return self.amplitude

    def first_moment(self) -> np.ndarray:
        return np.zeros(self.n)

    def second_moments(self) -> np.ndarray:
        return self.amplitude * self._second_moment_unit() * np.diag(self.widths**2)

    def describe(self) -> dict:
        info = {
            "family": self.family,
            "amplitude": self.amplitude,
            "width": self.widths.tolist(),
        }
        if self.p is not None:
            info["p"] = self.p
        return info


class GriddedEntry(KernelEntry):
    """Kernel samples on a uniform grid; symbol by direct discrete transform."""

    closed_form = False

    def __init__(self, grid: UniformGrid, values: np.ndarray, source: Optional[str] = None):
        values = np.asarray(values, dtype=float).reshape(grid.shape)
        self.grid = grid
        self.n = grid.n
        self.values = values
        self.source = source
        self.cutoff = min(np.pi * grid.N / (2.0 * L) for L in grid.L)
        self._check_boundary_mass()

    @classmethod
    def from_field(cls, field: Field, source: Optional[str] = None) -> GriddedEntry:
        if field.k != 1:
            raise KernelError(f"Gridded kernel entries are scalar, got k={field.k}")
        return cls(field.grid, field.values[0], source)

    def _check_boundary_mass(self) -> None:
        peak = float(np.max(np.abs(self.values)))
        boundary = 0.0
        for axis in range(self.n):
            boundary = max(boundary, float(np.max(np.abs(np.take(self.values, 0, axis=axis)))))
        if peak > 0 and boundary > BOUNDARY_MASS_TOLERANCE * peak:
            logger.warning(
                f"Gridded kernel does not decay at the box boundary: {boundary:.3e} vs peak {peak:.3e}"
            )

    @property
    def width_scale(self) -> float:
        return float(min(self.grid.h)) * 4.0

    def symbol(self, xi: np.ndarray) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        flat = xi.reshape(-1, self.n)
        limit = np.array([np.pi * self.grid.N / (2.0 * L) for L in self.grid.L])
        if np.any(np.abs(flat) > limit * (1 + 1e-12)):
            raise KernelError(
                f"Frequency beyond the gridded kernel resolution (max {limit.min():.4g})"
            )
        nodes = self.grid.nodes.reshape(self.n, -1)
        weights = self.values.ravel() * self.grid.cell_volume
        out = np.empty(flat.shape[0], dtype=complex)
        chunk = max(1, 2**22 // max(1, nodes.shape[1]))
        for start in range(0, flat.shape[0], chunk):
            phase = flat[start : start + chunk] @ nodes
            out[start : start + chunk] = np.exp(-1j * phase) @ weights
        return out.reshape(xi.shape[:-1])

    def sample_on_grid(self) -> np.ndarray:
        return self.values

    def mass(self) -> float:
        return float(np.sum(self.values) * self.grid.cell_volume)

    def first_moment(self) -> np.ndarray:
        nodes = self.grid.nodes
        return np.array(
            [np.sum(nodes[d] * self.values) * self.grid.cell_volume for d in range(self.n)]
        )

    def second_moments(self) -> np.ndarray:
        nodes = self.grid.nodes
        out = np.empty((self.n, self.n))
        for i, j in itertools.product(range(self.n), repeat=2):
            out[i, j] = np.sum(nodes[i] * nodes[j] * self.values) * self.grid.cell_volume
        return out

    def describe(self) -> dict:
        return {"family": "grid", "file": self.source, "grid": list(self.grid.key)}


class TravelingEntry(KernelEntry):
    """Entry convolved with (1 - c d/dx)^(-1): symbol K_hat / (1 - i c xi)."""

    def __init__(self, base: KernelEntry, speed: float):
        if base.n != 1:
            raise KernelError("The traveling-wave transform is one-dimensional")
        self.base = base
        self.n = 1
        self.speed = float(speed)
        self.closed_form = base.closed_form
        self.cutoff = base.cutoff

    @property
    def width_scale(self) -> float:
        return self.base.width_scale

    def symbol(self, xi: np.ndarray) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        return self.base.symbol(xi) / (1.0 - 1j * self.speed * xi[..., 0])

    def mass(self) -> float:
        return self.base.mass()

    def first_moment(self) -> np.ndarray:
        return self.base.first_moment() - self.speed * self.base.mass()

    def second_moments(self) -> np.ndarray:
        c = self.speed
        m0 = self.base.mass()
        m1 = self.base.first_moment()[0]
        m2 = self.base.second_moments()[0, 0]
        return np.array([[m2 - 2.0 * c * m1 + 2.0 * c * c * m0]])

    def describe(self) -> dict:
        return {"traveling_speed": self.speed, "base": self.base.describe()}


class MappedEntry(KernelEntry):
    """|det T| K(T y): the entry after the change of variables x = T y."""

    def __init__(self, base: KernelEntry, transform: np.ndarray):
        self.base = base
        self.n = base.n
        self.transform = np.asarray(transform, dtype=float)
        self.inverse = np.linalg.inv(self.transform)
        self.closed_form = base.closed_form
        self.cutoff = base.cutoff / max(1.0, float(np.max(np.abs(self.inverse))))

    @property
    def width_scale(self) -> float:
        return self.base.width_scale / float(np.max(np.abs(self.transform)))

    def symbol(self, xi: np.ndarray) -> np.ndarray:
        return self.base.symbol(np.asarray(xi, dtype=float) @ self.inverse)

    def sample(self, points: np.ndarray) -> np.ndarray:
        det = abs(np.linalg.det(self.transform))
        return det * self.base.sample(np.asarray(points, dtype=float) @ self.transform.T)

    def mass(self) -> float:
        return self.base.mass()

    def first_moment(self) -> np.ndarray:
        return self.inverse @ self.base.first_moment()

    def second_moments(self) -> np.ndarray:
        return self.inverse @ self.base.second_moments() @ self.inverse.T

    def describe(self) -> dict:
        return {"transform": self.transform.tolist(), "base": self.base.describe()}


class KernelSpec:
    """k x k matrix kernel; None entries are identically zero."""

    def __init__(
        self,
        entries: Sequence[Sequence[Optional[KernelEntry]]],
        symmetry: Optional[SymmetryGroup] = None,
    ):
        self.k = len(entries)
        if self.k == 0 or any(len(row) != self.k for row in entries):
            raise KernelError("Kernel entries must form a square matrix")
        present = [e for row in entries for e in row if e is not None]
        if not present:
            raise KernelError("Kernel has no nonzero entry")
        self.n = present[0].n
        if any(e.n != self.n for e in present):
            raise KernelError("All kernel entries must share the spatial dimension")
        if symmetry is not None and symmetry.n != self.n:
            raise KernelError(
                f"Symmetry group acts in dimension {symmetry.n}, kernel in {self.n}"
            )
        self.entries = [list(row) for row in entries]
        self.symmetry = symmetry

    def _present(self):
        for i, j in itertools.product(range(self.k), repeat=2):
            if self.entries[i][j] is not None:
                yield i, j, self.entries[i][j]

    @property
    def closed_form(self) -> bool:
        return all(e.closed_form for _, _, e in self._present())

    @property
    def width_scale(self) -> float:
        return min(e.width_scale for _, _, e in self._present())

    @property
    def cutoff(self) -> float:
        return min(e.cutoff for _, _, e in self._present())

    def eval_symbol(self, xi: np.ndarray) -> np.ndarray:
        """Symbol matrix; xi of shape (..., n) gives shape (..., k, k)."""
        xi = np.asarray(xi, dtype=float)
        if xi.shape[-1] != self.n:
            raise KernelError(f"Frequency has {xi.shape[-1]} components, expected {self.n}")
        if not np.all(np.isfinite(xi)):
            raise KernelError("Frequencies must be finite")
        out = np.zeros(xi.shape[:-1] + (self.k, self.k), dtype=complex)
        for i, j, entry in self._present():
            out[..., i, j] = entry.symbol(xi)
        return out

    def symbol_on_grid(self, grid: UniformGrid, scale: float = 1.0) -> np.ndarray:
        """K_hat(scale * xi) at every dual node, shape (k, k, N, ...)."""
        xi = np.moveaxis(grid.frequencies, 0, -1) * scale
        return np.moveaxis(self.eval_symbol(xi), (-2, -1), (0, 1))

    def moment(self, alpha: Sequence[int]) -> np.ndarray:
        out = np.zeros((self.k, self.k))
        for i, j, entry in self._present():
            out[i, j] = entry.moment(alpha)
        return out

    def mass(self) -> np.ndarray:
        return self.moment((0,) * self.n)

    def second_moments(self) -> np.ndarray:
        """Shape (k, k, n, n)."""
        out = np.zeros((self.k, self.k, self.n, self.n))
        for i, j, entry in self._present():
            out[i, j] = entry.second_moments()
        return out

    def sample(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        out = np.zeros((self.k, self.k) + points.shape[:-1])
        for i, j, entry in self._present():
            out[i, j] = entry.sample(points)
        return out

    def convolve(self, grid: UniformGrid, values: np.ndarray) -> np.ndarray:
        """Periodic convolution K * U of component-first values."""
        return grid.apply_symbol(self.symbol_on_grid(grid), values)

    def _map_entries(self, wrap) -> list[list[Optional[KernelEntry]]]:
        return [[None if e is None else wrap(e) for e in row] for row in self.entries]

    def transformed(self, transform: np.ndarray) -> KernelSpec:
        return KernelSpec(self._map_entries(lambda e: MappedEntry(e, transform)), self.symmetry)

    def traveling(self, speed: float) -> KernelSpec:
        if speed == 0:
            return self
        return KernelSpec(self._map_entries(lambda e: TravelingEntry(e, speed)), self.symmetry)

    def describe(self) -> list[list[Optional[dict]]]:
        return [[None if e is None else e.describe() for e in row] for row in self.entries]


def make_entry(descriptor: dict, n: int, base_dir: Optional[str] = None) -> KernelEntry:
    """Build a kernel entry from its config descriptor."""
    family = descriptor.get("family")
    if family not in FAMILIES:
        raise KernelError(f"Unknown kernel family '{family}', expected one of {FAMILIES}")
    if family == "grid":
        path = descriptor.get("file")
        if not path:
            raise KernelError("Gridded kernel entries need a 'file'")
        full = Path(base_dir or ".") / path
        field = Field.load(full)
        if field.grid.n != n:
            raise KernelError(f"Gridded kernel in {path} has dimension {field.grid.n}, expected {n}")
        entry = GriddedEntry.from_field(field, str(path))
        amplitude = descriptor.get("amplitude")
        if amplitude is not None and amplitude != 1.0:
            entry = GriddedEntry(field.grid, field.values[0] * amplitude, str(path))
        return entry
    return AnalyticEntry(
        family,
        n,
        descriptor.get("amplitude", 1.0),
        descriptor.get("width", 1.0),
        descriptor.get("p"),
    )


def eval_symbol(K: KernelSpec, xi: np.ndarray) -> np.ndarray:
    return K.eval_symbol(xi)


def moment(K: KernelSpec, alpha: Sequence[int]) -> np.ndarray:
    return K.moment(alpha)


def traveling_transform(K: KernelSpec, c: float) -> KernelSpec:
    if K.n != 1:
        raise KernelError("The traveling-wave transform is one-dimensional")
    return K.traveling(c)


class SymmetryReport:
    """Deviation of a kernel from invariance under a symmetry group."""

    def __init__(self, deviation: float, tolerance: float, fixed_subspace_dim: int):
        self.deviation = deviation
        self.tolerance = tolerance
        self.fixed_subspace_dim = fixed_subspace_dim
        self.flags: list[str] = []
        if deviation > tolerance:
            self.flags.append(
                f"Kernel deviates from group invariance by {deviation:.3e} (tolerance {tolerance:.1e})"
            )
        if fixed_subspace_dim != 0:
            self.flags.append(
                f"Fixed subspace of the group has dimension {fixed_subspace_dim}, expected 0"
            )

    @property
    def passed(self) -> bool:
        return not self.flags

    def to_dict(self) -> dict:
        return {
            "deviation": self.deviation,
            "tolerance": self.tolerance,
            "fixed_subspace_dim": self.fixed_subspace_dim,
            "passed": self.passed,
            "flags": self.flags,
        }


def _sample_points(n: int, scale: float, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    count = {1: 64, 2: 400, 3: 1000}[n]
    return rng.uniform(-4.0 * scale, 4.0 * scale, size=(count, n))


def check_symmetry(K: KernelSpec, group: SymmetryGroup) -> SymmetryReport:
    """Max |K(x) - K(gamma x)| over group elements and sample points."""
    deviation = 0.0
    tolerance = TOL_SYMMETRY_ANALYTIC
    points = _sample_points(K.n, K.width_scale)
    for i, j, entry in K._present():
        if isinstance(entry, GriddedEntry):
            tolerance = TOL_SYMMETRY_GRIDDED
            base = entry.sample_on_grid()[np.newaxis]
            for g in group.elements:
                moved = entry.grid.act(g, base)
                deviation = max(deviation, float(np.max(np.abs(moved - base))))
            continue
        for g in group.elements:
            try:
                diff = entry.sample(points) - entry.sample(points @ g.T)
            except KernelError:
                # no physical samples: compare symbols, K(x) = K(gx) iff K_hat(xi) = K_hat(g xi)
                diff = entry.symbol(points) - entry.symbol(points @ g.T)
            deviation = max(deviation, float(np.max(np.abs(diff))))
    report = SymmetryReport(deviation, tolerance, group.fixed_subspace_dim())
    for flag in report.flags:
        logger.warning(flag)
    return report
