"""Uniform periodic grids, vector fields and the discrete Fourier contract.

A grid covers the box [-L_1, L_1) x ... x [-L_n, L_n) with N nodes per axis.
The forward transform approximates the continuum transform

    f_hat(xi) = sum_j f(x_j) exp(-i <xi, x_j>) h^n

so that a constant c maps to (2L)^n c at xi = 0. Field values are stored
component first, shape (k, N, ..., N), with dual values in FFT order.
"""

from __future__ import annotations

import csv
import json
import logging
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import GridError

logger = logging.getLogger(__name__)

PHYSICAL = "physical"
DUAL = "dual"


class UniformGrid:
    """Uniform periodic grid on a (possibly anisotropic) box."""

    def __init__(self, n: int, L: float | Sequence[float], N: int):
        if n not in (1, 2, 3):
            raise GridError(f"Dimension must be 1, 2 or 3, got {n}")
        if int(N) != N or N % 2 or N < 8:
            raise GridError(f"Node count must be even and at least 8, got {N}")
        half_widths = np.broadcast_to(np.asarray(L, dtype=float), (n,))
        if np.any(~np.isfinite(half_widths)) or np.any(half_widths <= 0):
            raise GridError(f"Half-width must be positive, got {L}")

        self.n = n
        self.N = int(N)
        self.L = tuple(float(v) for v in half_widths)
        self.h = tuple(2.0 * v / self.N for v in self.L)
        self.shape = (self.N,) * n
        self.axes = tuple(range(1, n + 1))

    @property
    def key(self) -> tuple:
        return (self.n, self.L, self.N)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, UniformGrid) and self.key == other.key

    def __hash__(self) -> int:
        return hash(self.key)

    def __repr__(self) -> str:
        return f"UniformGrid(n={self.n}, L={self.L}, N={self.N})"

    @property
    def is_isotropic(self) -> bool:
        return len(set(self.L)) == 1

    @property
    def volume(self) -> float:
        return float(np.prod([2.0 * v for v in self.L]))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    @property
    def size(self) -> int:
        return self.N**self.n

    def axis_nodes(self, axis: int = 0) -> np.ndarray:
        return -self.L[axis] + self.h[axis] * np.arange(self.N)

    def dual_frequencies(self, axis: int = 0) -> np.ndarray:
        """Dual frequencies pi*j/L for j in [-N/2, N/2), sorted."""
        return np.pi * np.arange(-self.N // 2, self.N // 2) / self.L[axis]

    @cached_property
    def nodes(self) -> np.ndarray:
        grids = np.meshgrid(
            *[self.axis_nodes(d) for d in range(self.n)], indexing="ij"
        )
        return np.stack(grids)

    @cached_property
    def radii(self) -> np.ndarray:
        return np.sqrt(np.sum(self.nodes**2, axis=0))

    @cached_property
    def frequencies(self) -> np.ndarray:
        """Frequency vectors at every dual node, FFT order, shape (n, N, ...)."""
        freqs = [
            2.0 * np.pi * np.fft.fftfreq(self.N, d=self.h[d]) for d in range(self.n)
        ]
        return np.stack(np.meshgrid(*freqs, indexing="ij"))

    @cached_property
    def xi_squared(self) -> np.ndarray:
        return np.sum(self.frequencies**2, axis=0)

    @cached_property
    def _phase(self) -> np.ndarray:
        # exp(i xi_j L) = (-1)^j per axis; j and its FFT index share parity
        index = np.indices(self.shape).sum(axis=0)
        return np.where(index % 2 == 0, 1.0, -1.0)

    def forward(self, values: np.ndarray) -> np.ndarray:
        """Forward transform of component-first physical values."""
        transformed = np.fft.fftn(values, axes=self.axes)
        return transformed * self._phase * self.cell_volume

    def inverse(self, values_hat: np.ndarray) -> np.ndarray:
        """Inverse transform returning the real part of the physical values."""
        physical = np.fft.ifftn(values_hat * self._phase, axes=self.axes)
        return physical.real / self.cell_volume

    def apply_symbol(self, symbol: np.ndarray, values: np.ndarray) -> np.ndarray:
        """Apply a scalar or matrix symbol to component-first physical values."""
        values_hat = self.forward(values)
        if symbol.shape == self.shape:
            return self.inverse(symbol * values_hat)
        return self.inverse(np.einsum("ij...,j...->i...", symbol, values_hat))

    def norm(self, values: np.ndarray, ell: float) -> float:
        """Discrete H^ell norm of component-first physical values."""
        values_hat = self.forward(values)
        weight = (1.0 + self.xi_squared) ** ell
        total = np.sum(weight * np.abs(values_hat) ** 2) / self.volume
        return float(np.sqrt(total))

    def inner(self, a: np.ndarray, b: np.ndarray) -> float:
        """L^2 inner product by the trapezoidal (spectrally exact) rule."""
        return float(np.sum(a * b) * self.cell_volume)

    def scaled(self, factors: float | Sequence[float]) -> UniformGrid:
        """Grid with the same node count and half-widths multiplied per axis."""
        factors = np.broadcast_to(np.asarray(factors, dtype=float), (self.n,))
        return UniformGrid(self.n, [v * f for v, f in zip(self.L, factors)], self.N)

    def check_compatible(self, matrix: np.ndarray) -> None:
        """Raise unless the signed permutation maps this grid onto itself."""
        matrix = np.asarray(matrix)
        if matrix.shape != (self.n, self.n):
            raise GridError(f"Group element of shape {matrix.shape} on a {self.n}-dimensional grid")
        for i in range(self.n):
            j = int(np.flatnonzero(matrix[i])[0])
            if self.L[i] != self.L[j]:
                raise GridError(
                    f"Group element permutes axes {i} and {j} with different half-widths"
                )

    def act(self, matrix: np.ndarray, values: np.ndarray) -> np.ndarray:
        """Return g(x) = f(gamma x) for a signed permutation gamma."""
        matrix = np.asarray(matrix, dtype=int)
        self.check_compatible(matrix)
        centred = np.indices(self.shape) - self.N // 2
        source = np.tensordot(matrix, centred, axes=(1, 0))
        source = (source + self.N // 2) % self.N
        return values[(slice(None),) + tuple(source)]

    def symmetrize(self, values: np.ndarray, elements: Iterable[np.ndarray]) -> np.ndarray:
        """Group average (1/|G|) sum_g f(g x)."""
        elements = list(elements)
        total = np.zeros_like(values)
        for element in elements:
            total += self.act(element, values)
        return total / len(elements)


def make_grid(n: int, L: float | Sequence[float], N: int) -> UniformGrid:
    return UniformGrid(n, L, N)


class Field:
    """Immutable k-component grid function in physical or dual space."""

    def __init__(self, grid: UniformGrid, values: Any, space: str = PHYSICAL):
        if space not in (PHYSICAL, DUAL):
            raise GridError(f"Unknown space tag {space}")
        array = np.array(values, dtype=complex if space == DUAL else float)
        if array.shape == grid.shape:
            array = array[np.newaxis]
        if array.shape[1:] != grid.shape:
            raise GridError(
                f"Field shape {array.shape} does not match grid shape {grid.shape}"
            )
        if not np.all(np.isfinite(array)):
            raise GridError("Field values must be finite")
        array.setflags(write=False)
        self.grid = grid
        self.values = array
        self.space = space

    @property
    def k(self) -> int:
        return self.values.shape[0]

    def component(self, index: int) -> np.ndarray:
        return self.values[index]

    def max_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def to_csv(self, path: str | Path) -> Path:
        """Write node coordinates and component columns."""
        path = Path(path)
        if self.space != PHYSICAL:
            raise GridError("Only physical fields are written as CSV")
        coords = self.grid.nodes.reshape(self.grid.n, -1)
        comps = self.values.reshape(self.k, -1)
        header = [f"x{d + 1}" for d in range(self.grid.n)]
        header += [f"u{c + 1}" for c in range(self.k)]
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(header)
            for row in np.vstack([coords, comps]).T:
                writer.writerow([repr(float(v)) for v in row])
        return path

    def to_json_profile(self) -> dict[str, Any]:
        values = self.values
        profile: dict[str, Any] = {
            "n": self.grid.n,
            "L": list(self.grid.L),
            "N": self.grid.N,
            "k": self.k,
            "space": self.space,
        }
        if self.space == DUAL:
            profile["values_real"] = values.real.ravel().tolist()
            profile["values_imag"] = values.imag.ravel().tolist()
        else:
            profile["values"] = values.ravel().tolist()
        return profile

    @classmethod
    def from_json_profile(cls, profile: dict[str, Any]) -> Field:
        grid = UniformGrid(profile["n"], profile["L"], profile["N"])
        shape = (profile.get("k", 1),) + grid.shape
        space = profile.get("space", PHYSICAL)
        if space == DUAL:
            values = np.asarray(profile["values_real"]) + 1j * np.asarray(
                profile["values_imag"]
            )
        else:
            values = np.asarray(profile["values"], dtype=float)
        return cls(grid, values.reshape(shape), space)

    @classmethod
    def load(cls, path: str | Path) -> Field:
        with open(path) as f:
            return cls.from_json_profile(json.load(f))


def to_dual(f: Field) -> Field:
    if f.space != PHYSICAL:
        raise GridError("to_dual expects a physical field")
    return Field(f.grid, f.grid.forward(f.values), DUAL)


def from_dual(g: Field) -> Field:
    if g.space != DUAL:
        raise GridError("from_dual expects a dual field")
    return Field(g.grid, g.grid.inverse(g.values), PHYSICAL)


def sobolev_norm(f: Field, ell: float) -> float:
    if ell < 0:
        raise GridError(f"Sobolev order must be nonnegative, got {ell}")
    if f.space == DUAL:
        weight = (1.0 + f.grid.xi_squared) ** ell
        return float(np.sqrt(np.sum(weight * np.abs(f.values) ** 2) / f.grid.volume))
    return f.grid.norm(f.values, ell)


def apply_multiplier(symbol: np.ndarray, f: Field) -> Field:
    """Apply a sampled symbol; scalar symbols act componentwise."""
    grid = f.grid
    symbol = np.asarray(symbol)
    if symbol.shape != grid.shape and (
        symbol.ndim != grid.n + 2 or symbol.shape[2:] != grid.shape or symbol.shape[1] != f.k
    ):
        raise GridError(
            f"Symbol shape {symbol.shape} does not match field with k={f.k} on {grid}"
        )
    if not np.all(np.isfinite(symbol)):
        raise GridError("Symbol samples must be finite")
    values_hat = f.values if f.space == DUAL else grid.forward(f.values)
    if symbol.shape == grid.shape:
        out_hat = symbol * values_hat
    else:
        out_hat = np.einsum("ij...,j...->i...", symbol, values_hat)
    if f.space == DUAL:
        return Field(grid, out_hat, DUAL)
    return Field(grid, grid.inverse(out_hat), PHYSICAL)
