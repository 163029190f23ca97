"""Radial ground states of  u'' + (n-1)/r u' - u + u^p = 0  and their linearization."""

from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import Any, Optional

import numpy as np
from scipy import integrate, interpolate, special
from scipy.sparse.linalg import LinearOperator, eigsh

from .constants import (
    GS_DIMENSION_STEP,
    GS_MAX_NEWTON,
    GS_NODES,
    GS_NONDEGENERACY_MARGIN,
    GS_R_MAX,
)
from .errors import ConfigError, MaxIterations, NondegeneracyFailure
from .grid import Field, UniformGrid
from .iteration_record import IterationHistory
from .symmetry import SymmetryGroup

logger = logging.getLogger(__name__)

FINE_STEP = 0.01
TOL_UPDATE = 1e-10
POSITIVITY_FLOOR = -1e-12


def closed_form_1d(r: np.ndarray, p: int) -> np.ndarray:
    """The one-dimensional ground state for p = 2 or 3."""
    if p == 2:
        return 1.5 / np.cosh(r / 2.0) ** 2
    if p == 3:
        return np.sqrt(2.0) / np.cosh(r)
    raise ConfigError(f"Closed form known for p = 2, 3 only, got {p}")


def chebyshev_matrix(count: int) -> tuple[np.ndarray, np.ndarray]:
    """Chebyshev points x_j = cos(j pi / count) and the differentiation matrix."""
    j = np.arange(count + 1)
    x = np.cos(np.pi * j / count)
    c = np.where((j == 0) | (j == count), 2.0, 1.0) * (-1.0) ** j
    X = np.tile(x, (count + 1, 1)).T
    dX = X - X.T
    D = np.outer(c, 1.0 / c) / (dX + np.eye(count + 1))
    D = D - np.diag(D.sum(axis=1))
    return x, D


class GroundState:
    """Positive radial solution with a spline evaluator on [0, r_max]."""

    def __init__(
        self,
        n: int,
        p: int,
        r: np.ndarray,
        u: np.ndarray,
        residual: float = 0.0,
        iterations: int = 0,
    ):
        self.n = n
        self.p = p
        self.r = np.asarray(r, dtype=float)
        self.u = np.asarray(u, dtype=float)
        self.residual = residual
        self.iterations = iterations
        self.r_max = float(self.r[-1])
        self.spline = interpolate.CubicSpline(self.r, self.u, bc_type="not-a-knot")
        self.decay = self._fit_decay()

    @classmethod
    def zero(cls, n: int, p: int = 2, r_max: float = GS_R_MAX) -> GroundState:
        r = np.arange(0.0, r_max + FINE_STEP / 2, FINE_STEP)
        return cls(n, p, r, np.zeros_like(r))

    @property
    def peak(self) -> float:
        return float(self.u[0])

    @property
    def is_trivial(self) -> bool:
        return not np.any(self.u)

    def __call__(self, r: np.ndarray) -> np.ndarray:
        r = np.abs(np.asarray(r, dtype=float))
        return np.where(r <= self.r_max, self.spline(np.minimum(r, self.r_max)), 0.0)

    def derivative(self, r: np.ndarray) -> np.ndarray:
        r = np.abs(np.asarray(r, dtype=float))
        return np.where(r <= self.r_max, self.spline(np.minimum(r, self.r_max), 1), 0.0)

    def _fit_decay(self) -> tuple[float, float]:
        if self.is_trivial:
            return 0.0, float("nan")
        mask = (self.r >= 5.0) & (self.r <= min(20.0, 0.5 * self.r_max)) & (self.u > 1e-300)
        if np.count_nonzero(mask) < 3:
            return float("nan"), float("nan")
        r = self.r[mask]
        log_u = np.log(self.u[mask] * r ** ((self.n - 1) / 2.0))
        slope, intercept = np.polyfit(r, log_u, 1)
        return float(np.exp(intercept)), float(-slope)

    def on_grid(self, grid: UniformGrid, transform: Optional[np.ndarray] = None) -> np.ndarray:
        """u*(|T^-1 x|) at every node, shape grid.shape."""
        nodes = grid.nodes
        if transform is not None:
            inverse = np.linalg.inv(np.asarray(transform, dtype=float))
            nodes = np.tensordot(inverse, nodes, axes=(1, 0))
        return self(np.sqrt(np.sum(nodes**2, axis=0)))

    def gradient_on_grid(self, grid: UniformGrid) -> np.ndarray:
        """Spectral partial derivatives of u* on the grid, shape (n,) + grid.shape."""
        values = self.on_grid(grid)[np.newaxis]
        return np.stack(
            [grid.apply_symbol(1j * grid.frequencies[d], values)[0] for d in range(grid.n)]
        )

    def transfer_residual(self, grid: UniformGrid) -> float:
        """max |Delta u - u + u^p| after evaluation on the tensor grid."""
        values = self.on_grid(grid)[np.newaxis]
        laplacian = grid.apply_symbol(-grid.xi_squared, values)
        return float(np.max(np.abs(laplacian - values + values**self.p)))

    def nehari_defect(self) -> float:
        """int |grad u|^2 + int u^2 - int u^(p+1), radially integrated."""
        if self.is_trivial:
            return 0.0
        r = np.arange(0.0, self.r_max + FINE_STEP / 2, FINE_STEP)
        sphere = 2.0 * np.pi ** (self.n / 2) / special.gamma(self.n / 2)
        weight = sphere * r ** (self.n - 1)
        u = self(r)
        du = self.derivative(r)
        integrand = weight * (du**2 + u**2 - u ** (self.p + 1))
        return float(integrate.simpson(integrand, x=r))

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["r", "u"])
            for r, u in zip(self.r, self.u):
                writer.writerow([repr(float(r)), repr(float(u))])
        return path

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "p": self.p,
            "peak": self.peak,
            "residual": self.residual,
            "iterations": self.iterations,
            "decay": {"C": self.decay[0], "rate": self.decay[1]},
            "r_max": self.r_max,
        }


def _newton_radial(
    d: float, p: int, r: np.ndarray, Dr: np.ndarray, D2: np.ndarray, u: np.ndarray,
    history: IterationHistory,
) -> tuple[np.ndarray, float]:
    count = r.size
    interior = slice(1, count - 1)
    inv_r = np.zeros(count)
    inv_r[interior] = (d - 1.0) / r[interior]
    operator = D2 + inv_r[:, np.newaxis] * Dr - np.eye(count)

    def residual(values: np.ndarray) -> np.ndarray:
        F = operator @ values + values**p
        F[0] = Dr[0] @ values
        F[-1] = values[-1]
        return F

    F = residual(u)
    for iteration in range(GS_MAX_NEWTON):
        J = operator + np.diag(p * u ** (p - 1))
        J[0] = Dr[0]
        J[-1] = 0.0
        J[-1, -1] = 1.0
        step = np.linalg.solve(J, -F)
        damping = 1.0
        while True:
            trial = u + damping * step
            if np.min(trial) > POSITIVITY_FLOOR * np.max(trial) or damping < 1e-4:
                break
            damping /= 2.0
        u = trial
        F = residual(u)
        size = float(np.max(np.abs(step))) * damping
        history.record(iteration, float(np.max(np.abs(F[interior]))), size)
        if size < TOL_UPDATE * max(1.0, float(np.max(np.abs(u)))):
            return u, float(np.max(np.abs(F[interior])))
    raise MaxIterations(
        f"Ground-state Newton did not converge in dimension {d} after {GS_MAX_NEWTON} iterations",
        {"residuals": history.residuals},
    )


def solve_groundstate(
    n: int, p: int = 2, r_max: float = GS_R_MAX, N_r: int = GS_NODES
) -> GroundState:
    """Ground state by damped Newton on a Chebyshev-collocated radial operator.

    Starts from the one-dimensional closed form and follows the dimension
    parameter up to n in steps of GS_DIMENSION_STEP.
    """
    if n not in range(1, 6):
        raise ConfigError(f"Ground states are computed for n < 6, got {n}")
    if p not in (2, 3):
        raise ConfigError(f"Power must be 2 or 3, got {p}")
    if r_max < 20:
        raise ConfigError(f"r_max must be at least 20, got {r_max}")

    x, D = chebyshev_matrix(N_r)
    r = r_max * (1.0 - x) / 2.0
    Dr = -2.0 / r_max * D
    D2 = Dr @ Dr

    u = closed_form_1d(r, p)
    u[-1] = 0.0
    history = IterationHistory("groundstate")
    dimensions = list(np.arange(1.0, n, GS_DIMENSION_STEP)) + [float(n)]
    residual = 0.0
    for d in dimensions:
        u, residual = _newton_radial(d, p, r, Dr, D2, u, history)
        logger.debug(f"Ground state at dimension {d}: peak {u[0]:.12f}, residual {residual:.2e}")

    if np.min(u) < POSITIVITY_FLOOR * np.max(u) or np.any(np.diff(u) > 1e-12):
        raise NondegeneracyFailure(
            "Converged radial profile is not positive and decreasing", {"peak": float(u[0])}
        )

    fine = np.arange(0.0, r_max + FINE_STEP / 2, FINE_STEP)
    fine[-1] = min(fine[-1], r_max)
    values = interpolate.BarycentricInterpolator(r, u)(fine)
    values[-1] = 0.0
    gs = GroundState(n, p, fine, np.maximum(values, 0.0), residual, len(history))
    logger.info(f"Ground state n={n}, p={p}: u*(0) = {gs.peak:.10f}, residual {residual:.2e}")
    return gs


def shoot_groundstate(n: int, p: int = 2, r_end: float = 25.0, tol: float = 1e-13) -> float:
    """u*(0) by bisection on the shooting parameter."""
    r0 = 1e-6

    def rhs(r: float, y: np.ndarray) -> list[float]:
        u, du = y
        return [du, -(n - 1) / r * du + u - u * abs(u) ** (p - 1)]

    def crosses_zero(r, y):
        return y[0]

    crosses_zero.terminal = True
    crosses_zero.direction = -1

    def turns(r, y):
        return y[1]

    turns.terminal = True
    turns.direction = 1

    def overshoots(a: float) -> bool:
        curvature = (a - a**p) / n
        y0 = [a + 0.5 * curvature * r0 * r0, curvature * r0]
        sol = integrate.solve_ivp(
            rhs, (r0, r_end), y0, method="DOP853", rtol=1e-12, atol=1e-14,
            events=(crosses_zero, turns),
        )
        return sol.t_events[0].size > 0

    low, high = 1.0 + 1e-9, 10.0
    while high - low > tol * high:
        middle = 0.5 * (low + high)
        if overshoots(middle):
            high = middle
        else:
            low = middle
    return 0.5 * (low + high)


def apply_linearization(gs: GroundState, h: Field, transform: Optional[np.ndarray] = None) -> Field:
    """-Delta h + h - p u*^(p-1) h."""
    grid = h.grid
    potential = gs.p * gs.on_grid(grid, transform) ** (gs.p - 1)
    values = grid.apply_symbol(1.0 + grid.xi_squared, h.values) - potential * h.values
    return Field(grid, values)


class SpectralReport:
    """Distance of the linearization spectrum from zero, relative to -Delta + 1."""

    def __init__(
        self,
        margin: float,
        threshold: float,
        symmetric_values: list[float],
        zero_modes: list[dict[str, float]],
    ):
        self.margin = margin
        self.threshold = threshold
        self.symmetric_values = symmetric_values
        self.zero_modes = zero_modes

    @property
    def passed(self) -> bool:
        return self.margin >= self.threshold

    def to_dict(self) -> dict[str, Any]:
        return {
            "margin": self.margin,
            "threshold": self.threshold,
            "passed": self.passed,
            "symmetric_ritz_values": self.symmetric_values,
            "zero_modes": self.zero_modes,
        }


def _top_eigenvalues(operator: LinearOperator, size: int, cutoff: float, seed: int = 0) -> tuple:
    """Eigenpairs of a positive compact operator down to the value cutoff."""
    count = min(8, size - 2)
    rng = np.random.default_rng(seed)
    while True:
        values, vectors = eigsh(operator, k=count, which="LA", v0=rng.standard_normal(size), tol=1e-10)
        order = np.argsort(values)[::-1]
        values, vectors = values[order], vectors[:, order]
        if values[-1] < cutoff or count >= min(64, size - 2):
            return values, vectors
        count = min(2 * count, size - 2)


def check_nondegeneracy(
    gs: GroundState,
    group: Optional[SymmetryGroup],
    grid: UniformGrid,
    threshold: float = GS_NONDEGENERACY_MARGIN,
    transform: Optional[np.ndarray] = None,
) -> SpectralReport:
    """Smallest |1 - kappa| over eigenvalues kappa of the compact part
    (1 - Delta)^(-1/2) p u*^(p-1) (1 - Delta)^(-1/2) on the symmetric subspace."""
    elements = list(group.elements) if group is not None else [np.eye(grid.n, dtype=int)]
    shape = (1,) + grid.shape
    size = grid.size
    smoothing = (1.0 + grid.xi_squared) ** -0.5
    potential = gs.p * gs.on_grid(grid, transform) ** (gs.p - 1)

    def compact(vector: np.ndarray, project: bool) -> np.ndarray:
        values = vector.reshape(shape)
        if project:
            values = grid.symmetrize(values, elements)
        values = grid.apply_symbol(smoothing, potential * grid.apply_symbol(smoothing, values))
        if project:
            values = grid.symmetrize(values, elements)
        return values.ravel()

    if gs.is_trivial:
        report = SpectralReport(1.0, threshold, [0.0], [])
        logger.info("Trivial profile: linearization is -Delta + 1")
        return report

    symmetric = LinearOperator((size, size), matvec=lambda v: compact(v, True), dtype=float)
    kappa, _ = _top_eigenvalues(symmetric, size, 1.0 - threshold)
    margin = float(np.min(np.abs(1.0 - kappa)))

    free = LinearOperator((size, size), matvec=lambda v: compact(v, False), dtype=float)
    kappa_free, vectors = _top_eigenvalues(free, size, 1.0 - threshold, seed=1)
    gradient = gs.gradient_on_grid(grid).reshape(grid.n, -1).T
    zero_modes = []
    for value, g in zip(kappa_free, vectors.T):
        if abs(1.0 - value) >= threshold:
            continue
        h = grid.apply_symbol(smoothing, g.reshape(shape)).ravel()
        coefficients, *_ = np.linalg.lstsq(gradient, h, rcond=None)
        overlap = float(np.linalg.norm(gradient @ coefficients) / np.linalg.norm(h))
        zero_modes.append({"ritz": float(1.0 - value), "overlap": overlap})

    report = SpectralReport(margin, threshold, [float(1.0 - v) for v in kappa], zero_modes)
    logger.info(f"Nondegeneracy margin {margin:.4f} (threshold {threshold}), {len(zero_modes)} near-zero modes")
    if not report.passed:
        raise NondegeneracyFailure(
            f"Linearization nearly singular on the symmetric subspace (margin {margin:.3e})",
            report.to_dict(),
        )
    return report
