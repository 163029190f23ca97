"""Parameter sweeps, asymptotic slope fits, tail classification and periodic studies."""

from __future__ import annotations

import csv
import json
import logging
import time
from pathlib import Path
from typing import Any, Optional, Protocol, Sequence

import numpy as np
from scipy import fft, optimize

from .constants import TAIL_MIN_SAMPLES, TAIL_NOISE_FLOOR, TAIL_R2_MARGIN, TAIL_WINDOW
from .errors import AllFailed, ConfigError, HypothesisError, SolverError, WindowUnderResolved
from .grid import UniformGrid, make_grid
from .solver import SpikeSolution

logger = logging.getLogger(__name__)

# a fit this many times smaller in residual wins even inside the R^2 margin
DECISIVE_RESIDUAL_RATIO = 100.0


class Solver(Protocol):
    grid_z: UniformGrid

    def solve(
        self, mu: float, w0: Optional[np.ndarray] = None, grid_z: Optional[UniformGrid] = None
    ) -> SpikeSolution: ...


def fit_slope(x: Sequence[float], y: Sequence[float], skip_first: bool = True) -> Optional[float]:
    """Least-squares slope of log y against log x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    mask = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    x, y = x[mask], y[mask]
    if skip_first and x.size > 2:
        x, y = x[1:], y[1:]
    if x.size < 2:
        return None
    slope, _ = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope)


class SweepEntry:
    """One converged point of a sweep."""

    def __init__(self, solution: SpikeSolution, warm: bool, wall_time: float):
        self.solution = solution
        self.mu = solution.mu
        self.eps = solution.eps
        self.warm = warm
        self.wall_time = wall_time
        self.tail: Optional[TailReport] = None
        diagnostics = solution.diagnostics
        self.amplitude = solution.amplitude
        self.norm_w = diagnostics.get("norm_w")
        self.norm_v_h = diagnostics.get("norm_v_h")
        self.norm_u_perp = diagnostics.get("norm_u_perp")
        self.residual_original = diagnostics.get("residual_original")
        iterations = diagnostics.get("iterations", {})
        self.iterations_outer = iterations.get("outer", 0)
        self.iterations_inner = iterations.get("inner", 0)

    def to_dict(self) -> dict[str, Any]:
        return {
            "mu": self.mu,
            "eps": self.eps,
            "amplitude": self.amplitude,
            "norm_w": self.norm_w,
            "norm_v_h": self.norm_v_h,
            "norm_u_perp": self.norm_u_perp,
            "residual_original": self.residual_original,
            "iterations_outer": self.iterations_outer,
            "iterations_inner": self.iterations_inner,
            "warm": self.warm,
            "tail": None if self.tail is None else self.tail.to_dict(),
        }


class ContinuationResult:
    """Ordered sweep entries, failures and fitted log-log slopes."""

    CSV_COLUMNS = (
        "mu", "eps", "amplitude", "norm_w", "norm_v_h", "norm_u_perp", "residual_original",
        "iterations_outer", "iterations_inner", "warm",
    )

    def __init__(self, entries: list[SweepEntry], failures: list[dict[str, Any]]):
        self.entries = entries
        self.failures = failures
        self.fitted_slopes = self._fit()

    def _fit(self) -> dict[str, Optional[float]]:
        mus = [e.mu for e in self.entries]
        eps = [e.eps for e in self.entries]
        slopes = {
            "amplitude_vs_mu": fit_slope(mus, [e.amplitude for e in self.entries]),
            "norm_w_vs_eps": fit_slope(eps, [e.norm_w for e in self.entries]),
            "norm_u_perp_vs_mu": fit_slope(mus, [e.norm_u_perp for e in self.entries]),
            "norm_v_h_vs_mu": fit_slope(mus, [e.norm_v_h for e in self.entries]),
        }
        logger.info(f"Fitted slopes: {slopes}")
        return slopes

    @property
    def mu_values(self) -> list[float]:
        return [e.mu for e in self.entries]

    def largest_converged(self) -> Optional[float]:
        return max(self.mu_values) if self.entries else None

    def to_dict(self) -> dict[str, Any]:
        return {
            "entries": [e.to_dict() for e in self.entries],
            "failures": self.failures,
            "fitted_slopes": self.fitted_slopes,
            "largest_converged_mu": self.largest_converged(),
        }

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(list(self.CSV_COLUMNS) + ["tail_class", "tail_parameter"])
            for entry in self.entries:
                row = entry.to_dict()
                tail = entry.tail
                writer.writerow(
                    [row[c] for c in self.CSV_COLUMNS]
                    + ([tail.classification, tail.parameter] if tail else ["", ""])
                )
        return path

    def to_json(self, path: str | Path) -> Path:
        path = Path(path)
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
        return path


def sweep(
    solver: Solver,
    mu_list: Sequence[float],
    tails: bool = False,
    kernel_exponent: Optional[float] = None,
) -> ContinuationResult:
    """Solve along decreasing mu, warm-starting each point from the previous corrector."""
    mu_list = [float(mu) for mu in mu_list]
    if not mu_list:
        raise ConfigError("Sweep needs at least one mu value")
    if any(mu <= 0 for mu in mu_list):
        raise ConfigError(f"Sweep mu values must be positive, got {mu_list}")
    if any(b >= a for a, b in zip(mu_list, mu_list[1:])):
        raise ConfigError(f"Sweep mu values must be strictly decreasing, got {mu_list}")

    entries: list[SweepEntry] = []
    failures: list[dict[str, Any]] = []
    previous: Optional[np.ndarray] = None
    for mu in mu_list:
        started = time.perf_counter()
        solution = None
        warm = previous is not None
        attempts = [previous, None] if warm else [None]
        for w0 in attempts:
            try:
                solution = solver.solve(mu, w0=w0)
                warm = w0 is not None
                break
            except (SolverError, HypothesisError) as err:
                logger.warning(f"Solve at mu = {mu} failed ({'warm' if w0 is not None else 'cold'}): {err}")
                last_error = err
        if solution is None:
            failures.append({"mu": mu, **last_error.to_dict()})
            continue
        entry = SweepEntry(solution, warm, time.perf_counter() - started)
        if tails:
            try:
                entry.tail = tail_analysis(solution, kernel_exponent)
            except WindowUnderResolved as err:
                logger.info(f"Tail at mu = {mu} not resolved: {err.message}")
        entries.append(entry)
        previous = solution.w

    if not entries:
        raise AllFailed(f"No mu in {mu_list} converged", {"failures": failures})
    return ContinuationResult(entries, failures)


def _r_squared(observed: np.ndarray, fitted: np.ndarray) -> tuple[float, float]:
    residual = float(np.sum((observed - fitted) ** 2))
    total = float(np.sum((observed - observed.mean()) ** 2))
    return (1.0 - residual / total if total > 0 else 0.0), residual


class TailReport:
    """Exponential versus algebraic fit of the far-field profile."""

    def __init__(
        self,
        classification: str,
        rate: float,
        exponent: float,
        r2_exponential: float,
        r2_algebraic: float,
        window: tuple[float, float],
        samples: int,
        profile: tuple[np.ndarray, np.ndarray],
        kernel_exponent: Optional[float] = None,
    ):
        self.classification = classification
        self.rate = rate
        self.exponent = exponent
        self.r2_exponential = r2_exponential
        self.r2_algebraic = r2_algebraic
        self.window = window
        self.samples = samples
        self.profile = profile
        self.kernel_exponent = kernel_exponent

    @property
    def parameter(self) -> float:
        return self.exponent if self.classification == "algebraic" else self.rate

    def to_dict(self) -> dict[str, Any]:
        out = {
            "classification": self.classification,
            "rate": self.rate,
            "exponent": self.exponent,
            "r2_exponential": self.r2_exponential,
            "r2_algebraic": self.r2_algebraic,
            "window": list(self.window),
            "samples": self.samples,
        }
        if self.kernel_exponent is not None:
            out["kernel_exponent"] = self.kernel_exponent
            out["exponent_ratio"] = self.exponent / self.kernel_exponent
        return out

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        x, f = self.profile
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["x", "abs_u"])
            for a, b in zip(x, f):
                writer.writerow([repr(float(a)), repr(float(b))])
        return path


def centre_line(solution: SpikeSolution) -> tuple[np.ndarray, np.ndarray]:
    """|U| (max over components) along the first axis for x >= 0."""
    grid = solution.grid
    centre = grid.N // 2
    index = (slice(None), slice(centre, None)) + (centre,) * (grid.n - 1)
    values = np.max(np.abs(solution.U.values[index]), axis=0)
    x = grid.axis_nodes(0)[centre:]
    return x, values


def tail_analysis(
    solution: SpikeSolution,
    kernel_exponent: Optional[float] = None,
    window: tuple[float, float] = TAIL_WINDOW,
) -> TailReport:
    """Fit A(e^-lx + e^-l(2L-x)) and A(x^-s + (2L-x)^-s) to the far field in log space."""
    x, f = centre_line(solution)
    L = solution.grid.L[0]
    floor = TAIL_NOISE_FLOOR * max(1.0, solution.amplitude)
    mask = (x >= window[0] * L) & (x <= window[1] * L) & (f > floor)
    if np.count_nonzero(mask) < TAIL_MIN_SAMPLES:
        raise WindowUnderResolved(
            f"Only {np.count_nonzero(mask)} samples above the noise floor {floor:.1e} in the tail window",
            {"window": [window[0] * L, window[1] * L]},
        )
    xs, log_f = x[mask], np.log(f[mask])

    def exponential(t, log_a, rate):
        return log_a + np.logaddexp(-rate * t, -rate * (2.0 * L - t))

    def algebraic(t, log_a, power):
        return log_a + np.logaddexp(-power * np.log(t), -power * np.log(2.0 * L - t))

    rate0 = max(-np.polyfit(xs, log_f, 1)[0], 1e-6)
    power0 = max(-np.polyfit(np.log(xs), log_f, 1)[0], 1e-3)
    p_exp, _ = optimize.curve_fit(exponential, xs, log_f, p0=[log_f[0] + rate0 * xs[0], rate0], maxfev=10000)
    p_alg, _ = optimize.curve_fit(
        algebraic, xs, log_f, p0=[log_f[0] + power0 * np.log(xs[0]), power0], maxfev=10000
    )
    r2_exp, sse_exp = _r_squared(log_f, exponential(xs, *p_exp))
    r2_alg, sse_alg = _r_squared(log_f, algebraic(xs, *p_alg))

    if r2_alg - r2_exp > TAIL_R2_MARGIN or sse_alg * DECISIVE_RESIDUAL_RATIO < sse_exp:
        classification = "algebraic"
    elif r2_exp >= r2_alg or sse_exp * DECISIVE_RESIDUAL_RATIO < sse_alg:
        classification = "exponential"
    else:
        classification = "inconclusive"
    report = TailReport(
        classification, float(p_exp[1]), float(p_alg[1]), r2_exp, r2_alg,
        (window[0] * L, window[1] * L), int(xs.size), (x, f), kernel_exponent,
    )
    logger.info(
        f"Tail at mu = {solution.mu}: {classification} (rate {p_exp[1]:.4g}, exponent {p_alg[1]:.4g}, "
        f"R2 {r2_exp:.5f} / {r2_alg:.5f})"
    )
    return report


class PeriodicReport:
    """Spike amplitude against the rescaled period half-width L0."""

    def __init__(self, mu: float, L0: list[float], amplitudes: list[float], grids: list[UniformGrid]):
        self.mu = mu
        self.L0 = L0
        self.amplitudes = amplitudes
        self.grids = grids
        self.increments = [abs(b - a) for a, b in zip(amplitudes, amplitudes[1:])]
        self.semilog_slope, self.loglog_slope = self._fit()

    def _fit(self) -> tuple[Optional[float], Optional[float]]:
        if len(self.increments) < 2:
            return None, None
        x = np.asarray(self.L0[1:])
        y = np.asarray(self.increments)
        mask = y > 0
        if np.count_nonzero(mask) < 2:
            return None, None
        semilog = float(np.polyfit(x[mask], np.log(y[mask]), 1)[0])
        loglog = float(np.polyfit(np.log(x[mask]), np.log(y[mask]), 1)[0])
        return semilog, loglog

    def converges_monotonically(self) -> bool:
        target = self.amplitudes[-1]
        gaps = [abs(a - target) for a in self.amplitudes]
        return all(b <= a for a, b in zip(gaps, gaps[1:]))

    def to_dict(self) -> dict[str, Any]:
        return {
            "mu": self.mu,
            "L0": self.L0,
            "amplitudes": self.amplitudes,
            "increments": self.increments,
            "semilog_slope": self.semilog_slope,
            "loglog_slope": self.loglog_slope,
            "monotone": self.converges_monotonically(),
            "grids": [{"L": list(g.L), "N": g.N} for g in self.grids],
        }


def periodic_grid(base: UniformGrid, L0: float) -> UniformGrid:
    """Grid of half-width L0 with the spacing of base."""
    count = int(np.ceil(2.0 * L0 / base.h[0]))
    count = fft.next_fast_len(max(count, 8))
    count += count % 2
    return make_grid(base.n, L0, count)


def periodic_study(solver: Solver, mu: float, L0_list: Sequence[float]) -> PeriodicReport:
    """Solve at fixed mu on rescaled boxes of half-width L0, i.e. physical period ~ 2 L0 / sqrt(mu)."""
    L0_values = sorted(float(v) for v in L0_list)
    amplitudes = []
    grids = []
    for L0 in L0_values:
        grid = periodic_grid(solver.grid_z, L0)
        solution = solver.solve(mu, grid_z=grid)
        amplitudes.append(solution.amplitude)
        grids.append(grid)
        logger.info(f"Periodic study L0 = {L0}: amplitude {solution.amplitude:.12e} on N = {grid.N}")
    return PeriodicReport(mu, L0_values, amplitudes, grids)
