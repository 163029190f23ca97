import logging
import time
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from .components.constants import (
    DEFAULT_GRIDS,
    GS_NONDEGENERACY_MARGIN,
    PRECONDITIONER_SAMPLES,
    RESIDUAL_TOLERANCE,
    TOL_INNER,
    TOL_OUTER,
)
from .components.continuation import ContinuationResult, PeriodicReport, TailReport, periodic_study, sweep, tail_analysis
from .components.errors import ConfigError, GridError, HypothesisError
from .components.grid import UniformGrid, make_grid
from .components.groundstate import GroundState, SpectralReport, check_nondegeneracy, solve_groundstate
from .components.hypotheses import BifurcationData, HypothesisChecker, transcritical_from_fold
from .components.kernel import KernelSpec, make_entry
from .components.nonlinearity import Nonlinearity, PolynomialNonlinearity
from .components.normalform import MultiplierCache, measure_preconditioner_ratio, preconditioner_gap, random_fields
from .components.solver import SpikeSolution, TaylorCoefficients, assemble, build_rescaled, extract_taylor, remainder_order, scheme_projection, solve_corrector
from .components.symmetry import SymmetryGroup
from .components.types import RunConfig
from .presets import Preset, preset

# Configure logger
logger = logging.getLogger(__name__)


class SpikeSolver:
    """Main class running the spike pipeline for one configured problem."""

    def __init__(self, config: RunConfig, base_dir: Optional[str | Path] = None):
        self.config = config
        self.base_dir = str(base_dir) if base_dir is not None else None
        self.n: int = config.get("dimension", 1)
        self.ell: int = config.get("ell", 2)
        self.tolerances: Dict[str, float] = dict(config.get("tolerances", {}))
        self.full_newton: bool = config.get("full_newton", False)
        self.seed: int = config.get("seed", 0)
        self.preset: Optional[Preset] = None
        self.symmetry: Optional[SymmetryGroup] = None
        self.kernel: KernelSpec
        self.nonlinearity: Nonlinearity
        self.grid_z: UniformGrid

        # Problem and scheme state
        self.checker: Optional[HypothesisChecker] = None
        self.bifurcation: Optional[BifurcationData] = None
        self.normalized_kernel: Optional[KernelSpec] = None
        self.projection: Optional[tuple] = None
        self.taylor: Optional[TaylorCoefficients] = None
        self.cache: Optional[MultiplierCache] = None
        self.ground_state: Optional[GroundState] = None
        self.spectral: Optional[SpectralReport] = None
        self._grounds: Dict[tuple, np.ndarray] = {}

        self._initialize_preset()
        self._initialize_symmetry()
        self._initialize_kernel()
        self._initialize_nonlinearity()
        self._initialize_grid()

    @property
    def order(self) -> int:
        if "order" in self.config:
            return self.config["order"]
        return self.preset.order if self.preset is not None else 2

    @property
    def mu(self) -> float:
        if "mu" in self.config:
            return self.config["mu"]
        return self.preset.mu if self.preset is not None else 0.01

    def _initialize_preset(self) -> None:
        """Resolve the named preset, if any."""
        preset_config = self.config.get("preset")
        if preset_config is not None:
            self.preset = preset(preset_config["name"], self.n, preset_config.get("params", {}))
            logger.info(f"Using preset '{self.preset.name}'")

    def _initialize_symmetry(self) -> None:
        """Build the symmetry group from generators or a group name."""
        symmetry = self.config.get("symmetry")
        if not symmetry:
            return
        if "named" in symmetry:
            self.symmetry = SymmetryGroup.named(symmetry["named"], self.n)
        else:
            self.symmetry = SymmetryGroup(symmetry.get("generators", []), self.n)

    def _initialize_kernel(self) -> None:
        """Kernel entries from the config, falling back to the preset kernel."""
        descriptors = self.config.get("kernel")
        if descriptors is None:
            if self.preset is None:
                raise ConfigError("No kernel configured")
            descriptors = self.preset.kernel
        entries = [
            [None if d is None else make_entry(d, self.n, self.base_dir) for d in row]
            for row in descriptors
        ]
        kernel = KernelSpec(entries, self.symmetry)
        speed = self.config.get("traveling_speed", 0.0)
        if speed:
            kernel = kernel.traveling(speed)
            logger.info(f"Traveling-wave transform with speed {speed}")
        self.kernel = kernel
        self.kernel_descriptors = descriptors

    def _initialize_nonlinearity(self) -> None:
        """Polynomial table from the config, optionally unfolded about a fold."""
        config = self.config.get("nonlinearity")
        if config is None:
            if self.preset is None:
                raise ConfigError("No nonlinearity configured")
            self.nonlinearity = self.preset.nonlinearity
        else:
            N: Nonlinearity = PolynomialNonlinearity.from_table(config["polynomial"])
            fold = config.get("fold")
            if fold is not None:
                N = transcritical_from_fold(
                    N, self.kernel.mass(), fold["state"], fold["mu"], fold["tangent"], fold.get("mu_sign", 1)
                )
            self.nonlinearity = N
        if self.nonlinearity.k != self.kernel.k:
            raise ConfigError(
                f"Kernel has k = {self.kernel.k} but the nonlinearity has k = {self.nonlinearity.k}"
            )

    def _initialize_grid(self) -> None:
        """Rescaled grid from the config or the per-dimension default."""
        L_default, N_default = DEFAULT_GRIDS[self.n]
        grid = self.config.get("grid", {})
        self.grid_z = make_grid(self.n, grid.get("L", L_default), grid.get("N", N_default))

    def check_hypotheses(self) -> HypothesisChecker:
        """Run all hypothesis clauses and, when they hold, prepare the scheme."""
        started = time.perf_counter()
        self.checker = HypothesisChecker(
            self.kernel, self.nonlinearity, self.symmetry, self.order, self.tolerances
        )
        self.bifurcation = self.checker.run()
        if self.bifurcation is not None:
            self._initialize_scheme()
        logger.info(f"Hypothesis stage finished in {time.perf_counter() - started:.2f} s")
        return self.checker

    def _initialize_scheme(self) -> None:
        """Normalize the kernel, build P_s, Q and the Taylor data, compute the ground state."""
        bif = self.bifurcation
        self.normalized_kernel = self.kernel.transformed(bif.T0)
        self.projection = scheme_projection(self.normalized_kernel, bif)
        P_s, Q = self.projection
        self.cache = MultiplierCache(self.normalized_kernel, P_s, Q)
        self.taylor = extract_taylor(self.nonlinearity, P_s, Q, cubic=bif.order == 3)

        p = bif.order
        self.ground_state = solve_groundstate(self.n, p)
        threshold = self.tolerances.get("nondegeneracy", GS_NONDEGENERACY_MARGIN)
        self.spectral = self.checker.run_clause(
            "nondegeneracy",
            lambda: check_nondegeneracy(self.ground_state, self.symmetry, self.grid_z, threshold),
            lambda report: f"Linearization margin {report.margin:.4f} on the symmetric subspace",
            lambda report: report.margin - report.threshold,
        )
        if self.spectral is None:
            self.bifurcation = None

    def require_scheme(self) -> BifurcationData:
        if self.checker is None:
            self.check_hypotheses()
        if self.bifurcation is None:
            failure = self.checker.first_failure
            raise failure if failure is not None else HypothesisError("Hypotheses not satisfied")
        return self.bifurcation

    @property
    def elements(self) -> List[np.ndarray]:
        """Group elements compatible with the rescaled grid."""
        if self.symmetry is None:
            return [np.eye(self.n, dtype=int)]
        compatible = []
        for g in self.symmetry.elements:
            try:
                self.grid_z.check_compatible(g)
                compatible.append(g)
            except GridError:
                logger.debug(f"Skipping group element {g.tolist()} on an anisotropic grid")
        return compatible

    def ground_on(self, grid: UniformGrid) -> np.ndarray:
        """Rescaled ground state v* sampled on grid."""
        if grid.key not in self._grounds:
            self._grounds[grid.key] = self.ground_state.on_grid(grid)
        return self._grounds[grid.key]

    def solve(
        self,
        mu: Optional[float] = None,
        w0: Optional[np.ndarray] = None,
        grid_z: Optional[UniformGrid] = None,
        full_newton: Optional[bool] = None,
    ) -> SpikeSolution:
        """Spike at parameter mu on grid_z (default: the configured rescaled grid)."""
        bif = self.require_scheme()
        mu = self.mu if mu is None else mu
        grid = grid_z or self.grid_z
        if w0 is not None and w0.shape != grid.shape:
            w0 = None
        started = time.perf_counter()
        system = build_rescaled(
            self.normalized_kernel, bif, self.nonlinearity, mu, grid, self.cache, self.ell,
            self.projection, self.taylor,
        )
        ground = self.ground_on(grid)
        result = solve_corrector(
            system,
            ground,
            self.elements,
            w0,
            self.full_newton if full_newton is None else full_newton,
            tol=self.tolerances.get("outer", TOL_OUTER),
            inner_tol=self.tolerances.get("inner", TOL_INNER),
        )
        iterations = {
            "outer": result.iterations,
            "inner": result.inner_iterations,
            "linear": result.linear_iterations,
        }
        solution = assemble(
            system, ground + result.w, result.psi, self.kernel, self.normalized_kernel,
            result.w, self.elements, iterations,
        )
        solution.diagnostics["outer_residuals"] = result.history.residuals
        solution.diagnostics["outer_monotone"] = result.history.is_monotone()
        solution.diagnostics["max_symmetry_drift"] = result.max_drift
        solution.diagnostics["remainder_order"] = remainder_order(system, self.seed)
        fields = random_fields(grid, PRECONDITIONER_SAMPLES, self.seed)
        solution.diagnostics["preconditioner"] = {
            "gap": preconditioner_gap(system.eps, grid, self.ell),
            "measured": measure_preconditioner_ratio(system.eps, grid, fields, self.ell),
        }
        logger.info(f"Solved mu = {mu} in {time.perf_counter() - started:.2f} s")
        tolerance = self.tolerances.get("residual", RESIDUAL_TOLERANCE)
        solution.diagnostics["residual_ok"] = solution.residual_original <= tolerance
        if not solution.diagnostics["residual_ok"]:
            logger.warning(
                f"End-to-end residual {solution.residual_original:.3e} at mu = {mu} exceeds {tolerance:.1e}"
            )
        return solution

    def sweep(self, mu_list: List[float], tails: bool = False) -> ContinuationResult:
        self.require_scheme()
        return sweep(self, mu_list, tails, self.kernel_exponent())

    def periodic(self, mu: float, L0_list: List[float]) -> PeriodicReport:
        self.require_scheme()
        return periodic_study(self, mu, L0_list)

    def kernel_exponent(self) -> Optional[float]:
        """Decay exponent 2p when every kernel entry is algebraic."""
        powers = [
            d.get("p") for row in self.kernel_descriptors for d in row
            if d is not None
        ]
        families = {
            d.get("family") for row in self.kernel_descriptors for d in row if d is not None
        }
        if families == {"algebraic"} and all(p is not None for p in powers):
            return 2.0 * min(powers)
        return None

    def tail(self, solution: SpikeSolution) -> TailReport:
        return tail_analysis(solution, self.kernel_exponent())

    def describe(self) -> Dict[str, Any]:
        return {
            "dimension": self.n,
            "k": self.kernel.k,
            "ell": self.ell,
            "order": self.order,
            "kernel": self.kernel.describe(),
            "nonlinearity": self.nonlinearity.describe(),
            "symmetry": None if self.symmetry is None else self.symmetry.to_dict(),
            "grid_z": {"n": self.grid_z.n, "L": list(self.grid_z.L), "N": self.grid_z.N},
            "preset": None if self.preset is None else self.preset.to_dict(),
            "ground_state": None if self.ground_state is None else self.ground_state.to_dict(),
        }
