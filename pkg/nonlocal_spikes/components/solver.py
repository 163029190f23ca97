"""Rescaled spike equations, the two Newton iterations and solution assembly.

In normalized coordinates the system reads P_s T(xi) Q V + H(V; mu) = 0 with
H(V; mu) = -P_s N(Q V; mu), where P_s carries the sign of the critical row.
Writing V = diag(eps^q d_c, eps^2 I) V~(eps x), mu = eps^2 / alpha and
G = eps^-(q+2) H, the rows become

    c:  eps^-2 m(eps xi) v_c + d_c^-1 [L^eps G]_c = 0
    h:  v_h + eps^q [L^eps G]_h = 0

with L^eps the multiplier sampled at eps xi. The h rows are solved for
v_h = psi(v_c); the c row, multiplied by (M^eps)^-1 = 1 + |eps xi|^2, is a
perturbation of  -Delta w + w - p v*^(p-1) w  around the ground state v*.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Optional

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from . import differentiation
from .constants import (
    DEFAULT_ELL,
    FD_STEP,
    FD_STEP_SYMBOL,
    INNER_BALL,
    MAX_INNER_ITERATIONS,
    MAX_NEUMANN_TERMS,
    MAX_OUTER_ITERATIONS,
    OUTER_BALL,
    TOL_INNER,
    TOL_KRYLOV,
    TOL_NEUMANN,
    TOL_OUTER,
    TOL_SYMMETRY_DRIFT,
)
from .errors import (
    GridError,
    GridMismatch,
    InversionFailure,
    KrylovStagnation,
    MaxIterations,
    NoContraction,
    PreconditionFailure,
    SymmetryDrift,
    TrustRegionExceeded,
)
from .grid import Field, UniformGrid
from .hypotheses import BifurcationData
from .iteration_record import IterationHistory
from .kernel import KernelSpec
from .nonlinearity import Nonlinearity
from .normalform import MultiplierCache, MultiplierSet, build_multipliers, compute_PQ

logger = logging.getLogger(__name__)

KRYLOV_RESTART = 60
KRYLOV_MAX_RESTARTS = 20
KRYLOV_ACCEPTABLE = 1e-4
SLOW_NEUMANN_TERMS = 50


def scheme_projection(K: KernelSpec, bif: BifurcationData) -> tuple[np.ndarray, np.ndarray]:
    """P_s, Q for the normalized kernel, with the critical row of P signed by sigma."""
    P, Q = compute_PQ(K, bif.e, bif.e_star)
    signs = np.ones(K.k)
    signs[0] = bif.sigma
    return signs[:, np.newaxis] * P, Q


class TaylorCoefficients:
    """Derivatives of H(V; mu) = -P_s N(Q V; mu) at (0, 0).

    A[j, i] = d_mu d_Vi H_j, B[j, a, b] = d_Va d_Vb H_j and, for the cubic
    scaling, C[j] = d^3 H_j / d V_c^3.
    """

    def __init__(self, A: np.ndarray, B: np.ndarray, C: Optional[np.ndarray] = None):
        self.A = A
        self.B = B
        self.C = C

    def a101(self) -> np.ndarray:
        return self.A[:, 0]

    def a_power(self, p: int) -> np.ndarray:
        """Coefficient vector of v_c^p."""
        if p == 2:
            return 0.5 * self.B[:, 0, 0]
        return self.C / 6.0

    def quadratic_part(self, V: np.ndarray, mu: float) -> np.ndarray:
        """mu A V + 1/2 B[V, V] for V of shape (k, ...)."""
        linear = mu * np.einsum("ji,i...->j...", self.A, V)
        quadratic = 0.5 * np.einsum("jab,a...,b...->j...", self.B, V, V)
        return linear + quadratic

    def to_dict(self) -> dict[str, Any]:
        out = {"A": self.A.tolist(), "B": self.B.tolist()}
        if self.C is not None:
            out["C"] = self.C.tolist()
        return out


def extract_taylor(
    N: Nonlinearity, P_s: np.ndarray, Q: np.ndarray, cubic: bool = False
) -> TaylorCoefficients:
    """Taylor coefficients of the scheme nonlinearity, analytic when available."""
    k = N.k
    zero = np.zeros((k, 1))

    def H(V: np.ndarray, mu: float) -> np.ndarray:
        return -P_s @ N.evaluate((Q @ V)[:, np.newaxis], mu)[:, 0]

    if N.mixed is not None:
        A = -P_s @ N.mixed(zero, 0.0)[..., 0] @ Q
    else:
        A = np.zeros((k, k))
        eye = np.eye(k)
        for i in range(k):
            A[:, i], _ = differentiation.richardson(
                [
                    differentiation.mixed_second(lambda s, t: H(s * eye[i], t), FD_STEP / 2.0**m)
                    for m in range(2)
                ]
            )
    if N.second is not None:
        B = -np.einsum("ja,abc,bi,cl->jil", P_s, N.second(zero, 0.0)[..., 0], Q, Q)
    else:
        B, _ = differentiation.richardson_hessian(lambda V: H(V, 0.0), k, FD_STEP_SYMBOL, levels=2)

    C = None
    if cubic:
        third = getattr(N, "third", None)
        if third is not None:
            C = -np.einsum("ja,abcd,b,c,d->j", P_s, third(zero, 0.0)[..., 0], Q[:, 0], Q[:, 0], Q[:, 0])
        else:
            e_c = np.eye(k)[0]
            C, _ = differentiation.richardson(
                [
                    differentiation.third(lambda s: H(s * e_c, 0.0), FD_STEP_SYMBOL / 2.0**m)
                    for m in range(3)
                ]
            )
    return TaylorCoefficients(np.asarray(A), np.asarray(B), None if C is None else np.asarray(C))


class RescaledSystem:
    """The spike equations in the rescaled variable z = eps y on grid_z."""

    def __init__(
        self,
        grid: UniformGrid,
        multipliers: MultiplierSet,
        nonlinearity: Nonlinearity,
        P_s: np.ndarray,
        Q: np.ndarray,
        bif: BifurcationData,
        mu: float,
        taylor: TaylorCoefficients,
        ell: float = DEFAULT_ELL,
    ):
        if multipliers.grid != grid:
            raise GridMismatch(f"Multipliers sampled on {multipliers.grid}, system grid is {grid}")
        self.grid = grid
        self.multipliers = multipliers
        self.nonlinearity = nonlinearity
        self.P_s = P_s
        self.Q = Q
        self.bif = bif
        self.mu = mu
        self.eps = multipliers.eps
        self.taylor = taylor
        self.ell = ell
        self.k = nonlinearity.k
        self.q = bif.amplitude_exponent
        self.p = bif.order
        if self.p == 2:
            self.d_c = -1.0 / bif.beta_scheme
        else:
            self.d_c = 1.0 / np.sqrt(-bif.gamma_scheme)
        self.scales = np.array([self.eps**self.q * self.d_c] + [self.eps**2] * (self.k - 1))
        self.laplacian = grid.xi_squared
        self.precond = multipliers.precond
        self.alpha_eps, self.beta_eps = self._effective_coefficients()

    def _effective_coefficients(self) -> tuple[np.ndarray, np.ndarray]:
        L = self.multipliers
        alpha_t = self.bif.alpha_scheme
        a101 = self.taylor.a101()
        a_p = self.taylor.a_power(self.p)
        alpha_eps = L.L_cc * (a101[0] / alpha_t)
        beta_eps = L.L_cc * a_p[0]
        for m in range(self.k - 1):
            alpha_eps = alpha_eps + L.L_ch[0, m] * a101[1 + m] / alpha_t
            beta_eps = beta_eps + L.L_ch[0, m] * a_p[1 + m]
        return alpha_eps, beta_eps * self.d_c ** (self.p - 1)

    def _expand(self, vector: np.ndarray, ndim: int) -> np.ndarray:
        return vector.reshape((-1,) + (1,) * ndim)

    def compose(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        return np.concatenate([u[np.newaxis], v], axis=0)

    def physical(self, V_tilde: np.ndarray) -> np.ndarray:
        """U = Q diag(scales) V~ pointwise."""
        V = self._expand(self.scales, self.grid.n) * V_tilde
        return np.einsum("ij,j...->i...", self.Q, V)

    def H(self, V: np.ndarray, mu: Optional[float] = None) -> np.ndarray:
        mu = self.mu if mu is None else mu
        U = np.einsum("ij,j...->i...", self.Q, V)
        return -np.einsum("ij,j...->i...", self.P_s, self.nonlinearity.evaluate(U, mu))

    def G(self, V_tilde: np.ndarray) -> np.ndarray:
        return self.eps ** -(self.q + 2) * self.H(self._expand(self.scales, self.grid.n) * V_tilde)

    def G_jacobian(self, V_tilde: np.ndarray) -> np.ndarray:
        """Pointwise D G, shape (k, k) + grid.shape."""
        U = self.physical(V_tilde)
        J = self.nonlinearity.jacobian(U, self.mu)
        J = -np.einsum("ia,ab...,bj->ij...", self.P_s, J, self.Q)
        return self.eps ** -(self.q + 2) * J * self.scales.reshape((1, -1) + (1,) * self.grid.n)

    def _rows(self, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """([L G]_c, [L G]_h) for component-first values."""
        LG = self.multipliers.apply(values)
        return LG[0], LG[1:]

    def c_row(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        LG_c, _ = self._rows(self.G(self.compose(u, v)))
        m_scaled = self.multipliers.m_eps / self.eps**2
        return self.grid.apply_symbol(m_scaled, u[np.newaxis])[0] + LG_c / self.d_c

    def h_row(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        if self.k == 1:
            return np.zeros((0,) + self.grid.shape)
        _, LG_h = self._rows(self.G(self.compose(u, v)))
        return v + self.eps**self.q * LG_h

    def reduced_c(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """d_c^-1 [L G]_c."""
        LG_c, _ = self._rows(self.G(self.compose(u, v)))
        return LG_c / self.d_c

    def norm(self, values: np.ndarray, ell: Optional[float] = None) -> float:
        if values.size == 0:
            return 0.0
        if values.ndim == self.grid.n:
            values = values[np.newaxis]
        return self.grid.norm(values, self.ell if ell is None else ell)

    def remainder(self, V: np.ndarray, mu: float) -> np.ndarray:
        """R(V; mu) = H(V; mu) minus its quadratic Taylor part."""
        return self.H(V, mu) - self.taylor.quadratic_part(V, mu)

    def describe(self) -> dict[str, Any]:
        return {
            "mu": self.mu,
            "eps": self.eps,
            "q": self.q,
            "p": self.p,
            "d_c": self.d_c,
            "taylor": self.taylor.to_dict(),
            "normalized_a101": float(self.taylor.a101()[0] / self.bif.alpha_scheme),
            "normalized_a_p": float(self.taylor.a_power(self.p)[0] * self.d_c ** (self.p - 1)),
        }


def build_rescaled(
    K_normalized: KernelSpec,
    bif: BifurcationData,
    N: Nonlinearity,
    mu: float,
    grid_z: UniformGrid,
    cache: Optional[MultiplierCache] = None,
    ell: float = DEFAULT_ELL,
    projection: Optional[tuple[np.ndarray, np.ndarray]] = None,
    taylor: Optional[TaylorCoefficients] = None,
) -> RescaledSystem:
    """Rescaled system at parameter mu; requires alpha_scheme * mu > 0."""
    if not bif.alpha_scheme * mu > 0:
        raise PreconditionFailure(
            f"Spikes need alpha * mu > 0 in scheme orientation, got alpha = {bif.alpha_scheme}, mu = {mu}",
            {"alpha_scheme": bif.alpha_scheme, "mu": mu},
        )
    if bif.order == 3 and not (bif.gamma_scheme is not None and bif.gamma_scheme < 0):
        raise PreconditionFailure(
            f"Cubic scaling needs a negative scheme cubic coefficient, got {bif.gamma_scheme}"
        )
    eps = float(np.sqrt(bif.alpha_scheme * mu))
    if projection is None:
        projection = scheme_projection(K_normalized, bif)
    P_s, Q = projection
    if cache is not None:
        multipliers = cache.get(eps, grid_z)
    else:
        multipliers = build_multipliers(K_normalized, P_s, Q, eps, grid_z)
    if taylor is None:
        taylor = extract_taylor(N, P_s, Q, cubic=bif.order == 3)
    system = RescaledSystem(grid_z, multipliers, N, P_s, Q, bif, mu, taylor, ell)
    logger.debug(f"Rescaled system at mu = {mu}: eps = {eps:.6g}, d_c = {system.d_c:.6g}")
    return system


def remainder_order(system: RescaledSystem, seed: int = 0) -> float:
    """Log-log slope of |R(s V0; s mu0)| against s; 3 for smooth N, inf when R vanishes."""
    rng = np.random.default_rng(seed)
    V0 = rng.standard_normal((system.k, 1))
    mu0 = float(np.sign(system.mu) or 1.0)
    scales = np.array([1e-1, 5e-2, 2.5e-2, 1.25e-2])
    sizes = np.array([float(np.max(np.abs(system.remainder(s * V0, s * mu0)))) for s in scales])
    if np.all(sizes < 1e-15):
        return float("inf")
    sizes = np.maximum(sizes, 1e-300)
    slope, _ = np.polyfit(np.log(scales), np.log(sizes), 1)
    return float(slope)


class NeumannInverse:
    """(I + E)^-1 by the Neumann series for a small operator E."""

    def __init__(self, apply_E, norm):
        self.apply_E = apply_E
        self.norm = norm
        self.last_terms = 0

    def __call__(self, rhs: np.ndarray) -> np.ndarray:
        total = rhs.copy()
        term = rhs
        for count in range(1, MAX_NEUMANN_TERMS + 1):
            term = -self.apply_E(term)
            size = self.norm(term)
            total = total + term
            if size < TOL_NEUMANN:
                self.last_terms = count
                if count > SLOW_NEUMANN_TERMS:
                    logger.warning(f"Neumann series needed {count} terms")
                return total
            if not np.isfinite(size) or size > 1e8:
                break
        raise InversionFailure(
            f"Neumann series did not converge in {MAX_NEUMANN_TERMS} terms",
            {"last_term_norm": float(size)},
        )


def _h_perturbation(system: RescaledSystem, J: np.ndarray):
    """g -> eps^q [L (J_v g)]_h for a pointwise Jacobian J."""
    J_v = J[:, 1:]

    def apply(g: np.ndarray) -> np.ndarray:
        values = np.einsum("ij...,j...->i...", J_v, g)
        return system.eps**system.q * system.multipliers.apply_rows(slice(1, None), values)

    return apply


def solve_vh(
    system: RescaledSystem,
    u: np.ndarray,
    v0: Optional[np.ndarray] = None,
    tol: float = TOL_INNER,
    ball: float = INNER_BALL,
    max_iterations: int = MAX_INNER_ITERATIONS,
) -> tuple[np.ndarray, IterationHistory]:
    """psi(u): the h-rows solved for v_h by a frozen-Jacobian Newton iteration."""
    history = IterationHistory("inner")
    if system.k == 1:
        return np.zeros((0,) + system.grid.shape), history

    v = np.zeros((system.k - 1,) + system.grid.shape) if v0 is None else v0.copy()
    J = system.G_jacobian(system.compose(u, np.zeros_like(v)))
    inverse = NeumannInverse(_h_perturbation(system, J), system.norm)
    for iteration in range(max_iterations):
        residual = system.h_row(u, v)
        size = system.norm(residual)
        history.record(iteration, size)
        if size < tol:
            logger.debug(f"Inner iteration converged in {iteration} steps, |psi| = {system.norm(v):.3e}")
            return v, history
        v = v - inverse(residual)
        if system.norm(v) > ball:
            raise NoContraction(
                f"Reduced component left the ball of radius {ball} (norm {system.norm(v):.3e})",
                {"residuals": history.residuals},
            )
    raise MaxIterations(
        f"Inner iteration did not converge in {max_iterations} steps",
        {"residuals": history.residuals},
    )


class CorrectorProblem:
    """F(w) = -Delta (v* + w) + (M^eps)^-1 d_c^-1 [L G(v* + w, psi)]_c on grid_z."""

    def __init__(
        self,
        system: RescaledSystem,
        ground: np.ndarray,
        elements: Optional[list[np.ndarray]] = None,
        inner_tol: float = TOL_INNER,
    ):
        self.system = system
        self.grid = system.grid
        self.inner_tol = inner_tol
        self.ground = np.asarray(ground, dtype=float)
        if self.ground.shape != self.grid.shape:
            raise GridMismatch(
                f"Ground state shape {self.ground.shape} does not match grid {self.grid.shape}"
            )
        self.elements = elements or [np.eye(self.grid.n, dtype=int)]
        self.psi: Optional[np.ndarray] = None
        self.inner_iterations = 0

    def symmetrize(self, values: np.ndarray) -> np.ndarray:
        if len(self.elements) == 1:
            return values
        return self.grid.symmetrize(values[np.newaxis], self.elements)[0]

    def solve_psi(self, w: np.ndarray) -> np.ndarray:
        psi, history = solve_vh(self.system, self.ground + w, self.psi, tol=self.inner_tol)
        self.psi = psi
        self.inner_iterations += len(history)
        return psi

    def residual(self, w: np.ndarray, psi: Optional[np.ndarray] = None) -> np.ndarray:
        system = self.system
        u = self.ground + w
        if psi is None:
            psi = self.solve_psi(w)
        reduced = system.reduced_c(u, psi)
        out = self.grid.apply_symbol(system.laplacian, u[np.newaxis])
        out = out + self.grid.apply_symbol(system.precond, reduced[np.newaxis])
        return out[0]

    def residual_parts(self, w: np.ndarray, psi: Optional[np.ndarray] = None) -> tuple[np.ndarray, np.ndarray]:
        """Split F = F_1 + F_2 into the w-independent forcing and the w-dependent part.

        F_1 = ((M^eps)^-1 - 1) Delta v* + (M^eps)^-1 [(alpha^eps - 1) v* + (beta^eps + 1) v*^p + R]
        F_2 = -Delta w + (M^eps)^-1 [alpha^eps w + beta^eps ((v* + w)^p - v*^p)]
        """
        system, grid, p = self.system, self.grid, self.system.p
        vs = self.ground
        u = vs + w
        if psi is None:
            psi = self.solve_psi(w)
        reduced = system.reduced_c(u, psi)
        apply = lambda symbol, f: grid.apply_symbol(symbol, f[np.newaxis])[0]  # noqa: E731
        R = reduced - apply(system.alpha_eps, u) - apply(system.beta_eps, u**p)
        delta_vs = apply(-system.laplacian, vs)
        forcing = (
            apply(system.alpha_eps - 1.0, vs) + apply(system.beta_eps + 1.0, vs**p) + R
        )
        F1 = apply(system.precond - 1.0, delta_vs) + apply(system.precond, forcing)
        inner = apply(system.alpha_eps, w) + apply(system.beta_eps, u**p - vs**p)
        F2 = apply(system.laplacian, w) + apply(system.precond, inner)
        return F1, F2

    def jacobian_operator(self, w: np.ndarray, psi: np.ndarray):
        """h -> DF(w) h including the psi coupling."""
        system, grid = self.system, self.grid
        J = system.G_jacobian(system.compose(self.ground + w, psi))
        J_u = J[:, 0]
        if system.k > 1:
            inverse = NeumannInverse(_h_perturbation(system, J), system.norm)

        def apply(h: np.ndarray) -> np.ndarray:
            total = J_u * h
            if system.k > 1:
                rhs = -system.eps**system.q * system.multipliers.apply_rows(slice(1, None), total)
                dpsi = inverse(rhs)
                total = total + np.einsum("ij...,j...->i...", J[:, 1:], dpsi)
            reduced = system.multipliers.apply_rows(slice(0, 1), total) / system.d_c
            out = grid.apply_symbol(system.laplacian, h[np.newaxis])
            out = out + grid.apply_symbol(system.precond, reduced)
            return out[0]

        return apply

    def gradient_check(self, direction: np.ndarray, step: float = 1e-6) -> float:
        """Relative gap between a central difference of F at 0 and DF(0) applied."""
        psi0 = self.solve_psi(np.zeros(self.grid.shape))
        exact = self.jacobian_operator(np.zeros(self.grid.shape), psi0)(direction)
        self.psi = psi0
        plus = self.residual(step * direction)
        self.psi = psi0
        minus = self.residual(-step * direction)
        self.psi = psi0
        fd = (plus - minus) / (2.0 * step)
        scale = max(float(np.max(np.abs(exact))), 1e-300)
        return float(np.max(np.abs(fd - exact))) / scale


class CorrectorResult:
    def __init__(
        self,
        w: np.ndarray,
        psi: np.ndarray,
        history: IterationHistory,
        linear_iterations: int,
        inner_iterations: int,
        max_drift: float,
    ):
        self.w = w
        self.psi = psi
        self.history = history
        self.linear_iterations = linear_iterations
        self.inner_iterations = inner_iterations
        self.max_drift = max_drift

    @property
    def iterations(self) -> int:
        return len(self.history)


def solve_corrector(
    system: RescaledSystem,
    ground: np.ndarray,
    elements: Optional[list[np.ndarray]] = None,
    w0: Optional[np.ndarray] = None,
    full_newton: bool = False,
    tol: float = TOL_OUTER,
    ball: float = OUTER_BALL,
    max_iterations: int = MAX_OUTER_ITERATIONS,
    inner_tol: float = TOL_INNER,
) -> CorrectorResult:
    """Chord iteration w <- w - DF(0)^-1 F(w), each linear solve by preconditioned GMRES."""
    problem = CorrectorProblem(system, ground, elements, inner_tol)
    grid = system.grid
    size = grid.size
    w = np.zeros(grid.shape) if w0 is None else np.array(w0, dtype=float)
    zero = np.zeros(grid.shape)
    problem.psi = None
    psi0 = problem.solve_psi(zero)
    jacobian = problem.jacobian_operator(zero, psi0)
    problem.psi = None

    smoother = 1.0 / (1.0 + system.laplacian)
    preconditioner = LinearOperator(
        (size, size),
        matvec=lambda x: grid.apply_symbol(smoother, x.reshape((1,) + grid.shape)).ravel(),
        dtype=float,
    )
    history = IterationHistory("outer")
    linear_iterations = 0
    max_drift = 0.0

    for iteration in range(max_iterations + 1):
        psi = problem.solve_psi(w)
        F = problem.residual(w, psi)
        residual = system.norm(F, system.ell - 2)
        history.record(iteration, residual, system.norm(w))
        logger.debug(f"Outer iteration {iteration}: |F| = {residual:.3e}, |w| = {system.norm(w):.3e}")
        if residual < tol:
            return CorrectorResult(
                w, psi, history, linear_iterations, problem.inner_iterations, max_drift
            )
        if iteration == max_iterations:
            break
        if full_newton and iteration > 0:
            jacobian = problem.jacobian_operator(w, psi)

        operator = LinearOperator(
            (size, size),
            matvec=lambda x: problem.symmetrize(jacobian(problem.symmetrize(x.reshape(grid.shape)))).ravel(),
            dtype=float,
        )
        rhs = -problem.symmetrize(F).ravel()
        counter = {"calls": 0}

        def count(_):
            counter["calls"] += 1

        step, info = gmres(
            operator, rhs, rtol=TOL_KRYLOV, atol=0.0, restart=KRYLOV_RESTART,
            maxiter=KRYLOV_MAX_RESTARTS, M=preconditioner, callback=count, callback_type="pr_norm",
        )
        linear_iterations += counter["calls"]
        if info != 0:
            achieved = np.linalg.norm(operator.matvec(step) - rhs) / max(np.linalg.norm(rhs), 1e-300)
            if info < 0 or achieved > KRYLOV_ACCEPTABLE:
                raise KrylovStagnation(
                    f"GMRES stagnated at relative residual {achieved:.3e}",
                    {"iteration": iteration, "residuals": history.residuals},
                )
            logger.debug(f"GMRES stopped early at relative residual {achieved:.3e}")
        step = step.reshape(grid.shape)
        projected = problem.symmetrize(step)
        drift = float(np.max(np.abs(projected - step)))
        max_drift = max(max_drift, drift)
        if drift > TOL_SYMMETRY_DRIFT:
            raise SymmetryDrift(
                f"Symmetrization changed the Newton step by {drift:.3e}", {"iteration": iteration}
            )
        w = w + projected
        if system.norm(w) > ball:
            raise TrustRegionExceeded(
                f"Corrector norm {system.norm(w):.3e} exceeds the trust radius {ball}",
                {"iteration": iteration, "residuals": history.residuals},
            )
    raise MaxIterations(
        f"Corrector did not converge in {max_iterations} iterations",
        {"residuals": history.residuals},
    )


class SpikeSolution:
    """Converged spike with rescaled fields, the physical profile and diagnostics."""

    def __init__(
        self,
        mu: float,
        eps: float,
        grid_z: UniformGrid,
        v_c: np.ndarray,
        w: np.ndarray,
        v_h: np.ndarray,
        U: Field,
        u_perp: np.ndarray,
        transform: Optional[np.ndarray],
        diagnostics: dict[str, Any],
    ):
        self.mu = mu
        self.eps = eps
        self.grid_z = grid_z
        self.v_c = v_c
        self.w = w
        self.v_h = v_h
        self.U = U
        self.u_perp = u_perp
        self.transform = transform
        self.diagnostics = diagnostics

    @property
    def grid(self) -> UniformGrid:
        return self.U.grid

    @property
    def amplitude(self) -> float:
        return self.U.max_norm()

    @property
    def center_value(self) -> np.ndarray:
        center = (slice(None),) + (self.grid.N // 2,) * self.grid.n
        return self.U.values[center]

    @property
    def residual_original(self) -> float:
        return self.diagnostics["residual_original"]

    def to_dict(self) -> dict[str, Any]:
        return {
            "mu": self.mu,
            "eps": self.eps,
            "amplitude": self.amplitude,
            "center_value": self.center_value.tolist(),
            "physical_grid": {"n": self.grid.n, "L": list(self.grid.L), "N": self.grid.N},
            "transform": None if self.transform is None else self.transform.tolist(),
            **self.diagnostics,
        }

    def write_profiles(self, directory: str | Path, tag: str = "") -> list[Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        written = [self.U.to_csv(directory / f"profile{tag}.csv")]
        rescaled = Field(self.grid_z, np.concatenate([self.v_c[np.newaxis], self.v_h], axis=0))
        written.append(rescaled.to_csv(directory / f"rescaled{tag}.csv"))
        return written


def original_residual(
    K: KernelSpec, N: Nonlinearity, grid: UniformGrid, U: np.ndarray, mu: float
) -> float:
    """max |U + K * U - N(U; mu)| on a periodic grid."""
    return float(np.max(np.abs(U + K.convolve(grid, U) - N.evaluate(U, mu))))


def assemble(
    system: RescaledSystem,
    u: np.ndarray,
    v: np.ndarray,
    K_original: KernelSpec,
    K_normalized: KernelSpec,
    w: Optional[np.ndarray] = None,
    elements: Optional[list[np.ndarray]] = None,
    iterations: Optional[dict[str, int]] = None,
) -> SpikeSolution:
    """Undo the rescaling and the normalization and evaluate the end-to-end residual."""
    bif = system.bif
    grid_z = system.grid
    eps = system.eps
    values = system.physical(system.compose(u, v))
    T0 = bif.T0
    diagonal = np.allclose(T0, np.diag(np.diag(T0)), atol=1e-14)

    if diagonal:
        grid_x = grid_z.scaled(np.diag(T0) / eps)
        U = Field(grid_x, values)
        residual = original_residual(K_original, system.nonlinearity, grid_x, U.values, system.mu)
        transform = None
    else:
        grid_x = grid_z.scaled(1.0 / eps)
        U = Field(grid_x, values)
        residual = original_residual(K_normalized, system.nonlinearity, grid_x, U.values, system.mu)
        transform = T0

    e = bif.e
    coefficient = np.einsum("i,i...->...", e, U.values) / float(e @ e)
    u_perp = U.values - coefficient[np.newaxis] * e.reshape((-1,) + (1,) * grid_x.n)

    symmetry_error = 0.0
    symmetry_skipped = 0
    for g in elements or []:
        try:
            symmetry_error = max(
                symmetry_error, float(np.max(np.abs(grid_z.act(g, values) - values)))
            )
        except GridError as err:
            symmetry_skipped += 1
            logger.warning(f"Symmetry check skipped for {np.asarray(g).tolist()}: {err.message}")

    amplitude = float(np.max(np.abs(values)))
    diagnostics: dict[str, Any] = {
        "residual_original": residual,
        "relative_residual": residual / max(1.0, amplitude),
        "norm_w": system.norm(w) if w is not None else None,
        "norm_v_h": system.norm(v),
        "norm_u_perp": grid_x.norm(u_perp, system.ell),
        "symmetry_error": symmetry_error,
        "symmetry_skipped": symmetry_skipped,
        "leading_amplitude": float(eps**system.q * system.d_c),
        "scheme": system.describe(),
        "multipliers": system.multipliers.deviations(),
        "iterations": iterations or {},
    }
    logger.info(
        f"Spike at mu = {system.mu}: max |U| = {amplitude:.6e}, residual {residual:.3e}"
    )
    return SpikeSolution(system.mu, eps, grid_z, u, w if w is not None else u * 0.0, v, U, u_perp, transform, diagnostics)
