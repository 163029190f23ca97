"""Verification of the kernel and nonlinearity hypotheses.

The kernel side needs a simple null vector of I + K_hat(0), a definite
projected Hessian of the symbol at 0 and an invertible symbol away from 0.
The nonlinearity side needs N(0; mu) = 0, no linear part at mu = 0, and
nonzero unfolding and quadratic (or cubic) coefficients.
"""

from __future__ import annotations

import logging
from typing import Any, Callable, Optional

import numpy as np
from scipy import optimize

from . import differentiation
from .check_result import ClauseResult
from .constants import (
    FD_STEP,
    FD_STEP_SYMBOL,
    SCAN_EXCLUDED_BALL,
    SCAN_MIN_CUTOFF,
    SCAN_SAMPLES,
    TOL_CRITICALITY,
    TOL_DEGENERATE,
    TOL_DET,
    TOL_HESSIAN,
    TOL_NULL,
    TOL_PAIRING,
)
from .errors import (
    BranchDivergence,
    CriticalityViolation,
    DegeneratePairing,
    DegenerateQuadratic,
    DegenerateUnfolding,
    ExcessNullspace,
    HypothesisError,
    IndefiniteHessian,
    InvertibilityViolation,
    NoNullspace,
    SymmetryViolation,
)
from .kernel import KernelSpec, check_symmetry
from .nonlinearity import Nonlinearity
from .symmetry import SymmetryGroup

logger = logging.getLogger(__name__)

TOL_DRIFT = 1e-8
TOL_NORMALIZATION = 1e-8
TOL_TRIVIAL_STATE = 1e-10
BRANCH_TOLERANCE = 1e-13
BRANCH_MAX_ITERATIONS = 50
QUADRATIC_FIT_RADIUS = 1e-2


class BifurcationData:
    """Everything the rescaled scheme needs from the hypothesis checks."""

    def __init__(
        self,
        e: np.ndarray,
        e_star: np.ndarray,
        S_eff: np.ndarray,
        T0: np.ndarray,
        alpha: float,
        beta: float,
        sign_flip: bool,
        gamma: Optional[float] = None,
        order: int = 2,
        margins: Optional[dict[str, float]] = None,
    ):
        self.e = np.asarray(e, dtype=float)
        self.e_star = np.asarray(e_star, dtype=float)
        self.S_eff = np.asarray(S_eff, dtype=float)
        self.T0 = np.asarray(T0, dtype=float)
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.gamma = None if gamma is None else float(gamma)
        self.sign_flip = bool(sign_flip)
        self.order = order
        self.margins = margins or {}

    @property
    def k(self) -> int:
        return self.e.size

    @property
    def sigma(self) -> float:
        return -1.0 if self.sign_flip else 1.0

    @property
    def alpha_scheme(self) -> float:
        return -self.sigma * self.alpha

    @property
    def beta_scheme(self) -> float:
        return -self.sigma * self.beta

    @property
    def gamma_scheme(self) -> Optional[float]:
        return None if self.gamma is None else -self.sigma * self.gamma

    @property
    def amplitude_exponent(self) -> int:
        """Power q of eps in the critical amplitude: 2 quadratic, 1 cubic."""
        return 2 if self.order == 2 else 1

    def epsilon(self, mu: float) -> float:
        product = self.alpha_scheme * mu
        if product <= 0:
            return float("nan")
        return float(np.sqrt(product))

    def to_dict(self) -> dict[str, Any]:
        return {
            "e": self.e.tolist(),
            "e_star": self.e_star.tolist(),
            "S_eff": self.S_eff.tolist(),
            "T0": self.T0.tolist(),
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "order": self.order,
            "sign_flip": self.sign_flip,
            "scheme": {
                "alpha": self.alpha_scheme,
                "beta": self.beta_scheme,
                "gamma": self.gamma_scheme,
            },
            "margins": self.margins,
        }


def null_vectors(K: KernelSpec, tol: float = TOL_NULL) -> tuple[np.ndarray, np.ndarray]:
    """Right and left null vectors of I + K_hat(0) with <e, e*> = 1."""
    matrix = np.eye(K.k) + K.eval_symbol(np.zeros(K.n)).real
    U, s, Vt = np.linalg.svd(matrix)
    if s[-1] >= tol:
        raise NoNullspace(
            f"I + K_hat(0) is invertible, smallest singular value {s[-1]:.3e}",
            {"singular_values": s.tolist()},
        )
    if K.k > 1 and s[-2] < tol:
        raise ExcessNullspace(
            f"I + K_hat(0) has more than one singular value below {tol:.1e}",
            {"singular_values": s.tolist()},
        )
    e = Vt[-1].copy()
    e_star = U[:, -1].copy()
    if e[np.argmax(np.abs(e))] < 0:
        e = -e
    if e_star[np.argmax(np.abs(e_star))] < 0:
        e_star = -e_star
    pairing = float(e @ e_star)
    if abs(pairing) < TOL_PAIRING:
        raise DegeneratePairing(
            f"<e, e*> = {pairing:.3e}: the null vector is not algebraically simple",
            {"e": e.tolist(), "e_star": e_star.tolist()},
        )
    return e, e_star / pairing


def _scan_directions(n: int, symmetric: bool) -> np.ndarray:
    if n == 1:
        return np.array([[1.0]]) if symmetric else np.array([[1.0], [-1.0]])
    if n == 2:
        count = 16 if symmetric else 32
        span = np.pi if symmetric else 2.0 * np.pi
        theta = span * np.arange(count) / count
        return np.stack([np.cos(theta), np.sin(theta)], axis=1)
    # 26 lattice directions of the unit cube
    dirs = [
        np.array(d, dtype=float)
        for d in np.ndindex(3, 3, 3)
        if d != (1, 1, 1)
    ]
    dirs = np.array(dirs) - 1.0
    return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)


def fourier_determinant(K: KernelSpec, xi: np.ndarray) -> np.ndarray:
    """D(xi) = det(I + K_hat(xi)) for xi of shape (..., n)."""
    return np.linalg.det(np.eye(K.k) + K.eval_symbol(xi))


class ScanReport:
    """Outcome of the Fourier determinant scan."""

    def __init__(
        self,
        min_abs: float,
        argmin: np.ndarray,
        xi_max: float,
        excluded: float,
        directions: np.ndarray,
        quadratic: np.ndarray,
        roots: list[np.ndarray],
    ):
        self.min_abs = min_abs
        self.argmin = argmin
        self.xi_max = xi_max
        self.excluded = excluded
        self.directions = directions
        self.quadratic = quadratic
        self.roots = roots

    @property
    def quadratic_coefficient(self) -> float:
        return float(np.mean(self.quadratic))

    def to_dict(self) -> dict[str, Any]:
        return {
            "min_abs_determinant": self.min_abs,
            "argmin": self.argmin.tolist(),
            "xi_max": self.xi_max,
            "excluded_ball": self.excluded,
            "quadratic_coefficient": self.quadratic_coefficient,
            "quadratic_per_direction": self.quadratic.tolist(),
            "roots": [r.tolist() for r in self.roots],
        }


def _quadratic_coefficient(K: KernelSpec, direction: np.ndarray) -> float:
    radii = [QUADRATIC_FIT_RADIUS / 2.0**m for m in range(3)]
    values = [fourier_determinant(K, r * direction).real / r**2 for r in radii]
    best, _ = differentiation.richardson(values)
    return float(best)


def fourier_determinant_scan(
    K: KernelSpec,
    xi_max: Optional[float] = None,
    samples: int = SCAN_SAMPLES,
    excluded: float = SCAN_EXCLUDED_BALL,
    tol: float = TOL_DET,
) -> ScanReport:
    """Minimum of |D| on rays outside a small ball, plus the quadratic fit at 0."""
    if xi_max is None:
        xi_max = max(SCAN_MIN_CUTOFF, 4.0 / K.width_scale)
    xi_max = min(xi_max, K.cutoff)
    if xi_max <= excluded:
        raise InvertibilityViolation(
            f"Scan range [{excluded}, {xi_max}] is empty; the gridded kernel is too coarse"
        )
    symmetric = K.symmetry is None or K.symmetry.contains_inversion()
    directions = _scan_directions(K.n, symmetric)
    radii = np.linspace(excluded, xi_max, samples)
    points = radii[np.newaxis, :, np.newaxis] * directions[:, np.newaxis, :]
    D = fourier_determinant(K, points)

    index = np.unravel_index(np.argmin(np.abs(D)), D.shape)
    min_abs = float(np.abs(D[index]))
    argmin = points[index]

    roots = []
    for d, direction in enumerate(directions):
        real = D[d].real
        crossings = np.flatnonzero(np.sign(real[:-1]) * np.sign(real[1:]) < 0)
        for j in crossings:
            r = optimize.brentq(
                lambda s: fourier_determinant(K, s * direction).real, radii[j], radii[j + 1]
            )
            value = abs(fourier_determinant(K, r * direction))
            if value < max(tol, 1e-6):
                roots.append(r * direction)
                if value < min_abs:
                    min_abs, argmin = float(value), r * direction

    quadratic = np.array([_quadratic_coefficient(K, d) for d in directions])
    report = ScanReport(min_abs, argmin, float(xi_max), excluded, directions, quadratic, roots)
    logger.debug(f"Determinant scan: min |D| = {min_abs:.3e} at {argmin}")
    if min_abs < tol or roots:
        raise InvertibilityViolation(
            f"det(I + K_hat(xi)) vanishes near xi = {np.round(argmin, 6).tolist()}",
            report.to_dict(),
        )
    return report


def _projected_symbol(K: KernelSpec, e: np.ndarray, e_star: np.ndarray) -> Callable:
    def f(xi: np.ndarray) -> float:
        T = np.eye(K.k) + K.eval_symbol(xi)
        return float((e_star @ T @ e).real)

    return f


def raw_hessian(K: KernelSpec, e: np.ndarray, e_star: np.ndarray) -> tuple[np.ndarray, float]:
    """Hessian of <e*, (I + K_hat(xi)) e> at xi = 0 and its error margin."""
    if K.closed_form:
        M2 = K.second_moments()
        S = -np.einsum("a,abij,b->ij", e_star, M2, e)
        margin = 0.0
    else:
        S, margin = differentiation.richardson_hessian(
            _projected_symbol(K, e, e_star), K.n, FD_STEP_SYMBOL, levels=2
        )
    return 0.5 * (S + S.T), margin


def effective_hessian(
    K: KernelSpec, e: np.ndarray, e_star: np.ndarray, tol: float = TOL_HESSIAN
) -> tuple[np.ndarray, bool]:
    """Definite effective Hessian and whether the system must be negated."""
    S, _ = raw_hessian(K, e, e_star)
    eigenvalues = np.linalg.eigvalsh(S)
    if np.all(eigenvalues > tol):
        return S, False
    if np.all(eigenvalues < -tol):
        logger.info("Effective Hessian is negative definite; working with the negated system")
        return -S, True
    raise IndefiniteHessian(
        f"Effective Hessian has eigenvalues {eigenvalues.tolist()}",
        {"S": S.tolist(), "eigenvalues": eigenvalues.tolist()},
    )


def _projected_map(N: Nonlinearity, e: np.ndarray, e_star: np.ndarray) -> Callable:
    def g(s: float, mu: float) -> float:
        U = (s * e)[:, np.newaxis]
        return float(e_star @ N.evaluate(U, mu)[:, 0])

    return g


def check_trivial_state(N: Nonlinearity, mu_range: float = 0.1, samples: int = 9) -> float:
    zero = np.zeros((N.k, 1))
    worst = max(
        float(np.max(np.abs(N.evaluate(zero, mu)))) for mu in np.linspace(-mu_range, mu_range, samples)
    )
    if worst > TOL_TRIVIAL_STATE:
        raise CriticalityViolation(
            f"N(0; mu) does not vanish, max |N(0; mu)| = {worst:.3e}", {"max_abs": worst}
        )
    return worst


def check_criticality(N: Nonlinearity, tol: float = TOL_CRITICALITY) -> float:
    J = N.jacobian(np.zeros((N.k, 1)), 0.0)[..., 0]
    size = float(np.max(np.abs(J)))
    if size > tol:
        raise CriticalityViolation(
            f"D_U N(0; 0) does not vanish, max entry {size:.3e}", {"jacobian": J.tolist()}
        )
    return size


class TCCoefficients:
    """Unfolding, quadratic and cubic coefficients with their error margins."""

    def __init__(self, alpha: float, beta: float, gamma: Optional[float], margins: dict[str, float]):
        self.alpha = alpha
        self.beta = beta
        self.gamma = gamma
        self.margins = margins

    def __iter__(self):
        yield self.alpha
        yield self.beta


def unfolding_coefficient(N: Nonlinearity, e: np.ndarray, e_star: np.ndarray) -> tuple[float, float]:
    g = _projected_map(N, e, e_star)
    fd, margin = differentiation.richardson(
        [differentiation.mixed_second(g, FD_STEP / 2.0**m) for m in range(2)]
    )
    fd = float(fd)
    if N.mixed is None:
        return fd, margin
    zero = np.zeros((N.k, 1))
    analytic = float(e_star @ N.mixed(zero, 0.0)[..., 0] @ e)
    return analytic, abs(analytic - fd)


def quadratic_coefficient(N: Nonlinearity, e: np.ndarray, e_star: np.ndarray) -> tuple[float, float]:
    g = _projected_map(N, e, e_star)
    fd, margin = differentiation.richardson(
        [0.5 * differentiation.second(lambda s: g(s, 0.0), FD_STEP / 2.0**m) for m in range(2)]
    )
    fd = float(fd)
    if N.second is None:
        return fd, margin
    zero = np.zeros((N.k, 1))
    tensor = N.second(zero, 0.0)[..., 0]
    analytic = 0.5 * float(np.einsum("i,iab,a,b->", e_star, tensor, e, e))
    return analytic, abs(analytic - fd)


def cubic_coefficient(N: Nonlinearity, e: np.ndarray, e_star: np.ndarray) -> tuple[float, float]:
    g = _projected_map(N, e, e_star)
    fd, margin = differentiation.richardson(
        [differentiation.third(lambda s: g(s, 0.0), FD_STEP_SYMBOL / 2.0**m) for m in range(3)]
    )
    fd = float(fd) / 6.0
    third = getattr(N, "third", None)
    if third is None:
        return fd, margin
    tensor = third(np.zeros((N.k, 1)), 0.0)[..., 0]
    analytic = float(np.einsum("i,iabc,a,b,c->", e_star, tensor, e, e, e)) / 6.0
    return analytic, abs(analytic - fd)


def tc_coefficients(
    N: Nonlinearity,
    e: np.ndarray,
    e_star: np.ndarray,
    order: int = 2,
    tol: float = TOL_DEGENERATE,
    mu_range: float = 0.1,
) -> TCCoefficients:
    """alpha = <D_mu D_U N e, e*>, beta = 1/2 <D_UU N [e, e], e*> (gamma for order 3)."""
    check_trivial_state(N, mu_range)
    check_criticality(N)
    alpha, alpha_margin = unfolding_coefficient(N, e, e_star)
    if abs(alpha) < tol:
        raise DegenerateUnfolding(f"Unfolding coefficient alpha = {alpha:.3e} vanishes")
    beta, beta_margin = quadratic_coefficient(N, e, e_star)
    margins = {"alpha": alpha_margin, "beta": beta_margin}
    gamma = None
    if order == 2:
        if abs(beta) < tol:
            raise DegenerateQuadratic(f"Quadratic coefficient beta = {beta:.3e} vanishes")
    else:
        if abs(beta) >= tol:
            raise DegenerateQuadratic(
                f"Cubic scaling needs beta = 0, got {beta:.3e}", {"beta": beta}
            )
        gamma, gamma_margin = cubic_coefficient(N, e, e_star)
        margins["gamma"] = gamma_margin
        if abs(gamma) < tol:
            raise DegenerateQuadratic(f"Cubic coefficient gamma = {gamma:.3e} vanishes")
    logger.debug(f"Coefficients alpha = {alpha}, beta = {beta}, gamma = {gamma}")
    return TCCoefficients(alpha, beta, gamma, margins)


class ConstantBranch:
    """Constant solutions U(mu_t) of U + (int K) U = N(U; mu_sign * mu_t^2).

    Parameterized by mu_t so that a branch through a fold is smooth. Given
    either in closed form or root-found by damped Newton from guess(mu_t).
    """

    def __init__(
        self,
        N: Nonlinearity,
        mass: np.ndarray,
        closed_form: Optional[Callable[[float], np.ndarray]] = None,
        guess: Optional[Callable[[float], np.ndarray]] = None,
        mu_sign: float = 1.0,
    ):
        self.N = N
        self.mass = np.asarray(mass, dtype=float).reshape(N.k, N.k)
        self.closed_form = closed_form
        self.guess = guess or (lambda mu_t: np.zeros(N.k))
        self.mu_sign = 1.0 if mu_sign >= 0 else -1.0
        self._cache: dict[float, np.ndarray] = {}

    def parameter(self, mu_t: float) -> float:
        return self.mu_sign * mu_t * mu_t

    def residual(self, U: np.ndarray, mu: float) -> np.ndarray:
        return U + self.mass @ U - self.N.evaluate(U[:, np.newaxis], mu)[:, 0]

    def __call__(self, mu_t: float) -> np.ndarray:
        if self.closed_form is not None:
            return np.asarray(self.closed_form(mu_t), dtype=float).reshape(self.N.k)
        key = float(mu_t)
        if key not in self._cache:
            self._cache[key] = self._solve(key)
        return self._cache[key]

    def _solve(self, mu_t: float) -> np.ndarray:
        mu = self.parameter(mu_t)
        U = np.asarray(self.guess(mu_t), dtype=float).reshape(self.N.k).copy()
        F = self.residual(U, mu)
        eye = np.eye(self.N.k)
        for iteration in range(BRANCH_MAX_ITERATIONS):
            size = float(np.max(np.abs(F)))
            if size < BRANCH_TOLERANCE:
                return U
            J = eye + self.mass - self.N.jacobian(U[:, np.newaxis], mu)[..., 0]
            try:
                step = np.linalg.solve(J, -F)
            except np.linalg.LinAlgError:
                break
            damping = 1.0
            while damping > 1e-6:
                trial = U + damping * step
                F_trial = self.residual(trial, mu)
                if np.max(np.abs(F_trial)) < size:
                    break
                damping /= 2.0
            else:
                break
            U, F = trial, F_trial
            logger.debug(f"Branch Newton mu={mu}: iteration {iteration}, residual {size:.3e}")
        raise BranchDivergence(
            f"Constant branch root-finding failed at mu = {mu}",
            {"mu": mu, "last_iterate": U.tolist(), "residual": float(np.max(np.abs(F)))},
        )


def saddle_node_to_transcritical(N: Nonlinearity, branch: ConstantBranch) -> Nonlinearity:
    """N(V + U_b; mu) - N(U_b; mu) with mu = mu_sign * mu_t^2 and U_b = branch(mu_t)."""

    def offset(V: np.ndarray, mu_t: float) -> tuple[np.ndarray, float]:
        base = branch(mu_t).reshape((-1,) + (1,) * (V.ndim - 1))
        return base, branch.parameter(mu_t)

    def evaluate(V: np.ndarray, mu_t: float) -> np.ndarray:
        base, mu = offset(V, mu_t)
        return N.evaluate(V + base, mu) - N.evaluate(base, mu)

    def jacobian(V: np.ndarray, mu_t: float) -> np.ndarray:
        base, mu = offset(V, mu_t)
        return N.jacobian(V + base, mu)

    return Nonlinearity(
        N.k, evaluate, jacobian, smoothness=N.smoothness, name=f"{N.name}-shifted"
    )


def transcritical_from_fold(
    N: Nonlinearity,
    mass: np.ndarray,
    state: np.ndarray,
    mu_fold: float,
    tangent: np.ndarray,
    mu_sign: float = 1.0,
) -> Nonlinearity:
    """Unfold a fold (U_f, mu_f) of the constant states into transcritical form.

    The returned nonlinearity takes mu_t with mu = mu_f + mu_sign * mu_t^2 and
    follows the branch leaving U_f along tangent.
    """
    state = np.asarray(state, dtype=float)
    tangent = np.asarray(tangent, dtype=float)
    shifted = N.with_parameter_map(mu_map=lambda m: mu_fold + m, name=f"{N.name}@fold")
    branch = ConstantBranch(
        shifted, mass, guess=lambda mu_t: state + mu_t * tangent, mu_sign=mu_sign
    )
    return saddle_node_to_transcritical(shifted, branch)


class HypothesisChecker:
    """Runs every hypothesis clause and collects the outcomes."""

    def __init__(
        self,
        kernel: KernelSpec,
        nonlinearity: Nonlinearity,
        symmetry: Optional[SymmetryGroup] = None,
        order: int = 2,
        tolerances: Optional[dict[str, float]] = None,
        mu_range: float = 0.1,
    ):
        tolerances = tolerances or {}
        self.kernel = kernel
        self.nonlinearity = nonlinearity
        self.symmetry = symmetry or kernel.symmetry
        self.order = order
        self.mu_range = mu_range
        self.tol_null = tolerances.get("null", TOL_NULL)
        self.tol_det = tolerances.get("det", TOL_DET)
        self.tol_degenerate = tolerances.get("degenerate", TOL_DEGENERATE)
        self.results: list[ClauseResult] = []
        self.failures: list[HypothesisError] = []
        self.scan: Optional[ScanReport] = None
        self.data: Optional[BifurcationData] = None

    def _create_result(
        self,
        clause: str,
        passed: bool,
        message: str,
        margin: Optional[float] = None,
        error: Optional[HypothesisError] = None,
        details: Optional[dict[str, Any]] = None,
    ) -> ClauseResult:
        result = ClauseResult(
            clause,
            passed,
            message,
            margin=margin,
            code=None if error is None else error.code,
            details=details if error is None else {**error.details, **(details or {})},
        )
        self.results.append(result)
        if error is not None:
            self.failures.append(error)
            logger.warning(str(result))
        else:
            logger.debug(str(result))
        return result

    def _guarded(self, clause: str, check: Callable[[], Any]) -> Any:
        try:
            return check()
        except HypothesisError as err:
            self._create_result(clause, False, err.message, error=err)
            return None

    def run_clause(
        self, clause: str, check: Callable[[], Any], message: Callable[[Any], str],
        margin: Optional[Callable[[Any], float]] = None,
    ) -> Any:
        """Run a clause defined outside the checker and record its outcome."""
        value = self._guarded(clause, check)
        if value is not None:
            self._create_result(
                clause, True, message(value), margin=None if margin is None else margin(value),
                details=value.to_dict() if hasattr(value, "to_dict") else None,
            )
        return value

    @property
    def passed(self) -> bool:
        return not self.failures

    @property
    def first_failure(self) -> Optional[HypothesisError]:
        return self.failures[0] if self.failures else None

    def raise_if_failed(self) -> None:
        if self.failures:
            raise self.failures[0]

    def run(self) -> Optional[BifurcationData]:
        """Check all clauses; returns the bifurcation data when every clause passes."""
        self.results = []
        self.failures = []
        K = self.kernel

        self._guarded("symmetry", self._check_symmetry)
        self._guarded("vanishing_drift", self._check_drift)
        nulls = self._guarded("minimal_nullspace", self._check_nullspace)
        hessian = None
        if nulls is not None:
            e, e_star = nulls
            hessian = self._guarded("projected_second_moments", lambda: self._check_hessian(e, e_star))
            self._guarded("fourier_determinant", lambda: self._check_scan(hessian))
        T0 = None
        if hessian is not None:
            T0 = self._guarded("normalization", lambda: self._check_normalization(e, e_star, hessian[0]))

        N = self.nonlinearity
        self._guarded("trivial_state", lambda: self._check_trivial_state(N))
        self._guarded("criticality", lambda: self._check_criticality(N))
        coefficients = None
        if nulls is not None:
            coefficients = self._guarded("unfolding", lambda: self._check_coefficients(N, e, e_star))

        if not self.passed or T0 is None or coefficients is None:
            logger.info(f"Hypothesis checks failed: {[r.clause for r in self.results if not r.passed]}")
            return None
        S, sign_flip = hessian
        self.data = BifurcationData(
            e,
            e_star,
            S,
            T0,
            coefficients.alpha,
            coefficients.beta,
            sign_flip,
            gamma=coefficients.gamma,
            order=self.order,
            margins={r.clause: r.margin for r in self.results if r.margin is not None},
        )
        logger.info(
            f"Hypotheses hold: alpha={self.data.alpha:.6g}, beta={self.data.beta:.6g}, "
            f"sign_flip={sign_flip}"
        )
        return self.data

    def _check_symmetry(self) -> None:
        if self.symmetry is None:
            self._create_result("symmetry", True, "No symmetry group configured", details={"order": 1})
            return
        report = check_symmetry(self.kernel, self.symmetry)
        if not report.passed:
            raise SymmetryViolation("; ".join(report.flags), report.to_dict())
        self._create_result(
            "symmetry", True, f"Kernel invariant under a group of order {self.symmetry.order}",
            margin=report.tolerance - report.deviation, details=report.to_dict(),
        )

    def _check_drift(self) -> None:
        K = self.kernel
        drift = np.array([K.moment(tuple(int(i == d) for i in range(K.n))) for d in range(K.n)])
        size = float(np.max(np.abs(drift)))
        if size > TOL_DRIFT:
            raise SymmetryViolation(
                f"Kernel first moments do not vanish (max {size:.3e})",
                {"first_moments": drift.tolist()},
            )
        self._create_result("vanishing_drift", True, "First moments vanish", margin=TOL_DRIFT - size)

    def _check_nullspace(self) -> tuple[np.ndarray, np.ndarray]:
        e, e_star = null_vectors(self.kernel, self.tol_null)
        T = np.eye(self.kernel.k) + self.kernel.eval_symbol(np.zeros(self.kernel.n)).real
        residual = max(float(np.max(np.abs(T @ e))), float(np.max(np.abs(T.T @ e_star))))
        self._create_result(
            "minimal_nullspace", True, f"Simple null vector e = {np.round(e, 8).tolist()}",
            margin=self.tol_null - residual,
            details={"e": e.tolist(), "e_star": e_star.tolist(), "residual": residual},
        )
        return e, e_star

    def _check_hessian(self, e: np.ndarray, e_star: np.ndarray) -> tuple[np.ndarray, bool]:
        S, sign_flip = effective_hessian(self.kernel, e, e_star)
        commutator = 0.0
        if self.symmetry is not None:
            commutator = max(float(np.max(np.abs(g.T @ S @ g - S))) for g in self.symmetry.elements)
        eigenvalues = np.linalg.eigvalsh(S)
        self._create_result(
            "projected_second_moments", True,
            f"Effective Hessian definite, eigenvalues {np.round(eigenvalues, 8).tolist()}",
            margin=float(eigenvalues[0]),
            details={"S_eff": S.tolist(), "sign_flip": sign_flip, "group_commutator": commutator},
        )
        return S, sign_flip

    def _check_scan(self, hessian: Optional[tuple[np.ndarray, bool]]) -> ScanReport:
        self.scan = fourier_determinant_scan(self.kernel, tol=self.tol_det)
        details = self.scan.to_dict()
        if hessian is not None:
            S, sign_flip = hessian
            S_raw = -S if sign_flip else S
            expected = np.array([0.5 * d @ S_raw @ d for d in self.scan.directions])
            ratio = self.scan.quadratic / expected
            details["quadratic_expected"] = expected.tolist()
            details["quadratic_ratio_spread"] = float(np.ptp(ratio))
        self._create_result(
            "fourier_determinant", True,
            f"|det(I + K_hat)| >= {self.scan.min_abs:.3e} for |xi| in [{self.scan.excluded}, {self.scan.xi_max:.1f}]",
            margin=self.scan.min_abs - self.tol_det, details=details,
        )
        return self.scan

    def _check_normalization(self, e: np.ndarray, e_star: np.ndarray, S: np.ndarray) -> np.ndarray:
        from .normalform import compute_T0

        T0 = compute_T0(S)
        normalized = self.kernel.transformed(T0)
        S_normalized, sign_flip = effective_hessian(normalized, e, e_star)
        deviation = float(np.max(np.abs(S_normalized - 2.0 * np.eye(self.kernel.n))))
        if deviation > TOL_NORMALIZATION:
            raise IndefiniteHessian(
                f"Normalized kernel has effective Hessian off 2I by {deviation:.3e}",
                {"S_normalized": S_normalized.tolist(), "T0": T0.tolist()},
            )
        self._create_result(
            "normalization", True, "Normalized effective Hessian equals 2I",
            margin=TOL_NORMALIZATION - deviation, details={"T0": T0.tolist()},
        )
        return T0

    def _check_trivial_state(self, N: Nonlinearity) -> None:
        worst = check_trivial_state(N, self.mu_range)
        self._create_result(
            "trivial_state", True, "N(0; mu) = 0 on the sampled range",
            margin=TOL_TRIVIAL_STATE - worst,
        )

    def _check_criticality(self, N: Nonlinearity) -> None:
        size = check_criticality(N)
        self._create_result(
            "criticality", True, "D_U N(0; 0) vanishes", margin=TOL_CRITICALITY - size
        )

    def _check_coefficients(self, N: Nonlinearity, e: np.ndarray, e_star: np.ndarray) -> Optional[TCCoefficients]:
        alpha, alpha_margin = unfolding_coefficient(N, e, e_star)
        if abs(alpha) < self.tol_degenerate:
            raise DegenerateUnfolding(f"Unfolding coefficient alpha = {alpha:.3e} vanishes")
        self._create_result(
            "unfolding", True, f"alpha = {alpha:.8g}", margin=abs(alpha) - self.tol_degenerate,
            details={"alpha": alpha, "fd_agreement": alpha_margin},
        )
        beta, beta_margin = quadratic_coefficient(N, e, e_star)
        margins = {"alpha": alpha_margin, "beta": beta_margin}
        if self.order == 2:
            if abs(beta) < self.tol_degenerate:
                err = DegenerateQuadratic(f"Quadratic coefficient beta = {beta:.3e} vanishes")
                self._create_result("quadratic_coefficient", False, err.message, error=err)
                return None
            self._create_result(
                "quadratic_coefficient", True, f"beta = {beta:.8g}",
                margin=abs(beta) - self.tol_degenerate,
                details={"beta": beta, "fd_agreement": beta_margin},
            )
            return TCCoefficients(alpha, beta, None, margins)

        gamma, gamma_margin = cubic_coefficient(N, e, e_star)
        margins["gamma"] = gamma_margin
        if abs(beta) >= self.tol_degenerate or abs(gamma) < self.tol_degenerate:
            err = DegenerateQuadratic(
                f"Cubic scaling needs beta = 0 and gamma != 0, got beta = {beta:.3e}, gamma = {gamma:.3e}"
            )
            self._create_result("cubic_coefficient", False, err.message, error=err)
            return None
        self._create_result(
            "cubic_coefficient", True, f"gamma = {gamma:.8g}",
            margin=abs(gamma) - self.tol_degenerate,
            details={"beta": beta, "gamma": gamma, "fd_agreement": gamma_margin},
        )
        return TCCoefficients(alpha, beta, gamma, margins)

    def report(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "passed": self.passed,
            "clauses": [r.to_dict() for r in self.results],
        }
        if self.data is not None:
            out.update(self.data.to_dict())
        if self.failures:
            out["error"] = self.failures[0].to_dict()
        return out
