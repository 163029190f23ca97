"""Ready-made kernel and nonlinearity pairs."""

from __future__ import annotations

import logging
from typing import Any, Callable, Optional

import numpy as np
from scipy import optimize

from .components.errors import ConfigError
from .components.hypotheses import transcritical_from_fold
from .components.kernel import FAMILIES
from .components.nonlinearity import Nonlinearity, PolynomialNonlinearity

logger = logging.getLogger(__name__)

KernelDescriptors = list[list[Optional[dict[str, Any]]]]


class Preset:
    """Kernel descriptors, a nonlinearity and provenance notes."""

    def __init__(
        self,
        name: str,
        kernel: KernelDescriptors,
        nonlinearity: Nonlinearity,
        order: int = 2,
        mu: float = 0.01,
        notes: Optional[dict[str, Any]] = None,
    ):
        self.name = name
        self.kernel = kernel
        self.nonlinearity = nonlinearity
        self.order = order
        self.mu = mu
        self.notes = notes or {}

    @property
    def k(self) -> int:
        return self.nonlinearity.k

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "kernel": self.kernel,
            "nonlinearity": self.nonlinearity.describe(),
            "order": self.order,
            "mu": self.mu,
            "notes": self.notes,
        }


def _entry(params: dict[str, Any], amplitude: float, family: str = "exponential") -> dict[str, Any]:
    family = params.get("family", family)
    if family not in FAMILIES or family == "grid":
        raise ConfigError(f"Preset kernels use an analytic family, got '{family}'")
    entry = {"family": family, "amplitude": amplitude, "width": params.get("width", 1.0)}
    if family == "algebraic":
        entry["p"] = params.get("p", 2.5)
    return entry


def _fold_data(G: Callable[[float, float], float], state: float, mu_fold: float) -> tuple[float, float]:
    """mu_sign and tangent of the branch through a fold of G(U, mu) = 0."""
    h = 1e-4
    G_mu = (G(state, mu_fold + h) - G(state, mu_fold - h)) / (2.0 * h)
    G_UU = (G(state + h, mu_fold) - 2.0 * G(state, mu_fold) + G(state - h, mu_fold)) / (h * h)
    if G_UU == 0 or G_mu == 0:
        raise ConfigError("Fold is degenerate: the constant-state curve has no quadratic turn")
    mu_sign = -float(np.sign(G_mu * G_UU))
    tangent = float(np.sqrt(2.0 * abs(G_mu) / abs(G_UU)))
    return mu_sign, tangent


def exponential(n: int, params: dict[str, Any]) -> Preset:
    """Scalar -u + K * u - mu u + u^2 with K of unit negative mass."""
    N = PolynomialNonlinearity.from_table(
        [[{"coef": -1.0, "mu": 1, "powers": [1]}, {"coef": 1.0, "powers": [2]}]],
        name="exponential",
    )
    return Preset(
        "exponential",
        [[_entry(params, -1.0)]],
        N,
        notes={"equation": "U + K*U = -mu U + U^2", "leading_peak": "1.5 mu"},
    )


def nls_cubic(n: int, params: dict[str, Any]) -> Preset:
    """Cubic scaling: amplitude of order sqrt(mu) and ground-state power 3."""
    N = PolynomialNonlinearity.from_table(
        [[{"coef": -1.0, "mu": 1, "powers": [1]}, {"coef": 1.0, "powers": [3]}]],
        name="nls_cubic",
    )
    return Preset(
        "nls_cubic",
        [[_entry(params, -1.0, "gaussian")]],
        N,
        order=3,
        notes={"equation": "U + K*U = -mu U + U^3", "leading_peak": "sqrt(2 mu)"},
    )


def cahn_morral_like(n: int, params: dict[str, Any]) -> Preset:
    """-u + J*u - W'(u) = mu with W'(u) = u^3 - u, unfolded about its fold."""

    def evaluate(U: np.ndarray, mu: float) -> np.ndarray:
        return U - U**3 - mu

    def jacobian(U: np.ndarray, mu: float) -> np.ndarray:
        return (1.0 - 3.0 * U**2)[np.newaxis]

    base = Nonlinearity(1, evaluate, jacobian, name="cahn_morral")
    state = optimize.brentq(lambda u: 1.0 - 3.0 * u * u, 0.0, 1.0, xtol=1e-15)
    mu_fold = state - state**3
    mu_sign, tangent = _fold_data(lambda u, mu: -(u - u**3 - mu), state, mu_fold)
    N = transcritical_from_fold(base, [[-1.0]], [state], mu_fold, [tangent], mu_sign)
    logger.info(f"Cahn-Morral fold at u = {state:.12g}, mu = {mu_fold:.12g}")
    return Preset(
        "cahn_morral_like",
        [[_entry(params, -1.0, "gaussian")]],
        N,
        notes={
            "equation": "-u + J*u - (u^3 - u) = mu",
            "fold": {"state": state, "mu": mu_fold, "mu_sign": mu_sign},
            "parameter": "mu = mu_fold + mu_sign * mu_t^2",
        },
    )


def neural_field(n: int, params: dict[str, Any]) -> Preset:
    """Stationary neural field in the firing-rate variable U = S(u).

    S(u) = 1 / (1 + exp(-theta (u - h - mu))) has the closed-form inverse
    Psi(U; mu) = h + mu + log(U / (1 - U)) / theta, so that u = w * S(u)
    becomes -U + w*U + (U - Psi(U; mu)) = 0.
    """
    theta = float(params.get("theta", 10.0))
    h = float(params.get("h", 0.35))
    if theta <= 4.0:
        raise ConfigError(f"Sigmoid steepness theta must exceed 4 for a fold to exist, got {theta}")

    def psi(U, mu):
        return h + mu + np.log(U / (1.0 - U)) / theta

    def evaluate(U: np.ndarray, mu: float) -> np.ndarray:
        return U - psi(U, mu)

    def jacobian(U: np.ndarray, mu: float) -> np.ndarray:
        return (1.0 - 1.0 / (theta * U * (1.0 - U)))[np.newaxis]

    base = Nonlinearity(1, evaluate, jacobian, name="neural_field")
    branch = params.get("fold", "lower")
    bracket = (1e-12, 0.5) if branch == "lower" else (0.5, 1.0 - 1e-12)
    state = optimize.brentq(lambda u: theta * u * (1.0 - u) - 1.0, *bracket, xtol=1e-15)
    mu_fold = state - h - np.log(state / (1.0 - state)) / theta
    mu_sign, tangent = _fold_data(lambda u, mu: psi(u, mu) - u, state, mu_fold)
    N = transcritical_from_fold(base, [[-1.0]], [state], mu_fold, [tangent], mu_sign)
    logger.info(f"Neural field fold at U = {state:.12g}, mu = {mu_fold:.12g}")
    return Preset(
        "neural_field",
        [[_entry(params, -1.0)]],
        N,
        notes={
            "equation": "-U + w*U + (U - Psi(U; mu)) = 0",
            "theta": theta,
            "h": h,
            "fold": {"state": state, "mu": mu_fold, "mu_sign": mu_sign, "branch": branch},
            "parameter": "mu = mu_fold + mu_sign * mu_t^2",
        },
    )


def two_component(n: int, params: dict[str, Any]) -> Preset:
    """k = 2 system with one critical and one hyperbolic component."""
    N = PolynomialNonlinearity.from_table(
        [
            [
                {"coef": -1.0, "mu": 1, "powers": [1, 0]},
                {"coef": 1.0, "powers": [2, 0]},
                {"coef": 1.0, "powers": [1, 1]},
            ],
            [{"coef": 1.0, "powers": [2, 0]}],
        ],
        name="two_component",
    )
    return Preset(
        "two_component",
        [[_entry(params, -1.0), None], [None, _entry(params, -0.5)]],
        N,
        notes={"equation": "U + K*U = (-mu u1 + u1^2 + u1 u2, u1^2)"},
    )


PRESETS: dict[str, Callable[[int, dict[str, Any]], Preset]] = {
    "exponential": exponential,
    "nls_cubic": nls_cubic,
    "cahn_morral_like": cahn_morral_like,
    "neural_field": neural_field,
    "two_component": two_component,
}


def preset(name: str, n: int = 1, params: Optional[dict[str, Any]] = None) -> Preset:
    if name not in PRESETS:
        raise ConfigError(
            f"Unknown preset '{name}', available presets: {', '.join(sorted(PRESETS))}",
            {"available": sorted(PRESETS)},
        )
    return PRESETS[name](n, params or {})
