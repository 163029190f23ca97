from __future__ import annotations

import logging
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigError

logger = logging.getLogger(__name__)

Evaluator = Callable[[np.ndarray, float], np.ndarray]

JACOBIAN_STEP = 1e-6


class Nonlinearity:
    """Pointwise map (U, mu) -> N(U; mu) acting on component-first arrays.

    Optional analytic derivatives:
        jacobian(U, mu)           -> D_U N, shape (k, k, ...)
        mixed(U, mu)              -> D_mu D_U N, shape (k, k, ...)
        second(U, mu)             -> D_UU N, shape (k, k, k, ...)
    Missing derivatives are replaced by central differences.
    """

    def __init__(
        self,
        k: int,
        evaluate: Evaluator,
        jacobian: Optional[Callable] = None,
        mixed: Optional[Callable] = None,
        second: Optional[Callable] = None,
        smoothness: Optional[int] = None,
        name: str = "custom",
    ):
        self.k = k
        self._evaluate = evaluate
        self._jacobian = jacobian
        self.mixed = mixed
        self.second = second
        self.smoothness = smoothness
        self.name = name

    @property
    def has_analytic_derivatives(self) -> bool:
        return self.mixed is not None and self.second is not None

    def evaluate(self, U: np.ndarray, mu: float) -> np.ndarray:
        U = np.asarray(U, dtype=float)
        return np.asarray(self._evaluate(U, mu), dtype=float)

    def __call__(self, U: np.ndarray, mu: float) -> np.ndarray:
        return self.evaluate(U, mu)

    def jacobian(self, U: np.ndarray, mu: float) -> np.ndarray:
        """Pointwise D_U N, shape (k, k) + U.shape[1:]."""
        U = np.asarray(U, dtype=float)
        if self._jacobian is not None:
            return np.asarray(self._jacobian(U, mu), dtype=float)
        out = np.empty((self.k, self.k) + U.shape[1:])
        for j in range(self.k):
            step = JACOBIAN_STEP * np.maximum(1.0, np.abs(U[j]))
            plus = U.copy()
            minus = U.copy()
            plus[j] += step
            minus[j] -= step
            out[:, j] = (self.evaluate(plus, mu) - self.evaluate(minus, mu)) / (2.0 * step)
        return out

    def with_parameter_map(
        self, offset: Optional[np.ndarray] = None, mu_map: Callable[[float], float] = lambda m: m,
        name: Optional[str] = None,
    ) -> Nonlinearity:
        """N(offset + V; mu_map(mu)) as a new nonlinearity."""
        base = self
        shift = np.zeros(self.k) if offset is None else np.asarray(offset, dtype=float)

        def evaluate(V: np.ndarray, mu: float) -> np.ndarray:
            return base.evaluate(V + shift.reshape((-1,) + (1,) * (V.ndim - 1)), mu_map(mu))

        def jacobian(V: np.ndarray, mu: float) -> np.ndarray:
            return base.jacobian(V + shift.reshape((-1,) + (1,) * (V.ndim - 1)), mu_map(mu))

        return Nonlinearity(
            self.k, evaluate, jacobian, smoothness=self.smoothness, name=name or f"{self.name}*"
        )

    def describe(self) -> dict:
        return {"name": self.name, "k": self.k, "analytic": self.has_analytic_derivatives}


class PolynomialTerm:
    """coef * mu^mu_power * prod_i U_i^powers[i]."""

    def __init__(self, coef: float, powers: Sequence[int], mu_power: int = 0):
        self.coef = float(coef)
        self.powers = tuple(int(p) for p in powers)
        self.mu_power = int(mu_power)
        if any(p < 0 for p in self.powers) or self.mu_power < 0:
            raise ConfigError("Polynomial powers must be nonnegative integers")

    def monomial(self, U: np.ndarray, powers: Sequence[int]) -> np.ndarray:
        out = np.ones(U.shape[1:])
        for i, p in enumerate(powers):
            if p:
                out = out * U[i] ** p
        return out

    def value(self, U: np.ndarray, mu: float) -> np.ndarray:
        return self.coef * mu**self.mu_power * self.monomial(U, self.powers)

    def derivative(self, U: np.ndarray, mu: float, axes: Sequence[int], mu_order: int = 0) -> np.ndarray:
        """Partial derivative in U along the given axes and mu_order times in mu."""
        powers = list(self.powers)
        factor = self.coef
        for a in axes:
            if powers[a] == 0:
                return np.zeros(U.shape[1:])
            factor *= powers[a]
            powers[a] -= 1
        m = self.mu_power
        for _ in range(mu_order):
            if m == 0:
                return np.zeros(U.shape[1:])
            factor *= m
            m -= 1
        return factor * mu**m * self.monomial(U, powers)


class PolynomialNonlinearity(Nonlinearity):
    """Polynomial nonlinearity given as a coefficient table per component."""

    def __init__(self, terms: Sequence[Sequence[PolynomialTerm]], name: str = "polynomial"):
        self.terms = [list(row) for row in terms]
        k = len(self.terms)
        for row in self.terms:
            for term in row:
                if len(term.powers) != k:
                    raise ConfigError(
                        f"Polynomial term powers {term.powers} do not match k = {k}"
                    )
        super().__init__(
            k,
            self._value,
            self._jacobian_exact,
            self._mixed_exact,
            self._second_exact,
            smoothness=None,
            name=name,
        )

    @classmethod
    def from_table(cls, table: Sequence[Sequence[dict]], name: str = "polynomial") -> PolynomialNonlinearity:
        k = len(table)
        rows = []
        for row in table:
            rows.append(
                [
                    PolynomialTerm(t.get("coef", 1.0), t.get("powers", [0] * k), t.get("mu", 0))
                    for t in row
                ]
            )
        return cls(rows, name)

    def _value(self, U: np.ndarray, mu: float) -> np.ndarray:
        out = np.zeros(U.shape)
        for i, row in enumerate(self.terms):
            for term in row:
                out[i] = out[i] + term.value(U, mu)
        return out

    def _derivative_tensor(self, U: np.ndarray, mu: float, order: int, mu_order: int) -> np.ndarray:
        k = self.k
        out = np.zeros((k,) + (k,) * order + U.shape[1:])
        for i, row in enumerate(self.terms):
            for axes in np.ndindex(*((k,) * order)):
                total = np.zeros(U.shape[1:])
                for term in row:
                    total = total + term.derivative(U, mu, axes, mu_order)
                out[(i,) + axes] = total
        return out

    def _jacobian_exact(self, U: np.ndarray, mu: float) -> np.ndarray:
        return self._derivative_tensor(U, mu, 1, 0)

    def _mixed_exact(self, U: np.ndarray, mu: float) -> np.ndarray:
        return self._derivative_tensor(U, mu, 1, 1)

    def _second_exact(self, U: np.ndarray, mu: float) -> np.ndarray:
        return self._derivative_tensor(U, mu, 2, 0)

    def third(self, U: np.ndarray, mu: float) -> np.ndarray:
        return self._derivative_tensor(U, mu, 3, 0)

    def describe(self) -> dict:
        info = super().describe()
        info["terms"] = [
            [{"coef": t.coef, "mu": t.mu_power, "powers": list(t.powers)} for t in row]
            for row in self.terms
        ]
        return info
