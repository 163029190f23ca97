"""Second-moment normalization and the block multipliers of the rescaled system.

With T(xi) = I + K_hat(xi), invertible P, Q with P T(0) Q = diag(0, I) and
H(xi) = diag((1 + |xi|^2) / |xi|^2, I), the multiplier L(xi) is the inverse
of P T(xi) Q H(xi). Everything here is sampled at eps * xi on a dual grid.
"""

from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from . import differentiation
from .constants import FD_STEP_SYMBOL, MAX_CONDITION
from .errors import IllConditioned, IndefiniteHessian, InversionFailure
from .grid import UniformGrid
from .kernel import KernelSpec

logger = logging.getLogger(__name__)

TOL_FACTORIZATION = 1e-10
MAX_NODE_CONDITION = 1e12


def compute_T0(S_eff: np.ndarray) -> np.ndarray:
    """Symmetric T0 = (S_eff / 2)^(1/2), so that x = T0 y normalizes the Hessian to 2I."""
    S = np.atleast_2d(np.asarray(S_eff, dtype=float))
    if not np.allclose(S, S.T, atol=1e-12):
        raise IndefiniteHessian("Effective Hessian must be symmetric", {"S": S.tolist()})
    eigenvalues, vectors = np.linalg.eigh(S)
    if np.any(eigenvalues <= 0):
        raise IndefiniteHessian(
            f"Effective Hessian must be positive definite, eigenvalues {eigenvalues.tolist()}"
        )
    return (vectors * np.sqrt(eigenvalues / 2.0)) @ vectors.T


def _complement(e: np.ndarray) -> np.ndarray:
    k = e.size
    basis, _ = np.linalg.qr(np.column_stack([e, np.eye(k)]))
    W = basis[:, 1:k]
    for j in range(W.shape[1]):
        if W[np.argmax(np.abs(W[:, j])), j] < 0:
            W[:, j] = -W[:, j]
    return W


def compute_PQ(K: KernelSpec, e: np.ndarray, e_star: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """P, Q with P T(0) Q = diag(0, I_{k-1}) and Q = [e | W]."""
    k = K.k
    if k == 1:
        return np.ones((1, 1)), np.ones((1, 1))
    T = np.eye(k) + K.eval_symbol(np.zeros(K.n)).real
    W = _complement(np.asarray(e, dtype=float))
    Q = np.column_stack([e, W])
    Z = np.linalg.pinv(T @ W)
    P = np.vstack([np.asarray(e_star, dtype=float)[np.newaxis], Z])

    conditions = (float(np.linalg.cond(P)), float(np.linalg.cond(Q)))
    if max(conditions) > MAX_CONDITION:
        raise IllConditioned(
            f"P/Q factorization is ill conditioned: cond(P) = {conditions[0]:.3e}, cond(Q) = {conditions[1]:.3e}"
        )
    target = np.zeros((k, k))
    target[1:, 1:] = np.eye(k - 1)
    residual = float(np.max(np.abs(P @ T @ Q - target)))
    if residual > TOL_FACTORIZATION:
        raise IllConditioned(f"P T(0) Q deviates from diag(0, I) by {residual:.3e}")
    logger.debug(f"P/Q factorization: cond(P) = {conditions[0]:.3g}, residual {residual:.2e}")
    return P, Q


def _zero_node_coupling(K: KernelSpec, P: np.ndarray, Q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ray average and spread of -lim [P T(xi) Q]_hc (1 + |xi|^2) / |xi|^2."""
    e = Q[:, 0]
    Z = P[1:]

    def f(xi: np.ndarray) -> np.ndarray:
        T = np.eye(K.k) + K.eval_symbol(xi)
        return (Z @ T @ e).real

    H, _ = differentiation.richardson_hessian(f, K.n, FD_STEP_SYMBOL, levels=2)
    H = 0.5 * (H + np.swapaxes(H, -1, -2))
    eigenvalues = np.linalg.eigvalsh(H)
    average = -0.5 * np.trace(H, axis1=-2, axis2=-1) / K.n
    spread = 0.5 * (eigenvalues[..., -1] - eigenvalues[..., 0])
    return average, spread


class MultiplierSet:
    """L(eps xi) and the scalar symbols of the rescaled system on a dual grid."""

    def __init__(
        self,
        grid: UniformGrid,
        eps: float,
        L: np.ndarray,
        forward: np.ndarray,
        hc_spread: np.ndarray,
    ):
        self.grid = grid
        self.eps = eps
        self.L = L
        self.forward = forward
        self.hc_spread = hc_spread
        s2 = eps * eps * grid.xi_squared
        self.m_eps = s2 / (1.0 + s2)
        self.precond = 1.0 + s2
        for array in (self.L, self.forward, self.m_eps, self.precond):
            array.setflags(write=False)

    @property
    def k(self) -> int:
        return self.L.shape[0]

    @property
    def L_cc(self) -> np.ndarray:
        return self.L[0, 0]

    @property
    def L_ch(self) -> np.ndarray:
        return self.L[0:1, 1:]

    @property
    def L_hc(self) -> np.ndarray:
        return self.L[1:, 0:1]

    @property
    def L_hh(self) -> np.ndarray:
        return self.L[1:, 1:]

    def apply(self, values: np.ndarray) -> np.ndarray:
        """L^eps applied to component-first physical values."""
        return self.grid.apply_symbol(self.L, values)

    def apply_rows(self, rows: slice, values: np.ndarray) -> np.ndarray:
        return self.grid.apply_symbol(self.L[rows], values)

    def factorization_residual(self) -> float:
        """max |L A - I| over nodes xi != 0."""
        k = self.k
        product = np.einsum("ij...,jl...->il...", self.L, self.forward)
        identity = np.eye(k).reshape((k, k) + (1,) * self.grid.n)
        error = np.abs(product - identity)
        error[(slice(None), slice(None)) + (0,) * self.grid.n] = 0.0
        return float(np.max(error))

    def deviations(self) -> dict[str, float]:
        """Distances of the blocks from their eps -> 0 limits."""
        k = self.k
        out = {"L_cc": float(np.max(np.abs(self.L_cc - 1.0)))}
        if k > 1:
            identity = np.eye(k - 1).reshape((k - 1, k - 1) + (1,) * self.grid.n)
            out["L_ch"] = float(np.max(np.abs(self.L_ch)))
            out["L_hh"] = float(np.max(np.abs(self.L_hh - identity)))
            out["L_hc"] = float(np.max(np.abs(self.L_hc)))
        return out

    def node_conditions(self) -> np.ndarray:
        A = np.moveaxis(self.forward, (0, 1), (-2, -1))
        zero = (0,) * self.grid.n
        conditions = np.ones(self.grid.shape)
        mask = np.ones(self.grid.shape, dtype=bool)
        mask[zero] = False
        conditions[mask] = np.linalg.cond(A[mask])
        return conditions

    def dump_csv(self, path: str | Path) -> Path:
        """Per-node condition numbers and block norms."""
        path = Path(path)
        conditions = self.node_conditions().ravel()
        radius = np.sqrt(self.grid.xi_squared).ravel()
        columns = {
            "xi_abs": radius,
            "condition": conditions,
            "L_cc_abs": np.abs(self.L_cc).ravel(),
        }
        if self.k > 1:
            flat = lambda block: np.sqrt(np.sum(np.abs(block) ** 2, axis=(0, 1))).ravel()  # noqa: E731
            columns["L_ch_norm"] = flat(self.L_ch)
            columns["L_hc_norm"] = flat(self.L_hc)
            columns["L_hh_norm"] = flat(self.L_hh)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["node"] + list(columns))
            for index in range(radius.size):
                writer.writerow([index] + [repr(float(c[index])) for c in columns.values()])
        logger.info(f"Multiplier diagnostics written to {path}")
        return path

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "grid": {"n": self.grid.n, "L": list(self.grid.L), "N": self.grid.N},
            "factorization_residual": self.factorization_residual(),
            "deviations": self.deviations(),
            "hc_spread": np.atleast_1d(self.hc_spread).tolist(),
        }


def build_multipliers(
    K: KernelSpec, P: np.ndarray, Q: np.ndarray, eps: float, grid: UniformGrid
) -> MultiplierSet:
    """Sample L(eps xi) = [P T(eps xi) Q H(eps xi)]^-1 at every dual node."""
    if eps <= 0:
        raise InversionFailure(f"Multipliers need eps > 0, got {eps}")
    k = K.k
    xi = np.moveaxis(grid.frequencies, 0, -1) * eps
    s2 = np.sum(xi * xi, axis=-1)
    zero = (0,) * grid.n
    safe = np.where(s2 == 0, 1.0, s2)

    T = np.eye(k) + K.eval_symbol(xi)
    A = P @ T @ Q
    A[..., :, 0] *= ((1.0 + s2) / safe)[..., np.newaxis]

    mask = s2 > 0
    try:
        singular = np.linalg.svd(A[mask], compute_uv=False)
    except np.linalg.LinAlgError as err:
        raise InversionFailure(f"Multiplier inversion failed at eps = {eps}: {err}") from err
    # a 1 x 1 block always has condition 1; bound the smallest singular value as well
    with np.errstate(divide="ignore", invalid="ignore"):
        conditions = np.maximum(singular[..., 0], 1.0) / singular[..., -1]
    worst = float(np.max(conditions)) if conditions.size else 1.0
    if not np.isfinite(worst) or worst > MAX_NODE_CONDITION:
        bad = int(np.argmax(conditions))
        raise InversionFailure(
            f"P T Q H is singular at eps = {eps} (condition {worst:.3e})",
            {"node_frequency": xi[mask][bad].tolist()},
        )
    L = np.empty_like(A)
    L[mask] = np.linalg.inv(A[mask])

    A[zero] = np.eye(k)
    L[zero] = np.eye(k)
    spread = np.zeros(k - 1)
    if k > 1:
        average, spread = _zero_node_coupling(K, P, Q)
        L_zero = np.eye(k, dtype=complex)
        L_zero[1:, 0] = average
        L[zero] = L_zero
        A[zero] = np.linalg.inv(L_zero)
        if np.any(spread > 1e-8):
            logger.debug(f"Zero-node coupling depends on direction, spread {spread.tolist()}")

    multipliers = MultiplierSet(
        grid, eps, np.moveaxis(L, (-2, -1), (0, 1)).copy(), np.moveaxis(A, (-2, -1), (0, 1)).copy(), spread
    )
    logger.debug(f"Multipliers at eps = {eps}: max node condition {worst:.3g}")
    return multipliers


class MultiplierCache:
    """Multipliers per (eps, grid) for a fixed normalized kernel and P, Q."""

    def __init__(self, K: KernelSpec, P: np.ndarray, Q: np.ndarray):
        self.K = K
        self.P = P
        self.Q = Q
        self._store: dict[tuple, MultiplierSet] = {}

    def get(self, eps: float, grid: UniformGrid) -> MultiplierSet:
        key = (float(eps), grid.key)
        if key not in self._store:
            self._store[key] = build_multipliers(self.K, self.P, self.Q, eps, grid)
        return self._store[key]

    def clear(self) -> None:
        self._store.clear()

    def __len__(self) -> int:
        return len(self._store)


def preconditioner_gap(eps: float, grid: UniformGrid, ell: float = 2) -> float:
    """sup over dual nodes of eps^2 |xi|^2 / (1 + |xi|^2)."""
    if eps == 0:
        return 0.0
    xi2 = grid.xi_squared
    return float(np.max(eps * eps * xi2 / (1.0 + xi2)))


def measure_preconditioner_ratio(
    eps: float, grid: UniformGrid, fields: Iterable[np.ndarray], ell: float = 2
) -> float:
    """max over fields of ||((M^eps)^-1 - 1) v||_{H^(ell-2)} / ||v||_{H^ell}."""
    symbol = eps * eps * grid.xi_squared
    worst = 0.0
    for values in fields:
        values = np.asarray(values, dtype=float)
        if values.shape == grid.shape:
            values = values[np.newaxis]
        image = grid.apply_symbol(symbol, values)
        denominator = grid.norm(values, ell)
        if denominator > 0:
            worst = max(worst, grid.norm(image, ell - 2) / denominator)
    return worst


def random_fields(grid: UniformGrid, count: int, seed: Optional[int] = 0) -> list[np.ndarray]:
    """Smooth random test fields with decaying Fourier coefficients."""
    rng = np.random.default_rng(seed)
    damping = (1.0 + grid.xi_squared) ** -2
    fields = []
    for _ in range(count):
        noise = rng.standard_normal(grid.shape)
        fields.append(grid.apply_symbol(damping, noise[np.newaxis]))
    return fields
