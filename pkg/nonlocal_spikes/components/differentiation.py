"""Central finite differences with Richardson extrapolation."""

from __future__ import annotations

from typing import Callable

import numpy as np


def richardson(values: list, order: int = 2) -> tuple:
    """Extrapolate estimates taken at steps h, h/2, h/4, ...

    Each level removes one even power of h. Returns the best estimate and
    the difference to the previous level as an error margin.
    """
    table = [np.asarray(v, dtype=float) for v in values]
    power = order
    while len(table) > 1:
        factor = 2.0**power
        table = [(factor * b - a) / (factor - 1.0) for a, b in zip(table, table[1:])]
        power += 2
    best = table[0]
    margin = float(np.max(np.abs(best - np.asarray(values[-1], dtype=float))))
    return best, margin


def mixed_second(g: Callable[[float, float], float], h: float) -> float:
    """d^2 g / ds dt at (0, 0)."""
    return (g(h, h) - g(h, -h) - g(-h, h) + g(-h, -h)) / (4.0 * h * h)


def second(g: Callable[[float], float], h: float) -> float:
    return (g(h) - 2.0 * g(0.0) + g(-h)) / (h * h)


def third(g: Callable[[float], float], h: float) -> float:
    return (g(2.0 * h) - 2.0 * g(h) + 2.0 * g(-h) - g(-2.0 * h)) / (2.0 * h**3)


def hessian(f: Callable[[np.ndarray], np.ndarray], n: int, h: float) -> np.ndarray:
    """Central-difference Hessian at 0 of f: R^n -> R^m (last axes n x n)."""
    zero = np.zeros(n)
    f0 = np.asarray(f(zero))
    out = np.zeros(f0.shape + (n, n), dtype=f0.dtype)
    eye = np.eye(n)
    for i in range(n):
        out[..., i, i] = (f(h * eye[i]) - 2.0 * f0 + f(-h * eye[i])) / (h * h)
        for j in range(i + 1, n):
            a, b = eye[i], eye[j]
            value = (
                f(h * (a + b)) - f(h * (a - b)) - f(h * (b - a)) + f(-h * (a + b))
            ) / (4.0 * h * h)
            out[..., i, j] = value
            out[..., j, i] = value
    return out


def richardson_hessian(
    f: Callable[[np.ndarray], np.ndarray], n: int, h: float, levels: int = 2
) -> tuple:
    steps = [h / 2.0**m for m in range(levels + 1)]
    return richardson([hessian(f, n, s) for s in steps])
