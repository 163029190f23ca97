from __future__ import annotations

import itertools
import logging
from typing import Iterable, Sequence

import numpy as np

from .errors import KernelError

logger = logging.getLogger(__name__)

MAX_GROUP_ORDER = 48


class SymmetryGroup:
    """Finite group of signed permutation matrices acting on R^n."""

    def __init__(self, generators: Iterable[Sequence[Sequence[int]]], n: int | None = None):
        mats = [np.asarray(g, dtype=int) for g in generators]
        if not mats:
            if n is None:
                raise KernelError("An empty generator list needs an explicit dimension")
            mats = [np.eye(n, dtype=int)]
        self.n = mats[0].shape[0]
        for g in mats:
            self._check_generator(g)
        self.generators = mats
        self.elements = self._close(mats)
        logger.debug(f"Symmetry group of order {len(self.elements)} in dimension {self.n}")

    def _check_generator(self, g: np.ndarray) -> None:
        if g.shape != (self.n, self.n):
            raise KernelError(f"Generator shape {g.shape} does not match dimension {self.n}")
        if not np.all(np.isin(g, (-1, 0, 1))):
            raise KernelError("Generators must have entries in {-1, 0, 1}")
        if not np.array_equal(g @ g.T, np.eye(self.n, dtype=int)):
            raise KernelError("Generators must be orthogonal")

    def _close(self, generators: list[np.ndarray]) -> list[np.ndarray]:
        identity = np.eye(self.n, dtype=int)
        elements = [identity]
        seen = {identity.tobytes()}
        frontier = [identity]
        while frontier:
            new_frontier = []
            for a in frontier:
                for g in generators:
                    product = g @ a
                    key = product.tobytes()
                    if key not in seen:
                        seen.add(key)
                        elements.append(product)
                        new_frontier.append(product)
            if len(elements) > MAX_GROUP_ORDER:
                raise KernelError("Generated group is larger than any signed permutation group")
            frontier = new_frontier
        return elements

    @classmethod
    def named(cls, name: str, n: int) -> SymmetryGroup:
        """Standard groups: reflections, inversion, hyperoctahedral."""
        identity = np.eye(n, dtype=int)
        if name == "inversion":
            return cls([-identity])
        if name == "reflections":
            gens = []
            for d in range(n):
                g = identity.copy()
                g[d, d] = -1
                gens.append(g)
            return cls(gens)
        if name == "hyperoctahedral":
            gens = []
            for d in range(n):
                g = identity.copy()
                g[d, d] = -1
                gens.append(g)
            for i, j in itertools.combinations(range(n), 2):
                g = identity.copy()
                g[[i, j]] = g[[j, i]]
                gens.append(g)
            return cls(gens)
        raise KernelError(f"Unknown symmetry group '{name}'")

    @property
    def order(self) -> int:
        return len(self.elements)

    def contains_inversion(self) -> bool:
        minus = -np.eye(self.n, dtype=int)
        return any(np.array_equal(g, minus) for g in self.elements)

    def fixed_subspace_dim(self) -> int:
        """dim Fix(G) = n - rank(sum_g (g - I))."""
        total = sum(g - np.eye(self.n) for g in self.elements)
        return self.n - int(np.linalg.matrix_rank(total))

    def fixes_only_origin(self) -> bool:
        return self.fixed_subspace_dim() == 0

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "generators": [g.tolist() for g in self.generators],
            "fixed_subspace_dim": self.fixed_subspace_dim(),
            "fixes_only_origin": self.fixes_only_origin(),
        }
