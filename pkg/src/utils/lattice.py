"""Truncated momentum lattices (1/L)Z^d.

Momenta are handled as integer index vectors ``n`` with ``k = n / L`` so that
equality tests and momentum conservation stay exact.
"""

from dataclasses import dataclass
from functools import cached_property
from itertools import product
from typing import Iterator

import numpy as np


@dataclass(frozen=True)
class LatticeGrid:
    """All lattice momenta with |k|_inf <= k_max in a box of side L."""

    dimension: int
    box_size: float
    k_max: float

    @property
    def cutoff(self) -> int:
        """Largest index magnitude N, so that |n|_inf <= N."""
        return int(np.floor(self.k_max * self.box_size + 1e-9))

    @property
    def side(self) -> int:
        return 2 * self.cutoff + 1

    @property
    def spacing(self) -> float:
        return 1.0 / self.box_size

    @cached_property
    def indices(self) -> np.ndarray:
        """(M, d) integer index vectors in lexicographic order."""
        n = self.cutoff
        axes = [np.arange(-n, n + 1)] * self.dimension
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1).astype(np.int64)

    @cached_property
    def momenta(self) -> np.ndarray:
        return self.indices * self.spacing

    @cached_property
    def norms_sq(self) -> np.ndarray:
        """|k|^2 per mode, in physical units."""
        return np.sum(self.momenta**2, axis=-1)

    @cached_property
    def position(self) -> dict[tuple[int, ...], int]:
        return {tuple(int(x) for x in n): i for i, n in enumerate(self.indices)}

    def __len__(self) -> int:
        return self.side**self.dimension

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter(self.indices)

    def contains(self, n) -> bool:
        return bool(np.max(np.abs(np.asarray(n)), initial=0) <= self.cutoff)

    def index_of(self, n) -> int:
        return self.position[tuple(int(x) for x in n)]

    def shape(self) -> tuple[int, ...]:
        """Array shape when modes are laid out on the full cube."""
        return (self.side,) * self.dimension

    def to_cube(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values).reshape(self.shape())

    def from_cube(self, cube: np.ndarray) -> np.ndarray:
        return np.asarray(cube).reshape(-1)

    def evaluate(self, func) -> np.ndarray:
        """Evaluate ``func(k)`` (vectorised over the last axis) on every mode."""
        return np.asarray(func(self.momenta))

    def offsets(self, count: int) -> Iterator[tuple[np.ndarray, ...]]:
        """Every ``count``-tuple of index vectors."""
        for combo in product(range(len(self)), repeat=count):
            yield tuple(self.indices[i] for i in combo)


@dataclass(frozen=True)
class Scaling:
    """Scaling parameters of the reduced NLS system on a box of side L."""

    dimension: int
    box_size: float
    gamma: float
    delta: float

    @property
    def alpha(self) -> float:
        """Nonlinearity strength L^(-gamma)."""
        return self.box_size ** (-self.gamma)

    @property
    def phase(self) -> float:
        """delta * L^(2 gamma), the factor in front of Omega * t in every phase."""
        return self.delta * self.box_size ** (2 * self.gamma)

    @property
    def coupling(self) -> float:
        """delta / (2 L^(d - gamma))."""
        return self.delta / (2 * self.box_size ** (self.dimension - self.gamma))

    @property
    def t_kin(self) -> float:
        return self.box_size ** (2 * self.gamma) / 2
