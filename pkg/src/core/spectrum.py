"""Spectra phi(k) sampled on a Cartesian grid of R^d."""

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from ..models.errors import DecorationError


@dataclass(frozen=True)
class SpectrumGrid:
    """Points h * n with |n|_inf <= round(half_width / h)."""

    dimension: int
    half_width: float
    spacing: float

    @property
    def cutoff(self) -> int:
        return int(round(self.half_width / self.spacing))

    @property
    def side(self) -> int:
        return 2 * self.cutoff + 1

    @cached_property
    def axis(self) -> np.ndarray:
        return self.spacing * np.arange(-self.cutoff, self.cutoff + 1)

    @property
    def extent(self) -> float:
        return self.cutoff * self.spacing

    def shape(self) -> tuple[int, ...]:
        return (self.side,) * self.dimension

    @cached_property
    def points(self) -> np.ndarray:
        """``(side^d, d)`` grid points in C order."""
        mesh = np.meshgrid(*([self.axis] * self.dimension), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    @cached_property
    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.side, self.spacing)
        w[0] = w[-1] = self.spacing / 2
        mesh = np.meshgrid(*([w] * self.dimension), indexing="ij")
        return np.prod(np.stack([m.ravel() for m in mesh], axis=-1), axis=-1)

    def contains(self, k: np.ndarray) -> np.ndarray:
        return np.max(np.abs(np.asarray(k)), axis=-1) <= self.extent + 1e-12

    def check(self, k: np.ndarray) -> None:
        if not np.all(self.contains(k)):
            raise DecorationError("Momentum lies outside the spectrum grid")


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Values on a :class:`SpectrumGrid`, multilinear in between, zero outside."""

    grid: SpectrumGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(self.grid.shape())
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, grid: SpectrumGrid, func: Callable[[np.ndarray], np.ndarray]):
        return cls(grid, np.asarray(func(grid.points), dtype=float))

    @classmethod
    def zeros(cls, grid: SpectrumGrid) -> "Spectrum":
        return cls(grid, np.zeros(grid.shape()))

    @cached_property
    def _interp(self) -> RegularGridInterpolator:
        axes = (self.grid.axis,) * self.grid.dimension
        return RegularGridInterpolator(
            axes, self.values, method="linear", bounds_error=False, fill_value=0.0
        )

    def __call__(self, k: np.ndarray) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        return self._interp(k.reshape(-1, self.grid.dimension)).reshape(k.shape[:-1])

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def __add__(self, other: "Spectrum") -> "Spectrum":
        return Spectrum(self.grid, self.values + other.values)

    def scale(self, factor: float) -> "Spectrum":
        return Spectrum(self.grid, factor * self.values)


def rayleigh_jeans(a: float = 1.0, b: float = 1.0) -> Callable[[np.ndarray], np.ndarray]:
    """phi(k) = 1 / (a + b |k|^2)."""

    def phi(k: np.ndarray) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        return 1.0 / (a + b * np.sum(k * k, axis=-1))

    return phi


__all__ = ["Spectrum", "SpectrumGrid", "rayleigh_jeans"]
