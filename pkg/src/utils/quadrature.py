"""Quadrature rules: Gauss-Legendre lines, sphere rules, resonant-plane frames
and exact time integrals of exponentials over ordered chains.
"""

import logging
import math
from typing import Optional

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import lebedev_rule
from scipy.linalg import expm

from ..models.errors import ConfigError

logger = logging.getLogger(__name__)

# Lebedev rule size -> polynomial degree
LEBEDEV_DEGREES = {
    6: 3,
    14: 5,
    26: 7,
    38: 9,
    50: 11,
    74: 13,
    86: 15,
    110: 17,
    146: 19,
    170: 21,
    194: 23,
    230: 25,
    266: 27,
    302: 29,
    350: 31,
    434: 35,
}


def gauss_legendre(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the n-point Gauss-Legendre rule on [a, b]."""
    x, w = leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def sphere_rule(dimension: int, size: int) -> tuple[np.ndarray, np.ndarray]:
    """Directions ``(m, d)`` and weights summing to the area of the unit sphere.

    d=3 uses a Lebedev rule with ``size`` points, d=2 equally spaced angles,
    d=1 the two unit vectors.

    Raises:
        ConfigError: If no Lebedev rule of that size is tabulated.
    """
    if dimension == 1:
        return np.array([[1.0], [-1.0]]), np.ones(2)
    if dimension == 2:
        theta = 2 * np.pi * np.arange(size) / size
        return np.stack([np.cos(theta), np.sin(theta)], axis=-1), np.full(size, 2 * np.pi / size)
    if dimension == 3:
        if size not in LEBEDEV_DEGREES:
            raise ConfigError(
                f"No Lebedev rule with {size} points; choose one of {sorted(LEBEDEV_DEGREES)}"
            )
        x, w = lebedev_rule(LEBEDEV_DEGREES[size])
        w = np.asarray(w, dtype=float)
        return np.asarray(x, dtype=float).T, w * (4 * np.pi / w.sum())
    raise ConfigError(f"Sphere rules are available for d <= 3, got d={dimension}")


def plane_frames(directions: np.ndarray) -> np.ndarray:
    """Orthonormal bases of the hyperplanes orthogonal to unit ``directions``.

    Returns an array of shape ``(m, d - 1, d)``.
    """
    directions = np.asarray(directions, dtype=float)
    m, d = directions.shape
    frames = np.zeros((m, d - 1, d))
    for i, u in enumerate(directions):
        basis: list[np.ndarray] = []
        for e in np.eye(d)[np.argsort(np.abs(u))]:
            v = e - (e @ u) * u
            for b in basis:
                v = v - (v @ b) * b
            norm = np.linalg.norm(v)
            if norm > 1e-8:
                basis.append(v / norm)
            if len(basis) == d - 1:
                break
        frames[i] = np.array(basis).reshape(d - 1, d)
    return frames


def plane_rule(dimension: int, n: int, radius: float) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss-Legendre rule on [-radius, radius]^(d-1), as plane coordinates."""
    x, w = gauss_legendre(n, -radius, radius)
    if dimension == 1:
        return np.zeros((1, 0)), np.ones(1)
    mesh = np.meshgrid(*([x] * (dimension - 1)), indexing="ij")
    wmesh = np.meshgrid(*([w] * (dimension - 1)), indexing="ij")
    coords = np.stack([a.ravel() for a in mesh], axis=-1)
    weights = np.prod(np.stack([a.ravel() for a in wmesh], axis=-1), axis=-1)
    return coords, weights


# -- exact time integrals ---------------------------------------------------


def exp_primitive(
    rate, length, threshold: float = 1e-4, degree: int = 8
) -> np.ndarray:
    """Integral of exp(i * rate * u) over [0, length].

    Uses ``(exp(i rate length) - 1) / (i rate)`` and switches to a
    ``degree``-term series where ``|rate * length| <= threshold``.
    """
    rate = np.asarray(rate, dtype=float)
    length = np.asarray(length, dtype=float)
    z = rate * length
    small = np.abs(z) <= threshold
    safe = np.where(small, 1.0, rate)
    closed = np.expm1(1j * safe * length) / (1j * safe)
    series = np.zeros(np.broadcast(rate, length).shape, dtype=complex)
    term = np.ones_like(series)
    for r in range(degree + 1):
        series = series + term / math.factorial(r + 1)
        term = term * (1j * z)
    return np.where(small, length * series, closed)


def chain_integral(
    rates: np.ndarray,
    lower: float,
    upper: float,
    floor: Optional[tuple[int, float]] = None,
    threshold: float = 1e-4,
    degree: int = 8,
) -> np.ndarray:
    """Integral of prod_j exp(i c_j t_j) over lower < t_1 < ... < t_m < upper.

    ``rates`` has shape ``(count, m)``, ordered from the earliest time. A
    ``floor = (j, s)`` adds the constraint t_j > s (0-based position). Chains
    of length one use :func:`exp_primitive`; longer chains read the corner
    entry of the exponential of a bidiagonal generator.
    """
    rates = np.atleast_2d(np.asarray(rates, dtype=float))
    count, m = rates.shape
    if upper <= lower:
        return np.zeros(count, dtype=complex)
    if floor is not None and floor[1] <= lower:
        floor = None
    if floor is not None and floor[1] >= upper:
        return np.zeros(count, dtype=complex)
    shift = np.exp(1j * lower * rates.sum(axis=1))

    if m == 1:
        start = lower if floor is None else floor[1]
        c = rates[:, 0]
        out = exp_primitive(c, upper - start, threshold, degree)
        return out * np.exp(1j * c * start)

    # segment j runs between t_j and t_(j+1) with rate sum_{l > j} c_l
    tails = np.cumsum(rates[:, ::-1], axis=1)[:, ::-1]
    gen = np.zeros((count, m + 1, m + 1), dtype=complex)
    idx = np.arange(m)
    gen[:, idx, idx] = 1j * tails
    gen[:, idx, idx + 1] = 1.0
    if floor is None:
        return expm((upper - lower) * gen)[:, 0, m] * shift
    j, s = floor
    blocked = gen.copy()
    blocked[:, j, j + 1] = 0.0
    first = expm((s - lower) * blocked)
    second = expm((upper - s) * gen)
    return np.einsum("ck,ck->c", first[:, 0, :], second[:, :, m]) * shift


__all__ = [
    "LEBEDEV_DEGREES",
    "chain_integral",
    "exp_primitive",
    "gauss_legendre",
    "plane_frames",
    "plane_rule",
    "sphere_rule",
]
