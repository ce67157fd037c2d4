"""Forward and backward second-iterate sums behind the arrow of time.

For fixed k the forward sum pairs an iterate over [delta, 2 delta] with one
over [0, delta]; the backward sum pairs two iterates over [0, delta]:

    Y_fwd = L^(-2(d - gamma)) sum phi phi phi int_{0<s<delta<t<2 delta} e(t - s)
    Y_bwd = -L^(-2(d - gamma)) sum phi phi phi int_{0<s<delta, 0<t<delta} e(t - s)

with e(u) = exp(pi i Omega L^(2 gamma) u), summed over k1 - k2 + k3 = k on
(1/L)Z^d. The forward sum vanishes as L grows; the backward one tends to
-2 delta K0(phi, phi, phi)(k).
"""

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import gamma as gamma_fn

from ..config import config
from ..models.errors import ConfigError
from ..utils.quadrature import exp_primitive

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GaussianSpectrum:
    """phi(k) = amplitude * exp(-|k|^2 / width^2)."""

    amplitude: float = 1.0
    width: float = 1.0

    def __call__(self, k: np.ndarray) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        return self.amplitude * np.exp(-np.sum(k * k, axis=-1) / self.width**2)

    def gain_at_origin(self, dimension: int) -> float:
        """Closed form of K0(phi, phi, phi)(0) for d >= 2."""
        if dimension < 2:
            raise ConfigError("The gain term at the origin needs d >= 2")
        d, w = dimension, self.width
        plane = (np.pi * w * w / 2) ** ((d - 1) / 2)
        radial = np.pi ** (d / 2) / gamma_fn(d / 2) * gamma_fn((d - 1) / 2)
        radial /= 2 * (2 / (w * w)) ** ((d - 1) / 2)
        return float(self.amplitude**3 * plane * radial)


@dataclass(frozen=True)
class ArrowRow:
    box_size: float
    forward: complex
    backward: complex
    limit: float

    @property
    def relative_error(self) -> float:
        """|Y_bwd - limit| / |limit|."""
        return abs(self.backward - self.limit) / abs(self.limit)


def _kernels(omega: np.ndarray, box_size: float, gamma: float, delta: float):
    rate = np.pi * omega * box_size ** (2 * gamma)
    diag = config.diagram
    e = exp_primitive(rate, delta, diag.taylor_threshold, diag.taylor_degree)
    mod = np.abs(e) ** 2
    return np.exp(1j * rate * delta) * mod, mod


def arrow_sums_gaussian(
    box_size: float,
    spectrum: GaussianSpectrum,
    dimension: int = 3,
    gamma: float = 0.5,
    delta: float = 1.0,
    cut: float = 5.0,
) -> tuple[complex, complex]:
    """(Y_fwd, Y_bwd) at k = 0 for a Gaussian spectrum over the whole lattice.

    At k = 0 the summand factorises over coordinates apart from the inner
    product <l1, l3>, so the sum reduces to a histogram of integer inner
    products built from per-coordinate histograms by convolution.
    """
    big_l = float(box_size)
    n = int(np.ceil(cut * big_l * spectrum.width))
    a = np.arange(-n, n + 1)
    aa, bb = np.meshgrid(a, a, indexing="ij")
    scale = (big_l * spectrum.width) ** 2
    weight = np.exp(-2 * (aa * aa + bb * bb + aa * bb) / scale)
    hist = np.bincount((aa * bb + n * n).ravel(), weights=weight.ravel())
    total = hist
    for _ in range(dimension - 1):
        total = fftconvolve(total, hist)
    m = np.arange(len(total)) - dimension * n * n
    omega = -2.0 * m / big_l**2
    fwd, bwd = _kernels(omega, big_l, gamma, delta)
    pref = spectrum.amplitude**3 * big_l ** (-2 * (dimension - gamma))
    return complex(pref * np.sum(total * fwd)), complex(-pref * np.sum(total * bwd))


def arrow_sums_direct(
    box_size: float,
    phi: Callable[[np.ndarray], np.ndarray],
    k: Sequence[float],
    dimension: int,
    k_max: float,
    gamma: float = 0.5,
    delta: float = 1.0,
) -> tuple[complex, complex]:
    """(Y_fwd, Y_bwd) by explicit summation over k1, k3 with |k1 - k|, |k3 - k| <= k_max."""
    big_l = float(box_size)
    k = np.asarray(k, dtype=float)
    n = int(np.floor(k_max * big_l + 1e-9))
    axes = [np.arange(-n, n + 1)] * dimension
    shifts = np.stack([x.ravel() for x in np.meshgrid(*axes, indexing="ij")], axis=-1) / big_l
    phi3 = phi(k + shifts)
    fwd_total = 0j
    bwd_total = 0j
    for l1 in shifts:
        omega = -2.0 * (shifts @ l1)
        terms = phi(k + l1) * phi3 * phi(k + l1 + shifts)
        fwd, bwd = _kernels(omega, big_l, gamma, delta)
        fwd_total += np.sum(terms * fwd)
        bwd_total += np.sum(terms * bwd)
    pref = big_l ** (-2 * (dimension - gamma))
    return complex(pref * fwd_total), complex(-pref * bwd_total)


def arrow_of_time_demo(
    box_sizes: Sequence[float] = (8, 16, 32),
    delta: float = 1.0,
    spectrum: GaussianSpectrum = GaussianSpectrum(),
    dimension: int = 3,
    gamma: float = 0.5,
) -> list[ArrowRow]:
    """Forward and backward sums at k = 0 for each box size, with the backward limit."""
    limit = -2 * delta * spectrum.gain_at_origin(dimension)
    rows = []
    for big_l in box_sizes:
        fwd, bwd = arrow_sums_gaussian(big_l, spectrum, dimension, gamma, delta)
        logger.info(f"L={big_l}: |Y_fwd|={abs(fwd):.4e}, Y_bwd={bwd.real:.6f}")
        rows.append(ArrowRow(float(big_l), fwd, bwd, limit))
    return rows


__all__ = [
    "ArrowRow",
    "GaussianSpectrum",
    "arrow_of_time_demo",
    "arrow_sums_direct",
    "arrow_sums_gaussian",
]
