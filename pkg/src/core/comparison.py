"""Comparison of NLS ensemble statistics with kinetic predictions."""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.signal import fftconvolve

from ..config import WkeConfig, config
from ..models.errors import ConfigError, DecorationError
from ..utils.lattice import LatticeGrid, Scaling
from ..utils.quadrature import exp_primitive
from .arrow import GaussianSpectrum
from .collision import collision
from .diagrams import DiagramSetup, eval_couple
from .gardens import enumerate_couples
from .layering import Layering
from .nls import EnsembleStats
from .wke import WkeTrajectory

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ComparisonRow:
    time: float
    tau: float
    sup_error: float
    l2_error: float
    sup_mc_error: float
    l2_mc_error: float


def compare_to_wke(
    stats: EnsembleStats,
    trajectory: WkeTrajectory,
    grid: LatticeGrid,
    delta: float,
) -> list[ComparisonRow]:
    """Discrepancy between E|a_k(t)|^2 and phi(delta * t, k) at every snapshot.

    Raises:
        DecorationError: If lattice momenta fall outside the spectrum grid.
        ConfigError: If a snapshot lies beyond the kinetic trajectory.
    """
    if stats.mean_power.shape[1] != len(grid):
        raise DecorationError("Ensemble statistics do not match the lattice grid")
    if not np.all(trajectory.grid.contains(grid.momenta)):
        raise DecorationError("Lattice momenta extend beyond the spectrum grid")
    cell = grid.spacing**grid.dimension
    rows = []
    for j, t in enumerate(stats.times):
        tau = delta * float(t)
        phi = trajectory.at(tau)(grid.momenta)
        diff = stats.mean_power[j] - phi
        err = stats.stderr[j]
        rows.append(
            ComparisonRow(
                time=float(t),
                tau=tau,
                sup_error=float(np.max(np.abs(diff))),
                l2_error=float(np.sqrt(cell * np.sum(diff**2))),
                sup_mc_error=float(np.max(err)),
                l2_mc_error=float(np.sqrt(cell * np.sum(err**2))),
            )
        )
        logger.debug(f"t={t}: sup discrepancy {rows[-1].sup_error:.3e}")
    return rows


@dataclass(frozen=True)
class IdentityRow:
    box_size: float
    couple_sum: complex
    kinetic: float

    @property
    def error(self) -> float:
        return abs(self.couple_sum - self.kinetic)


def couple_sum(
    order: int,
    k: np.ndarray,
    grid: LatticeGrid,
    scaling: Scaling,
    phi: Callable[[np.ndarray], np.ndarray],
    t: float,
) -> complex:
    """sum over couples Q of the given order of K_Q(t, t, k), inputs phi in layer 0."""
    total = 0j
    for q in enumerate_couples(order):
        setup = DiagramSetup(q, Layering.constant(q, 0), (phi,), scaling, grid)
        total += eval_couple(setup, t, t, k).value
    return total


def _coordinate_histograms(u: int, cutoff: int, scale: float) -> tuple[np.ndarray, int]:
    """Per-coordinate weights of the four order-two terms binned by a * b.

    ``a`` and ``b`` are the index offsets of k1 and k3 from k along one axis;
    rows are f1 f2 f3, f0 f1 f3, f0 f2 f3 and f0 f1 f2.
    """
    a = np.arange(-cutoff - u, cutoff - u + 1)
    aa, bb = np.meshgrid(a, a, indexing="ij")
    inside = np.abs(u + aa + bb) <= cutoff
    f0 = np.exp(-(u * u) / scale)
    f1 = np.exp(-((u + aa) ** 2) / scale)
    f3 = np.exp(-((u + bb) ** 2) / scale)
    f2 = np.where(inside, np.exp(-((u + aa + bb) ** 2) / scale), 0.0)
    offset = (cutoff + abs(u)) ** 2
    bins = (aa * bb + offset).ravel()
    terms = (f1 * f2 * f3, f0 * f1 * f3, f0 * f2 * f3, f0 * f1 * f2)
    hists = np.stack(
        [np.bincount(bins, weights=w.ravel(), minlength=2 * offset + 1) for w in terms]
    )
    return hists, offset


def order_two_couple_sum(
    box_size: float,
    spectrum: GaussianSpectrum,
    k: Sequence[float],
    dimension: int,
    gamma: float,
    delta: float,
    t: float = 1.0,
    k_max: Optional[float] = None,
    cut: float = 5.0,
) -> complex:
    """``couple_sum(2, ...)`` for a Gaussian spectrum in O(N^2) per coordinate.

    The order-two couples add up to

        2 c^2 sum_{l1, l3} |int_0^t exp(i theta Omega s) ds|^2 G(l1, l3)

    with Omega = -2 <l1, l3>, theta = delta L^(2 gamma) pi and
    G = phi1 phi2 phi3 + phi_k (phi1 phi3 - phi2 phi3 - phi1 phi2), every
    momentum restricted to the grid. Each term of G factorises over
    coordinates, so the sum is a histogram of integer inner products built
    by convolving per-coordinate histograms. ``k_max`` defaults to
    ``cut * width + |k|_inf``.

    Raises:
        DecorationError: If ``k`` is off the lattice or outside the grid.
    """
    big_l = float(box_size)
    k = np.asarray(k, dtype=float)
    if k_max is None:
        k_max = cut * spectrum.width + float(np.max(np.abs(k), initial=0.0))
    grid = LatticeGrid(dimension, big_l, k_max)
    index = np.rint(k * big_l).astype(np.int64)
    if not np.allclose(index / big_l, k):
        raise DecorationError(f"Momentum {k.tolist()} is not on the lattice of side {big_l}")
    if not grid.contains(index):
        raise DecorationError(f"Momentum {k.tolist()} lies outside the grid")
    scale = (big_l * spectrum.width) ** 2
    total, offset = None, 0
    for u in index:
        hists, shift = _coordinate_histograms(int(u), grid.cutoff, scale)
        if total is None:
            total = hists
        else:
            total = np.stack([fftconvolve(x, y) for x, y in zip(total, hists)])
        offset += shift
    weights = spectrum.amplitude**3 * (total[0] + total[1] - total[2] - total[3])
    m = np.arange(len(weights)) - offset
    scaling = Scaling(dimension, big_l, gamma, delta)
    rate = np.pi * scaling.phase * (-2.0 * m / big_l**2)
    diag = config.diagram
    kernel = np.abs(exp_primitive(rate, t, diag.taylor_threshold, diag.taylor_degree)) ** 2
    return complex(2 * scaling.coupling**2 * np.sum(kernel * weights))


def first_order_identity(
    box_sizes: Sequence[float],
    k: Sequence[float],
    spectrum: GaussianSpectrum,
    dimension: int,
    gamma: float,
    delta: float,
    t: float = 1.0,
    params: Optional[WkeConfig] = None,
    k_max: Optional[float] = None,
) -> list[IdentityRow]:
    """Order-two couple sums against U_1(t, k) = delta * t * K(phi)(k) for several L.

    ``k`` is a physical momentum which must lie on every lattice.

    Raises:
        ConfigError: If ``spectrum`` is not Gaussian.
    """
    if not isinstance(spectrum, GaussianSpectrum):
        raise ConfigError("The order-two identity needs a Gaussian spectrum")
    point = np.asarray(k, dtype=float)
    kinetic = float(delta * t * collision(spectrum, spectrum, spectrum, point, params))
    rows = []
    for big_l in box_sizes:
        value = order_two_couple_sum(big_l, spectrum, point, dimension, gamma, delta, t, k_max)
        logger.info(f"L={big_l}: couple sum {value.real:.6e}, kinetic {kinetic:.6e}")
        rows.append(IdentityRow(float(big_l), value, kinetic))
    return rows


__all__ = [
    "ComparisonRow",
    "IdentityRow",
    "compare_to_wke",
    "couple_sum",
    "first_order_identity",
    "order_two_couple_sum",
]
