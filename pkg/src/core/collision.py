"""Collision operator of the wave kinetic equation.

With k1 = k + l1, k3 = k + l3 and k2 = k + l1 + l3, the resonance condition
becomes <l1, l3> = 0 and

    K_j(phi1, phi2, phi3)(k) = int dl1 / (2 |l1|) int_{l3 perp l1} dl3  P_j

where P_0 = phi1(k1) phi2(k2) phi3(k3) and P_1, P_2, P_3 put phi1, phi2 and
phi3 respectively at k. K = K_0 - K_1 + K_2 - K_3.

l1 is integrated in spherical form (Gauss-Legendre radius times a sphere
rule); l3 runs over a tensor Gauss-Legendre square in an orthonormal frame of
the plane orthogonal to l1.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Union

import numpy as np

from ..config import WkeConfig, config
from ..models.errors import DecorationError
from ..utils.quadrature import gauss_legendre, plane_frames, plane_rule, sphere_rule
from .spectrum import Spectrum

logger = logging.getLogger(__name__)

SpectrumLike = Union[Spectrum, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class CollisionPieces:
    """K_0..K_3 at a batch of momenta, shape ``(4, n)``."""

    values: np.ndarray
    truncated: float = 0.0

    @property
    def total(self) -> np.ndarray:
        k0, k1, k2, k3 = self.values
        return k0 - k1 + k2 - k3

    @property
    def gain(self) -> np.ndarray:
        return self.values[0]


class CollisionOperator:
    """Quadrature for K_j in dimension ``dimension``."""

    def __init__(self, dimension: int, params: Optional[WkeConfig] = None):
        self.dimension = dimension
        self.params = params or config.wke

    @cached_property
    def _rule(self):
        p, d = self.params, self.dimension
        radii, rw = gauss_legendre(p.radial_nodes, 0.0, p.l1_radius)
        keep = radii >= p.l1_floor
        self.excluded = int((~keep).sum())
        if self.excluded:
            logger.warning(f"Excluded {self.excluded} radial nodes below |l1| = {p.l1_floor}")
        radii, rw = radii[keep], rw[keep]
        dirs, dw = sphere_rule(d, p.angular_nodes)
        frames = plane_frames(dirs)
        coords, pw = plane_rule(d, p.plane_nodes, p.plane_radius)
        # l1[r, a] and l3[a, q]
        l1 = radii[:, None, None] * dirs[None, :, :]
        w1 = (radii ** (d - 2) * rw / 2)[:, None] * dw[None, :]
        l3 = np.einsum("qj,ajd->aqd", coords, frames)
        logger.debug(
            f"Collision rule: {len(radii)} radii, {len(dirs)} directions, {len(pw)} plane nodes"
        )
        return l1, w1, l3, pw

    @property
    def node_count(self) -> int:
        l1, _, l3, _ = self._rule
        return l1.shape[0] * l1.shape[1] * l3.shape[1]

    def pieces(
        self, phi1: SpectrumLike, phi2: SpectrumLike, phi3: SpectrumLike, k: np.ndarray
    ) -> CollisionPieces:
        """K_0..K_3 at momenta ``k`` of shape ``(n, d)`` or ``(d,)``.

        Raises:
            DecorationError: If a momentum lies outside a grid spectrum.
        """
        k = np.atleast_2d(np.asarray(k, dtype=float))
        domain = next((f.grid for f in (phi1, phi2, phi3) if isinstance(f, Spectrum)), None)
        if domain is not None:
            domain.check(k)
        l1, w1, l3, pw = self._rule
        chunk = self.params.chunk_size
        out = np.zeros((4, len(k)))
        truncated = 0.0
        for start in range(0, len(k), chunk):
            kk = k[start : start + chunk]
            out[:, start : start + chunk], lost = self._batch(
                phi1, phi2, phi3, kk, l1, w1, l3, pw, domain
            )
            truncated += lost
        return CollisionPieces(out, truncated)

    def _batch(self, phi1, phi2, phi3, k, l1, w1, l3, pw, domain):
        # shapes: l1 (R, A, d), l3 (A, Q, d), k (n, d)
        p1 = k[:, None, None, :] + l1[None]
        p3 = k[:, None, None, :] + l3[None]
        p2 = p1[:, :, :, None, :] + l3[None, None]
        f1 = phi1(p1)
        f3 = phi3(p3)
        f2 = phi2(p2)
        weight = w1[None, :, :, None] * pw[None, None, None, :]
        lost = 0.0
        if domain is not None:
            inside = (
                domain.contains(p1)[:, :, :, None]
                & domain.contains(p3)[:, None, :, :]
                & domain.contains(p2)
            )
            lost = float(np.sum(weight * ~inside))
            weight = weight * inside
        at = [np.asarray(f(k)) for f in (phi1, phi2, phi3)]
        a1, a2, a3 = (x[:, None, None, None] for x in at)
        g1 = f1[:, :, :, None]
        g3 = f3[:, None, :, :]
        terms = (
            g1 * f2 * g3,
            a1 * f2 * g3,
            g1 * a2 * g3,
            g1 * f2 * a3,
        )
        values = np.stack([np.sum(weight * t, axis=(1, 2, 3)) for t in terms])
        return values, lost

    def __call__(self, phi1, phi2, phi3, k) -> np.ndarray:
        return self.pieces(phi1, phi2, phi3, k).total


def collision(
    phi1: SpectrumLike,
    phi2: SpectrumLike,
    phi3: SpectrumLike,
    k: np.ndarray,
    params: Optional[WkeConfig] = None,
) -> np.ndarray:
    """K(phi1, phi2, phi3)(k) with the configured quadrature."""
    k = np.asarray(k, dtype=float)
    op = CollisionOperator(k.shape[-1], params)
    out = op(phi1, phi2, phi3, k)
    return out if k.ndim > 1 else out[0]


def collision_monte_carlo(
    phi1: SpectrumLike,
    phi2: SpectrumLike,
    phi3: SpectrumLike,
    k: np.ndarray,
    samples: int,
    rng: np.random.Generator,
    scale: float = 0.5,
    piece: int = 0,
) -> tuple[float, float]:
    """Importance-sampled K_piece(k) and its standard error.

    l1 is drawn from N(0, scale^2 I_d) and l3 from N(0, scale^2) on the
    orthogonal plane.
    """
    k = np.asarray(k, dtype=float)
    d = len(k)
    l1 = scale * rng.standard_normal((samples, d))
    r = np.linalg.norm(l1, axis=-1)
    u = l1 / r[:, None]
    raw = scale * rng.standard_normal((samples, d))
    l3 = raw - np.sum(raw * u, axis=-1)[:, None] * u
    dens1 = np.exp(-(r**2) / (2 * scale**2)) / (2 * np.pi * scale**2) ** (d / 2)
    s3 = np.sum(l3 * l3, axis=-1)
    dens3 = np.exp(-s3 / (2 * scale**2)) / (2 * np.pi * scale**2) ** ((d - 1) / 2)
    vals = [phi1(k + l1), phi2(k + l1 + l3), phi3(k + l3)]
    at = [np.asarray(f(k[None]))[0] for f in (phi1, phi2, phi3)]
    if piece:
        vals[piece - 1] = np.full(samples, at[piece - 1])
    f = vals[0] * vals[1] * vals[2] / (2 * r) / (dens1 * dens3)
    return float(f.mean()), float(f.std(ddof=1) / np.sqrt(samples))


__all__ = [
    "CollisionOperator",
    "CollisionPieces",
    "collision",
    "collision_monte_carlo",
]
