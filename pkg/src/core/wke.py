"""Time stepping, Taylor iterates and diagnostics for the wave kinetic equation

    d phi / d tau = K(phi, phi, phi).
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from ..config import WkeConfig, config
from ..models.errors import BlowupError, ConfigError
from .collision import CollisionOperator
from .spectrum import Spectrum, SpectrumGrid

logger = logging.getLogger(__name__)


def sobolev_monitor(phi: Spectrum, s: Optional[float] = None) -> float:
    """Discrete || <k>^s phi ||_{L^2} with cell volume h^d.

    Raises:
        ConfigError: If ``s <= d/2 - 1``.
    """
    grid = phi.grid
    s = config.wke.sobolev_index if s is None else s
    if s <= grid.dimension / 2 - 1:
        raise ConfigError(f"Monitor index s={s} must exceed d/2 - 1 = {grid.dimension / 2 - 1}")
    bracket = 1.0 + np.sum(grid.points**2, axis=-1)
    cell = grid.spacing**grid.dimension
    return float(np.sqrt(cell * np.sum(bracket**s * phi.flat**2)))


@dataclass(frozen=True)
class Conserved:
    mass: float
    momentum: tuple[float, ...]
    energy: float


def conserved_quantities(phi: Spectrum) -> Conserved:
    """Trapezoid-rule mass, momentum and energy."""
    grid = phi.grid
    w = grid.trapezoid_weights * phi.flat
    pts = grid.points
    return Conserved(
        mass=float(np.sum(w)),
        momentum=tuple(float(x) for x in w @ pts),
        energy=float(np.sum(w * np.sum(pts**2, axis=-1))),
    )


class KineticRhs:
    """K(phi, phi, phi) on every grid point, optionally once per |k| shell.

    With ``params.conservative`` the quadrature values Q are replaced by
    Q - Psi lam, the closest field in the trapezoid-weighted norm with
    sum_k w_k psi(k) Q(k) = 0 for psi in {1, k_1, .., k_d, |k|^2}. The map is
    linear, so trilinear values and Taylor iterates see the same operator as
    the time stepper. ``defect`` holds the largest correction so far
    relative to max |Q|.
    """

    def __init__(self, grid: SpectrumGrid, params: Optional[WkeConfig] = None, radial=False):
        params = params or config.wke
        self.grid = grid
        self.operator = CollisionOperator(grid.dimension, params)
        self.radial = radial
        self.truncated = 0.0
        self.defect = 0.0
        norms = np.round(np.sum((grid.points / grid.spacing) ** 2, axis=-1)).astype(np.int64)
        if radial:
            shells, first, inverse = np.unique(norms, return_index=True, return_inverse=True)
            self._targets = grid.points[first]
            self._inverse = inverse
            logger.debug(f"Radial mode: {len(shells)} shells for {len(norms)} points")
        else:
            self._targets = grid.points
            self._inverse = None
        self._gram = None
        if params.conservative:
            if grid.side < 3:
                logger.warning("Grid too small for the conservative projection; skipping it")
            else:
                pts = grid.points
                self._basis = np.column_stack([np.ones(len(pts)), pts, np.sum(pts**2, axis=-1)])
                self._weights = grid.trapezoid_weights
                self._gram = cho_factor(self._basis.T @ (self._weights[:, None] * self._basis))

    def project(self, values: np.ndarray) -> np.ndarray:
        """Remove the part of ``values`` that changes mass, momentum or energy."""
        if self._gram is None:
            return values
        lam = cho_solve(self._gram, self._basis.T @ (self._weights * values))
        correction = self._basis @ lam
        scale = float(np.max(np.abs(values), initial=0.0))
        if scale > 0:
            self.defect = max(self.defect, float(np.max(np.abs(correction))) / scale)
        return values - correction

    def trilinear(self, a: Spectrum, b: Spectrum, c: Spectrum) -> Spectrum:
        pieces = self.operator.pieces(a, b, c, self._targets)
        self.truncated = pieces.truncated
        values = pieces.total
        if self._inverse is not None:
            values = values[self._inverse]
        return Spectrum(self.grid, self.project(values))

    def __call__(self, phi: Spectrum) -> Spectrum:
        return self.trilinear(phi, phi, phi)


@dataclass
class WkeTrajectory:
    """Spectra at the recorded kinetic times with per-step diagnostics."""

    grid: SpectrumGrid
    times: list[float] = field(default_factory=list)
    spectra: list[Spectrum] = field(default_factory=list)
    monitor: list[float] = field(default_factory=list)
    conserved: list[Conserved] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)
    truncated: float = 0.0
    defect: float = 0.0

    def record(self, tau: float, phi: Spectrum, s: Optional[float] = None) -> None:
        self.times.append(float(tau))
        self.spectra.append(phi)
        self.monitor.append(sobolev_monitor(phi, s))
        self.conserved.append(conserved_quantities(phi))

    @property
    def final(self) -> Spectrum:
        return self.spectra[-1]

    def drift(self, name: str) -> float:
        """Largest relative change of ``mass`` or ``energy`` over the run."""
        values = np.array([getattr(c, name) for c in self.conserved])
        ref = max(abs(values[0]), 1e-300)
        return float(np.max(np.abs(values - values[0])) / ref)

    def at(self, tau: float) -> Spectrum:
        """Spectrum at ``tau`` by linear interpolation between recorded times."""
        times = np.asarray(self.times)
        if tau < times[0] - 1e-12 or tau > times[-1] + 1e-12:
            raise ConfigError(f"Kinetic time {tau} outside the trajectory [0, {times[-1]}]")
        if len(times) == 1:
            return self.spectra[0]
        j = int(np.clip(np.searchsorted(times, tau), 1, len(times) - 1))
        t0, t1 = times[j - 1], times[j]
        w = 0.0 if t1 == t0 else (tau - t0) / (t1 - t0)
        return Spectrum(
            self.grid, (1 - w) * self.spectra[j - 1].values + w * self.spectra[j].values
        )


def solve(
    phi_in: Spectrum,
    tau_end: float,
    params: Optional[WkeConfig] = None,
    radial: bool = False,
    rhs: Optional[KineticRhs] = None,
    progress: Optional[Callable[[float], None]] = None,
) -> WkeTrajectory:
    """Classical RK4 from 0 to ``tau_end``.

    Raises:
        BlowupError: When the monitor exceeds ``blowup_factor`` times its initial
            value; ``partial`` holds the trajectory so far.
    """
    params = params or config.wke
    rhs = rhs or KineticRhs(phi_in.grid, params, radial)
    steps = max(int(np.ceil(tau_end / params.dtau)), 1)
    dt = tau_end / steps
    traj = WkeTrajectory(phi_in.grid)
    traj.record(0.0, phi_in, params.sobolev_index)
    ceiling = params.blowup_factor * traj.monitor[0]
    phi = phi_in
    logger.info(f"Solving the kinetic equation to tau={tau_end} in {steps} steps")
    for n in range(1, steps + 1):
        k1 = rhs(phi)
        k2 = rhs(phi + k1.scale(dt / 2))
        k3 = rhs(phi + k2.scale(dt / 2))
        k4 = rhs(phi + k3.scale(dt))
        phi = phi + (k1 + k2.scale(2) + k3.scale(2) + k4).scale(dt / 6)
        tau = n * dt
        traj.record(tau, phi, params.sobolev_index)
        traj.truncated = max(traj.truncated, rhs.truncated)
        traj.defect = max(traj.defect, rhs.defect)
        low = float(phi.values.min())
        if low < -params.positivity_tol:
            msg = f"negative spectrum {low:.3e} at tau={tau:.4f}"
            traj.flags.append(msg)
            logger.warning(msg)
        if traj.monitor[-1] > ceiling:
            raise BlowupError(f"Monitor crossed {ceiling:.3e} at tau={tau:.4f}", partial=traj)
        if progress is not None:
            progress(tau)
        logger.debug(f"tau={tau:.4f} monitor={traj.monitor[-1]:.6e}")
    return traj


@dataclass(frozen=True)
class TaylorIterates:
    """U_n(p + 1) for n = 0..N and their partial sums."""

    terms: list[Spectrum]

    @property
    def partial_sums(self) -> list[Spectrum]:
        out, acc = [], None
        for term in self.terms:
            acc = term if acc is None else acc + term
            out.append(acc)
        return out

    def at(self, n: int, fraction: float) -> Spectrum:
        """U_n(p + fraction); iterates are homogeneous of degree n in t - p."""
        return self.terms[n].scale(fraction**n)


def taylor_iterates(
    phi_p: Spectrum,
    order: int,
    delta: float,
    params: Optional[WkeConfig] = None,
    radial: bool = False,
) -> TaylorIterates:
    """U_0 = phi_p, U_n = delta * sum_{n1+n2+n3=n-1} int_p^t K(U_n1, U_n2, U_n3)."""
    rhs = KineticRhs(phi_p.grid, params, radial)
    terms = [phi_p]
    for n in range(1, order + 1):
        acc = Spectrum.zeros(phi_p.grid)
        for n1 in range(n):
            for n2 in range(n - n1):
                n3 = n - 1 - n1 - n2
                acc = acc + rhs.trilinear(terms[n1], terms[n2], terms[n3])
        terms.append(acc.scale(delta / n))
        logger.debug(f"Taylor iterate {n} done")
    return TaylorIterates(terms)


__all__ = [
    "Conserved",
    "KineticRhs",
    "TaylorIterates",
    "WkeTrajectory",
    "conserved_quantities",
    "solve",
    "sobolev_monitor",
    "taylor_iterates",
]
