"""Truncated cubic NLS system on the lattice (1/L)Z^d.

The amplitudes a_k(t) solve da/dt = C_+(a, conj(a), a)(t) where

    C_z(f, g, h)_k(t) = coupling * (i z) * sum_{k1 - k2 + k3 = k} eps
                        * exp(z pi i delta L^(2 gamma) Omega t) f_k1 g_k2 h_k3

and every momentum stays on the grid. The resonance-weighted sum equals the
full convolution minus the two diagonal sums k2 = k1 and k2 = k3.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from itertools import product
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.signal import fftconvolve

from ..config import SimConfig, config
from ..models.errors import ConfigError, HaltError
from ..utils.lattice import LatticeGrid, Scaling
from .wick import sample_cumulant

logger = logging.getLogger(__name__)

SpectrumFn = Callable[[np.ndarray], np.ndarray]


class InitialLaw(str, Enum):
    """Distribution of the initial amplitudes."""

    GAUSSIAN = "gaussian"
    RANDOM_PHASE = "random_phase"


@dataclass(frozen=True)
class NlsSystem:
    grid: LatticeGrid
    scaling: Scaling

    def __post_init__(self):
        if self.grid.dimension != self.scaling.dimension:
            raise ConfigError("Grid and scaling disagree on the dimension")
        if abs(self.grid.box_size - self.scaling.box_size) > 1e-12:
            raise ConfigError("Grid and scaling disagree on the box size")

    @classmethod
    def from_config(cls, sim: Optional[SimConfig] = None) -> "NlsSystem":
        sim = sim or config.sim
        grid = LatticeGrid(sim.dimension, sim.box_size, sim.k_max)
        return cls(grid, Scaling(sim.dimension, sim.box_size, sim.gamma, sim.delta))

    @property
    def index_norms(self) -> np.ndarray:
        """|n|^2 per mode as exact integers."""
        return np.sum(self.grid.indices**2, axis=-1)

    def phase_angle(self, t: float, zeta: int = 1) -> float:
        """theta with exp(i theta |n|^2) the per-mode phase at time t."""
        return zeta * np.pi * self.scaling.phase * self.grid.spacing**2 * t

    @property
    def max_rate(self) -> float:
        """Bound on pi * delta L^(2 gamma) * |Omega| over the grid."""
        n = self.grid.cutoff
        omega = 8 * self.grid.dimension * n * n * self.grid.spacing**2
        return np.pi * self.scaling.phase * max(omega, 1e-300)

    # -- cubic term ---------------------------------------------------------

    def cubic(
        self, f: np.ndarray, g: np.ndarray, h: np.ndarray, t: float, zeta: int = 1
    ) -> np.ndarray:
        """C_zeta(f, g, h)(t) by FFT convolution on the mode cube."""
        grid = self.grid
        n = grid.cutoff
        phase = np.exp(1j * self.phase_angle(t, zeta) * self.index_norms)
        ff = grid.to_cube(np.asarray(f) * phase)
        gg = grid.to_cube(np.asarray(g) * np.conj(phase))
        hh = grid.to_cube(np.asarray(h) * phase)
        full = fftconvolve(fftconvolve(ff, hh), np.flip(gg))
        window = tuple(slice(2 * n, 4 * n + 1) for _ in range(grid.dimension))
        s = grid.from_cube(full[window])
        a = np.sum(np.asarray(f) * np.asarray(g)) * grid.from_cube(hh)
        b = grid.from_cube(ff) * np.sum(np.asarray(g) * np.asarray(h))
        total = np.conj(phase) * (s - a - b)
        return self.scaling.coupling * 1j * zeta * total

    def cubic_direct(
        self, f: np.ndarray, g: np.ndarray, h: np.ndarray, t: float, zeta: int = 1
    ) -> np.ndarray:
        """C_zeta(f, g, h)(t) by explicit summation over quadruples."""
        grid = self.grid
        idx = grid.indices
        sq = self.index_norms
        theta = self.phase_angle(t, zeta)
        out = np.zeros(len(grid), dtype=complex)
        for i1, i3 in product(range(len(grid)), repeat=2):
            for k in range(len(grid)):
                m = idx[i1] + idx[i3] - idx[k]
                if not grid.contains(m):
                    continue
                i2 = grid.index_of(m)
                if i2 == i1 and i2 == i3:
                    eps = -1
                elif i2 == i1 or i2 == i3:
                    continue
                else:
                    eps = 1
                omega = sq[i1] - sq[i2] + sq[i3] - sq[k]
                out[k] += eps * np.exp(1j * theta * omega) * f[i1] * g[i2] * h[i3]
        return self.scaling.coupling * 1j * zeta * out

    def rhs(self, a: np.ndarray, t: float) -> np.ndarray:
        return self.cubic(a, np.conj(a), a, t)

    # -- time stepping ------------------------------------------------------

    def step_size(
        self, t_end: float, dt_factor: Optional[float] = None, a: Optional[np.ndarray] = None
    ) -> tuple[float, int]:
        """Step resolving the fastest phase (and nonlinear rate of ``a``) and the step count."""
        factor = config.sim.dt_factor if dt_factor is None else dt_factor
        rate = self.max_rate
        if a is not None:
            rate = max(rate, 3 * self.scaling.coupling * float(np.sum(np.abs(a))) ** 2)
        dt = factor * 2 * np.pi / rate
        steps = max(int(np.ceil(t_end / dt)), 1)
        return t_end / steps, steps

    def integrate(
        self,
        a0: np.ndarray,
        times: Sequence[float],
        dt_factor: Optional[float] = None,
    ) -> np.ndarray:
        """Classical RK4 from t=0, returning snapshots ``(len(times), M)``."""
        times = np.asarray(times, dtype=float)
        if np.any(np.diff(times) < 0) or (len(times) and times[0] < 0):
            raise ConfigError("Snapshot times must be non-negative and sorted")
        out = np.zeros((len(times), len(self.grid)), dtype=complex)
        a = np.asarray(a0, dtype=complex).copy()
        t = 0.0
        for j, target in enumerate(times):
            if target > t:
                dt, steps = self.step_size(target - t, dt_factor, a)
                for _ in range(steps):
                    k1 = self.rhs(a, t)
                    k2 = self.rhs(a + 0.5 * dt * k1, t + 0.5 * dt)
                    k3 = self.rhs(a + 0.5 * dt * k2, t + 0.5 * dt)
                    k4 = self.rhs(a + dt * k3, t + dt)
                    a = a + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
                    t += dt
                t = target
            out[j] = a
        return out

    def integrate_reference(self, a0: np.ndarray, t_end: float, rtol: float = 1e-12):
        """High-accuracy DOP853 solution at ``t_end``."""
        m = len(self.grid)

        def fun(t, y):
            d = self.rhs(y[:m] + 1j * y[m:], t)
            return np.concatenate([d.real, d.imag])

        a0 = np.asarray(a0, dtype=complex)
        sol = solve_ivp(
            fun,
            (0.0, t_end),
            np.concatenate([a0.real, a0.imag]),
            method="DOP853",
            rtol=rtol,
            atol=rtol * 1e-2,
        )
        y = sol.y[:, -1]
        return y[:m] + 1j * y[m:]


def mass(a: np.ndarray) -> float:
    return float(np.sum(np.abs(a) ** 2))


def sample_initial(
    grid: LatticeGrid,
    phi_in: SpectrumFn,
    rng: np.random.Generator,
    law: InitialLaw = InitialLaw.GAUSSIAN,
) -> np.ndarray:
    """Initial amplitudes with E|a_k|^2 = phi_in(k)."""
    phi = np.asarray(grid.evaluate(phi_in), dtype=float)
    if np.any(phi < 0):
        raise ConfigError("Initial spectrum must be non-negative on the grid")
    amp = np.sqrt(phi)
    m = len(grid)
    if law == InitialLaw.GAUSSIAN:
        eta = (rng.standard_normal(m) + 1j * rng.standard_normal(m)) / np.sqrt(2)
    else:
        eta = np.exp(2j * np.pi * rng.random(m))
    return amp * eta


# -- ensembles --------------------------------------------------------------


@dataclass
class EnsembleStats:
    """Monte Carlo statistics of |a_k(t)|^2 at the snapshot times.

    ``mass`` and ``kept`` cover valid trajectories only; ``cumulants[j, q]``
    is kappa(a_i, conj a_j, a_k, conj a_l) for ``quadruples[q] = (i, j, k, l)``.
    """

    times: np.ndarray
    mean_power: np.ndarray
    stderr: np.ndarray
    mass: np.ndarray
    size: int
    invalid: int = 0
    master_seed: int = 0
    kept: tuple[int, ...] = ()
    mode_pairs: tuple[tuple[int, int], ...] = ()
    pair_moments: Optional[np.ndarray] = None
    cross_moments: Optional[np.ndarray] = None
    quadruples: tuple[tuple[int, int, int, int], ...] = ()
    cumulants: Optional[np.ndarray] = None

    @property
    def valid(self) -> int:
        return self.size - self.invalid


def trajectory_seeds(master_seed: int, size: int) -> list[np.random.SeedSequence]:
    """Independent per-trajectory streams derived from one master seed."""
    return np.random.SeedSequence(master_seed).spawn(size)


def trajectory_rng(seq: np.random.SeedSequence) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seq))


def quadruple_cumulants(
    paths: np.ndarray, quadruples: Sequence[tuple[int, int, int, int]]
) -> np.ndarray:
    """kappa(a_i, conj a_j, a_k, conj a_l) per snapshot from ``paths`` ``(n, T, M)``."""
    out = np.zeros((paths.shape[1], len(quadruples)), dtype=complex)
    for q, (i, j, k, m) in enumerate(quadruples):
        for s in range(paths.shape[1]):
            snap = paths[:, s]
            columns = [snap[:, i], np.conj(snap[:, j]), snap[:, k], np.conj(snap[:, m])]
            out[s, q] = sample_cumulant(np.stack(columns, axis=1))
    return out


def ensemble_run(
    system: NlsSystem,
    phi_in: SpectrumFn,
    times: Sequence[float],
    size: Optional[int] = None,
    master_seed: Optional[int] = None,
    threads: Optional[int] = None,
    law: InitialLaw = InitialLaw.GAUSSIAN,
    dt_factor: Optional[float] = None,
    mode_pairs: Sequence[tuple[int, int]] = (),
    quadruples: Optional[Sequence[tuple[int, int, int, int]]] = None,
) -> EnsembleStats:
    """Integrate an ensemble and collect moments; results do not depend on ``threads``.

    ``mode_pairs`` lists mode index pairs (i, j) for which E(a_i a_j) and
    E(a_i conj a_j) are estimated. ``quadruples`` defaults to the configured
    cumulant quadruples.

    Raises:
        ConfigError: If a mode pair or quadruple names a mode outside the grid.
        HaltError: If more than the configured fraction of trajectories is invalid.
    """
    sim = config.sim
    size = sim.ensemble_size if size is None else size
    master_seed = sim.master_seed if master_seed is None else master_seed
    threads = sim.threads if threads is None else threads
    quadruples = sim.quadruples if quadruples is None else quadruples
    mode_pairs = tuple((int(i), int(j)) for i, j in mode_pairs)
    quadruples = tuple(tuple(int(x) for x in q) for q in quadruples)
    modes = len(system.grid)
    for q in (*mode_pairs, *quadruples):
        if any(x < 0 or x >= modes for x in q):
            raise ConfigError(f"Mode indices {q} outside 0..{modes - 1}")
    times = np.asarray(times, dtype=float)
    seqs = trajectory_seeds(master_seed, size)

    def run(seq: np.random.SeedSequence):
        a0 = sample_initial(system.grid, phi_in, trajectory_rng(seq), law)
        path = system.integrate(a0, times, dt_factor)
        m0 = mass(a0)
        masses = np.sum(np.abs(path) ** 2, axis=-1)
        drift = np.max(np.abs(masses - m0)) / max(m0, 1e-300)
        ok = bool(np.all(np.isfinite(path))) and drift <= sim.mass_drift_tol
        return path, masses, ok

    logger.info(f"Running {size} trajectories on {modes} modes with {threads} threads")
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, seqs))
    else:
        results = [run(s) for s in seqs]

    kept = tuple(n for n, (_, _, ok) in enumerate(results) if ok)
    invalid = size - len(kept)
    if invalid > sim.max_invalid_fraction * size or len(kept) < 2:
        raise HaltError(f"{invalid} of {size} trajectories are invalid")
    if invalid:
        logger.warning(f"Dropping {invalid} invalid trajectories")
    paths = np.stack([results[n][0] for n in kept])
    power = np.abs(paths) ** 2
    pair = cross = None
    if mode_pairs:
        first = paths[:, :, [i for i, _ in mode_pairs]]
        other = paths[:, :, [j for _, j in mode_pairs]]
        pair = (first * other).mean(axis=0)
        cross = (first * np.conj(other)).mean(axis=0)
    return EnsembleStats(
        times=times,
        mean_power=power.mean(axis=0),
        stderr=power.std(axis=0, ddof=1) / np.sqrt(len(power)),
        mass=np.stack([results[n][1] for n in kept]),
        size=size,
        invalid=invalid,
        master_seed=master_seed,
        kept=kept,
        mode_pairs=mode_pairs,
        pair_moments=pair,
        cross_moments=cross,
        quadruples=quadruples,
        cumulants=quadruple_cumulants(paths, quadruples),
    )


__all__ = [
    "EnsembleStats",
    "InitialLaw",
    "NlsSystem",
    "ensemble_run",
    "mass",
    "quadruple_cumulants",
    "sample_initial",
    "trajectory_rng",
    "trajectory_seeds",
]
