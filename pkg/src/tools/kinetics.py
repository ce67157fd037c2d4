"""Kinetic-equation tools: collision evaluation, WKE solves and iterate-sum demos."""

import asyncio
import logging
from typing import Any, Callable, Optional, Sequence

import numpy as np

from ..config import WkeConfig, get_config
from ..core.arrow import GaussianSpectrum, arrow_of_time_demo
from ..core.collision import CollisionOperator
from ..core.comparison import first_order_identity
from ..core.spectrum import Spectrum, SpectrumGrid, rayleigh_jeans
from ..core.wke import WkeTrajectory, solve
from ..models.errors import BlowupError, ConfigError
from ..models.schemas import (
    ArrowResult,
    CollisionRow,
    IdentityResult,
    InitialSpectrum,
    WkeSnapshot,
)

logger = logging.getLogger(__name__)
config = get_config()

SpectrumFn = Callable[[np.ndarray], np.ndarray]


def spectrum_function(
    kind: InitialSpectrum = InitialSpectrum.GAUSSIAN,
    amplitude: float = 1.0,
    width: float = 1.0,
) -> SpectrumFn:
    """Built-in spectra with phi(0) = amplitude.

    The Rayleigh-Jeans spectrum is amplitude / (1 + |k|^2 / width^2).
    """
    kind = InitialSpectrum(kind)
    if amplitude < 0 or width <= 0:
        raise ConfigError("Spectrum amplitude must be non-negative and width positive")
    if kind == InitialSpectrum.GAUSSIAN:
        return GaussianSpectrum(amplitude, width)
    if kind == InitialSpectrum.ZERO:
        return lambda k: np.zeros(np.shape(k)[:-1])
    if amplitude == 0:
        raise ConfigError("A Rayleigh-Jeans spectrum needs a positive amplitude")
    return rayleigh_jeans(1.0 / amplitude, 1.0 / (amplitude * width * width))


def collision_table(
    momenta: Sequence[Sequence[float]],
    phi: SpectrumFn,
    params: Optional[WkeConfig] = None,
) -> list[CollisionRow]:
    """K_0..K_3 and K at each momentum."""
    k = np.atleast_2d(np.asarray(momenta, dtype=float))
    pieces = CollisionOperator(k.shape[-1], params).pieces(phi, phi, phi, k)
    if pieces.truncated:
        logger.warning(f"Quadrature weight {pieces.truncated:.3e} fell outside the grid")
    total = pieces.total
    return [
        CollisionRow(
            k=k[i].tolist(),
            gain=float(pieces.values[0, i]),
            k1=float(pieces.values[1, i]),
            k2=float(pieces.values[2, i]),
            k3=float(pieces.values[3, i]),
            total=float(total[i]),
        )
        for i in range(len(k))
    ]


def initial_grid_spectrum(
    dimension: int, phi: SpectrumFn, params: Optional[WkeConfig] = None
) -> Spectrum:
    params = params or config.wke
    grid = SpectrumGrid(dimension, params.box_half_width, params.spacing)
    return Spectrum.from_function(grid, phi)


def snapshots(traj: WkeTrajectory) -> list[WkeSnapshot]:
    return [
        WkeSnapshot(
            tau=tau,
            monitor=mon,
            mass=c.mass,
            energy=c.energy,
            min_value=float(phi.values.min()),
        )
        for tau, mon, c, phi in zip(traj.times, traj.monitor, traj.conserved, traj.spectra)
    ]


def wke_diagnostics(traj: WkeTrajectory) -> dict[str, Any]:
    """Conservation drift, monitor range and flags of a trajectory."""
    return {
        "steps": len(traj.times) - 1,
        "tau_final": traj.times[-1],
        "mass_drift": traj.drift("mass"),
        "energy_drift": traj.drift("energy"),
        "monitor_initial": traj.monitor[0],
        "monitor_final": traj.monitor[-1],
        "truncated_weight": traj.truncated,
        "conservation_defect": traj.defect,
        "flags": list(traj.flags),
    }


def arrow_table(
    box_sizes: Sequence[float],
    delta: float = 1.0,
    dimension: int = 3,
    gamma: float = 0.5,
    spectrum: Optional[GaussianSpectrum] = None,
) -> list[ArrowResult]:
    rows = arrow_of_time_demo(box_sizes, delta, spectrum or GaussianSpectrum(), dimension, gamma)
    return [
        ArrowResult(
            box_size=r.box_size,
            forward_abs=abs(r.forward),
            forward_real=r.forward.real,
            forward_imag=r.forward.imag,
            backward_real=r.backward.real,
            backward_imag=r.backward.imag,
            limit=r.limit,
            relative_error=r.relative_error,
        )
        for r in rows
    ]


def identity_table(
    box_sizes: Sequence[float],
    k: Sequence[float],
    spectrum: GaussianSpectrum,
    dimension: int,
    gamma: float,
    delta: float,
    t: float = 1.0,
    params: Optional[WkeConfig] = None,
) -> list[IdentityResult]:
    rows = first_order_identity(box_sizes, k, spectrum, dimension, gamma, delta, t, params)
    return [
        IdentityResult(
            box_size=r.box_size,
            couple_sum_real=r.couple_sum.real,
            couple_sum_imag=r.couple_sum.imag,
            kinetic=r.kinetic,
            error=r.error,
            relative_error=r.error / abs(r.kinetic) if r.kinetic else float("inf"),
        )
        for r in rows
    ]


# -- tools -------------------------------------------------------------------


async def evaluate_collision(
    momenta: list[list[float]],
    spectrum: str = "gaussian",
    amplitude: float = 1.0,
    width: float = 1.0,
) -> dict[str, Any]:
    """Evaluate the collision operator and its four pieces.

    Args:
        momenta: Momenta k, one per row, all of the same dimension
        spectrum: gaussian, rayleigh_jeans or zero
        amplitude: phi(0)
        width: Decay length of the spectrum

    Returns:
        Dictionary with K_0..K_3 and K at every momentum.
    """
    try:
        phi = spectrum_function(spectrum, amplitude, width)
        rows = await asyncio.to_thread(collision_table, momenta, phi)
        return {"status": "success", "rows": [r.model_dump() for r in rows]}
    except Exception as e:
        logger.error(f"Error evaluating collision operator: {e}")
        return {"status": "error", "error": str(e)}


async def run_wke(
    tau_end: float,
    dimension: int = 3,
    spectrum: str = "gaussian",
    amplitude: float = 1.0,
    width: float = 1.0,
    radial: bool = False,
) -> dict[str, Any]:
    """Solve the wave kinetic equation on the configured grid.

    Args:
        tau_end: Final kinetic time
        dimension: Spatial dimension
        spectrum: Initial spectrum kind
        amplitude: phi(0)
        width: Decay length of the spectrum
        radial: Evaluate once per |k| shell

    Returns:
        Dictionary with conservation drift, monitor values, flags and the
        per-step diagnostics. A blowup halt returns status "halted" with the
        diagnostics computed so far.
    """
    try:
        phi = initial_grid_spectrum(dimension, spectrum_function(spectrum, amplitude, width))
        traj = await asyncio.to_thread(solve, phi, tau_end, None, radial)
        return {
            "status": "success",
            **wke_diagnostics(traj),
            "snapshots": [s.model_dump() for s in snapshots(traj)],
        }
    except BlowupError as e:
        logger.warning(f"Kinetic solve halted: {e}")
        return {
            "status": "halted",
            "error": str(e),
            **wke_diagnostics(e.partial),
            "snapshots": [s.model_dump() for s in snapshots(e.partial)],
        }
    except Exception as e:
        logger.error(f"Error solving kinetic equation: {e}")
        return {"status": "error", "error": str(e)}


async def arrow_demo(
    box_sizes: Optional[list[float]] = None,
    delta: float = 1.0,
    dimension: int = 3,
) -> dict[str, Any]:
    """Forward and backward second-iterate sums for growing box sizes.

    Args:
        box_sizes: Torus sizes L (default 8, 16, 32)
        delta: Kinetic time step
        dimension: Spatial dimension, at least 2

    Returns:
        Dictionary with one row per L and the continuum limit of the backward sum.
    """
    try:
        sizes = box_sizes or [8, 16, 32]
        rows = await asyncio.to_thread(arrow_table, sizes, delta, dimension)
        forward = [r.forward_abs for r in rows]
        return {
            "status": "success",
            "rows": [r.model_dump() for r in rows],
            "forward_decreasing": all(b < a for a, b in zip(forward, forward[1:])),
            "limit": rows[-1].limit if rows else None,
        }
    except Exception as e:
        logger.error(f"Error running arrow demo: {e}")
        return {"status": "error", "error": str(e)}
