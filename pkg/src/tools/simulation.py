"""NLS ensemble tools: seeded ensembles, kinetic comparisons and cumulants."""

import asyncio
import logging
from dataclasses import asdict
from typing import Any, Optional, Sequence

import numpy as np

from ..config import SimConfig, WkeConfig, get_config
from ..core.comparison import compare_to_wke
from ..core.nls import EnsembleStats, InitialLaw, NlsSystem, ensemble_run
from ..core.spectrum import Spectrum, SpectrumGrid
from ..core.wick import cumulant, sample_cumulant
from ..core.wke import WkeTrajectory, solve
from ..models.errors import ConfigError, HaltError
from ..models.schemas import ComparisonResult, ModeStatistic, RunStatus
from .kinetics import SpectrumFn, spectrum_function

logger = logging.getLogger(__name__)
config = get_config()


def snapshot_times(tau_end: float, snapshots: int, delta: float) -> np.ndarray:
    """Rescaled times t = tau / delta for ``snapshots`` equal kinetic steps."""
    if tau_end < 0 or snapshots < 1:
        raise ConfigError("Need tau_end >= 0 and at least one snapshot")
    return np.linspace(0.0, tau_end, snapshots + 1) / delta


def run_statistics(
    phi: SpectrumFn,
    times: Sequence[float],
    sim: Optional[SimConfig] = None,
    law: InitialLaw = InitialLaw.GAUSSIAN,
    mode_pairs: Sequence[tuple[int, int]] = (),
) -> tuple[NlsSystem, EnsembleStats]:
    """Ensemble statistics for the system described by ``sim``.

    Raises:
        ConfigError: Ensemble smaller than two.
        HaltError: Too many invalid trajectories.
    """
    sim = sim or config.sim
    if sim.ensemble_size < 2:
        raise ConfigError("Ensembles need at least two trajectories for error bars")
    system = NlsSystem.from_config(sim)
    stats = ensemble_run(
        system,
        phi,
        times,
        size=sim.ensemble_size,
        master_seed=sim.master_seed,
        threads=sim.threads,
        law=law,
        dt_factor=sim.dt_factor,
        mode_pairs=mode_pairs,
        quadruples=sim.quadruples,
    )
    return system, stats


def mode_rows(stats: EnsembleStats, system: NlsSystem) -> list[ModeStatistic]:
    """One row per snapshot and mode."""
    momenta = system.grid.momenta
    return [
        ModeStatistic(
            time=float(t),
            k=momenta[i].tolist(),
            mean_power=float(stats.mean_power[j, i]),
            stderr=float(stats.stderr[j, i]),
        )
        for j, t in enumerate(stats.times)
        for i in range(len(momenta))
    ]


def ensemble_diagnostics(stats: EnsembleStats) -> dict[str, Any]:
    m0 = stats.mass[:, :1]
    drift = np.max(np.abs(stats.mass - m0) / np.maximum(m0, 1e-300), axis=1)
    out = {
        "size": stats.size,
        "valid": stats.valid,
        "invalid": stats.invalid,
        "max_mass_drift": float(drift.max()) if len(drift) else 0.0,
    }
    if stats.mode_pairs:
        out["mode_pairs"] = [list(p) for p in stats.mode_pairs]
        out["max_abs_pair_moment"] = float(np.max(np.abs(stats.pair_moments)))
        out["max_abs_cross_moment"] = float(np.max(np.abs(stats.cross_moments)))
    if stats.quadruples:
        out["cumulants"] = [
            {"quadruple": list(q), "real": float(c.real), "imag": float(c.imag)}
            for q, c in zip(stats.quadruples, stats.cumulants[-1])
        ]
        out["max_abs_cumulant"] = float(np.max(np.abs(stats.cumulants)))
    return out


def kinetic_trajectory(
    phi: SpectrumFn,
    tau_end: float,
    sim: SimConfig,
    params: Optional[WkeConfig] = None,
) -> WkeTrajectory:
    """Radial WKE solve on a grid that covers every lattice momentum."""
    params = params or config.wke
    half = max(params.box_half_width, sim.k_max)
    grid = SpectrumGrid(sim.dimension, half, params.spacing)
    return solve(Spectrum.from_function(grid, phi), tau_end, params, radial=True)


def kinetic_compare_rows(
    box_sizes: Sequence[float],
    tau_end: float,
    phi: SpectrumFn,
    sim: Optional[SimConfig] = None,
    params: Optional[WkeConfig] = None,
    snapshots: int = 1,
) -> list[ComparisonResult]:
    """Ensemble against kinetic prediction for each box size.

    The kinetic solution is computed once; a failure at one box size is
    recorded in its rows and the sweep moves on.
    """
    sim = sim or config.sim
    if sim.ensemble_size < 2:
        raise ConfigError("Ensembles need at least two trajectories for error bars")
    traj = kinetic_trajectory(phi, tau_end, sim, params)
    times = snapshot_times(tau_end, snapshots, sim.delta)
    rows = []
    for big_l in box_sizes:
        local = sim.model_copy(update={"box_size": float(big_l)})
        try:
            system, stats = run_statistics(phi, times, local)
            for r in compare_to_wke(stats, traj, system.grid, sim.delta):
                rows.append(ComparisonResult(box_size=float(big_l), **asdict(r)))
            logger.info(f"L={big_l}: sup discrepancy {rows[-1].sup_error:.4e}")
        except HaltError as e:
            logger.warning(f"L={big_l} halted: {e}")
            rows.append(_failed_row(big_l, RunStatus.HALTED, e))
        except Exception as e:
            logger.error(f"L={big_l} failed: {e}")
            rows.append(_failed_row(big_l, RunStatus.FAILED, e))
    return rows


def _failed_row(big_l: float, status: RunStatus, e: Exception) -> ComparisonResult:
    nan = float("nan")
    return ComparisonResult(
        box_size=float(big_l),
        time=nan,
        tau=nan,
        sup_error=nan,
        l2_error=nan,
        sup_mc_error=nan,
        l2_mc_error=nan,
        status=status,
        error=str(e),
    )


def moment_cumulant(indices: Sequence[int], moments: dict[str, complex]) -> complex:
    """Joint cumulant from moments keyed by sorted, comma-joined variable indices.

    Raises:
        ConfigError: A moment needed by the partition formula is missing.
    """

    def moment(block: tuple[int, ...]) -> complex:
        key = ",".join(str(i) for i in sorted(block))
        if key not in moments:
            raise ConfigError(f"Missing moment E[{key}]")
        return moments[key]

    return cumulant(list(indices), moment)


# -- tools -------------------------------------------------------------------


async def run_ensemble(
    tau_end: float = 0.1,
    snapshots: int = 1,
    spectrum: str = "gaussian",
    amplitude: float = 1.0,
    width: float = 1.0,
    ensemble_size: Optional[int] = None,
    box_size: Optional[float] = None,
    master_seed: Optional[int] = None,
    law: str = "gaussian",
    quadruples: Optional[list[list[int]]] = None,
) -> dict[str, Any]:
    """Run a seeded ensemble of truncated NLS trajectories.

    Args:
        tau_end: Final kinetic time; snapshots are taken at t = tau / delta
        snapshots: Number of equal kinetic steps between snapshots
        spectrum: Initial spectrum kind
        amplitude: phi(0)
        width: Decay length of the spectrum
        ensemble_size: Number of trajectories (configured default if None)
        box_size: Torus side L (configured default if None)
        master_seed: Master seed (configured default if None)
        law: gaussian or random_phase initial amplitudes
        quadruples: Mode index quadruples (i, j, k, l) for kappa(a_i, conj a_j, a_k, conj a_l)

    Returns:
        Dictionary with the ensemble diagnostics and mean power per snapshot.
    """
    try:
        update = {
            k: v
            for k, v in (
                ("ensemble_size", ensemble_size),
                ("box_size", box_size),
                ("master_seed", master_seed),
            )
            if v is not None
        }
        if quadruples is not None:
            update["quadruples"] = [tuple(q) for q in quadruples]
        sim = config.sim.model_copy(update=update)
        phi = spectrum_function(spectrum, amplitude, width)
        times = snapshot_times(tau_end, snapshots, sim.delta)
        system, stats = await asyncio.to_thread(
            run_statistics, phi, times, sim, InitialLaw(law)
        )
        return {
            "status": "success",
            "modes": len(system.grid),
            "times": stats.times.tolist(),
            "master_seed": stats.master_seed,
            **ensemble_diagnostics(stats),
            "total_mean_power": stats.mean_power.sum(axis=1).tolist(),
        }
    except HaltError as e:
        logger.warning(f"Ensemble halted: {e}")
        return {"status": "halted", "error": str(e)}
    except Exception as e:
        logger.error(f"Error running ensemble: {e}")
        return {"status": "error", "error": str(e)}


async def cumulants_from_moments(
    indices: Optional[list[int]] = None,
    moments: Optional[dict[str, float]] = None,
    samples: Optional[list[list[float]]] = None,
) -> dict[str, Any]:
    """Joint cumulant from given moments or from samples.

    Args:
        indices: Variables entering the cumulant, repeats allowed
        moments: E of products keyed by sorted comma-joined indices, e.g. {"0": 0, "0,1": 1}
        samples: Alternatively, joint samples with one column per variable

    Returns:
        Dictionary with the real and imaginary part of the cumulant.
    """
    try:
        if samples is not None:
            value = sample_cumulant(np.asarray(samples))
        elif indices is not None and moments is not None:
            value = moment_cumulant(indices, moments)
        else:
            raise ConfigError("Provide either samples or indices with moments")
        value = complex(value)
        return {"status": "success", "real": value.real, "imag": value.imag}
    except Exception as e:
        logger.error(f"Error computing cumulant: {e}")
        return {"status": "error", "error": str(e)}
