"""MCP server for the wave kinetics toolkit.

This module initializes the FastMCP server and registers the enumeration,
molecule, kinetic-equation and ensemble tools.
"""

import logging
import sys
from typing import Any, Optional

from mcp.server.fastmcp import FastMCP

from .config import get_config

# Initialize configuration
config = get_config()

# Set up logging
logging.basicConfig(
    level=getattr(logging, config.server.log_level),
    format=config.server.log_format,
)
logger = logging.getLogger(__name__)

# Initialize FastMCP server
mcp = FastMCP(name=config.server.server_name)


from .tools import combinatorics, kinetics, simulation  # noqa: E402


@mcp.tool()
def health_check() -> dict[str, Any]:
    """Check server health and configuration status.

    Returns:
        Dictionary containing health status and configuration info.
    """
    warnings = config.validate()

    return {
        "status": "healthy" if not warnings else "degraded",
        "server": {
            "name": config.server.server_name,
            "version": config.server.server_version,
        },
        "caps": {
            "max_order": config.enumeration.max_order,
            "max_width": config.enumeration.max_width,
            "max_canonical_depth": config.enumeration.max_canonical_depth,
            "max_decorations": config.diagram.max_decorations,
        },
        "simulation": {
            "dimension": config.sim.dimension,
            "box_size": config.sim.box_size,
            "ensemble_size": config.sim.ensemble_size,
            "threads": config.sim.threads,
        },
        "output": {
            "directory": str(config.output.output_dir),
            "schema_version": config.output.schema_version,
        },
        "warnings": warnings,
    }


# ============================================================================
# Combinatorics
# ============================================================================


@mcp.tool()
async def enumerate_objects(
    kind: str,
    order: int,
    signature: Optional[list[int]] = None,
    depth: int = 1,
    limit: int = 100,
) -> dict[str, Any]:
    """Enumerate trees, couples, gardens, paired trees or canonical layerings.

    Args:
        kind: One of trees, couples, gardens, paired, layerings
        order: Number of branching nodes
        signature: Root signs for gardens, e.g. [1, -1, 1, -1]
        depth: Layer bound for canonical layerings
        limit: Maximum number of serialized objects returned

    Returns:
        Dictionary with the count and the serialized objects.
    """
    return await combinatorics.enumerate_objects(kind, order, signature, depth, limit)


@mcp.tool()
async def analyze_couple(text: str) -> dict[str, Any]:
    """Analyze the regularity, molecule and vines of a couple.

    Args:
        text: Garden text, e.g. "+(...) -(...) | 0-3,1-4,2-5"

    Returns:
        Dictionary with regularity, molecule counts, vines and blocks.
    """
    return await combinatorics.analyze_couple(text)


@mcp.tool()
async def wedge_basis(vectors: list[list[float]]) -> dict[str, Any]:
    """Greedy maximal-volume basis of a set of vectors with bounded coefficients.

    Args:
        vectors: The vectors, one per row

    Returns:
        Dictionary with rank, selected indices and coefficients.
    """
    return await combinatorics.compute_wedge_basis(vectors)


@mcp.tool()
async def verify_structures(max_order: int = 3, depth: int = 1) -> dict[str, Any]:
    """Run the exhaustive tree, molecule, canonicity and twist checks.

    Args:
        max_order: Largest couple order examined
        depth: Layer bound for the canonicity comparison

    Returns:
        Dictionary with one report per check.
    """
    return await combinatorics.verify_structures(max_order, depth)


# ============================================================================
# Kinetic equation
# ============================================================================


@mcp.tool()
async def evaluate_collision(
    momenta: list[list[float]],
    spectrum: str = "gaussian",
    amplitude: float = 1.0,
    width: float = 1.0,
) -> dict[str, Any]:
    """Evaluate the collision operator K(phi, phi, phi) and its pieces.

    Args:
        momenta: Momenta k, one per row
        spectrum: gaussian, rayleigh_jeans or zero
        amplitude: phi(0)
        width: Decay length of the spectrum

    Returns:
        Dictionary with K_0..K_3 and K at every momentum.
    """
    return await kinetics.evaluate_collision(momenta, spectrum, amplitude, width)


@mcp.tool()
async def run_wke(
    tau_end: float,
    dimension: int = 3,
    spectrum: str = "gaussian",
    amplitude: float = 1.0,
    width: float = 1.0,
    radial: bool = False,
) -> dict[str, Any]:
    """Solve the wave kinetic equation up to kinetic time tau_end.

    Args:
        tau_end: Final kinetic time
        dimension: Spatial dimension
        spectrum: Initial spectrum kind
        amplitude: phi(0)
        width: Decay length of the spectrum
        radial: Evaluate once per |k| shell

    Returns:
        Dictionary with conservation drift, monitor and per-step diagnostics.
    """
    return await kinetics.run_wke(tau_end, dimension, spectrum, amplitude, width, radial)


@mcp.tool()
async def arrow_demo(
    box_sizes: Optional[list[float]] = None,
    delta: float = 1.0,
    dimension: int = 3,
) -> dict[str, Any]:
    """Forward and backward second-iterate sums for growing box sizes.

    Args:
        box_sizes: Torus sizes L (default 8, 16, 32)
        delta: Length of each time interval
        dimension: Spatial dimension

    Returns:
        Dictionary with one row per L and the limit of the backward sum.
    """
    return await kinetics.arrow_demo(box_sizes, delta, dimension)


# ============================================================================
# NLS ensembles
# ============================================================================


@mcp.tool()
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
        tau_end: Final kinetic time
        snapshots: Number of equal kinetic steps between snapshots
        spectrum: Initial spectrum kind
        amplitude: phi(0)
        width: Decay length of the spectrum
        ensemble_size: Number of trajectories
        box_size: Torus side L
        master_seed: Master seed
        law: gaussian or random_phase
        quadruples: Mode index quadruples i,j,k,l for fourth cumulants

    Returns:
        Dictionary with ensemble diagnostics.
    """
    return await simulation.run_ensemble(
        tau_end,
        snapshots,
        spectrum,
        amplitude,
        width,
        ensemble_size,
        box_size,
        master_seed,
        law,
        quadruples,
    )


@mcp.tool()
async def cumulants_from_moments(
    indices: Optional[list[int]] = None,
    moments: Optional[dict[str, float]] = None,
    samples: Optional[list[list[float]]] = None,
) -> dict[str, Any]:
    """Joint cumulant from moments or from joint samples.

    Args:
        indices: Variables entering the cumulant, repeats allowed
        moments: Moments keyed by sorted comma-joined indices
        samples: Joint samples, one column per variable

    Returns:
        Dictionary with the cumulant.
    """
    return await simulation.cumulants_from_moments(indices, moments, samples)


def main():
    """Run the MCP server.

    This is the main entry point for the server.
    """
    logger.info(f"Starting {config.server.server_name} v{config.server.server_version}")

    # Validate configuration
    warnings = config.validate()
    if warnings:
        logger.warning("Configuration warnings:")
        for warning in warnings:
            logger.warning(f"  - {warning}")

    # Log configuration
    logger.info(f"Enumeration caps: order {config.enumeration.max_order}")
    logger.info(f"Simulation: d={config.sim.dimension}, L={config.sim.box_size}")
    logger.info(f"Output directory: {config.output.output_dir}")

    # Run the server
    try:
        mcp.run()
    except KeyboardInterrupt:
        logger.info("Server shutdown requested")
    except Exception as e:
        logger.error(f"Server error: {e}", exc_info=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
