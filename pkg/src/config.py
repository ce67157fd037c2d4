"""Configuration management for the wave kinetics toolkit.

This module handles all configuration settings including enumeration caps,
diagram-evaluation thresholds, kinetic solver resolution, NLS ensemble
parameters and output locations.
"""

import os
from pathlib import Path

from dotenv import load_dotenv
from pydantic import Field
from pydantic_settings import BaseSettings

# Load environment variables from .env file
load_dotenv()


class EnumerationConfig(BaseSettings):
    """Caps guarding the combinatorial enumerations."""

    max_order: int = Field(
        default=6,
        description="Largest tree/garden order enumerated without an explicit override",
        ge=0,
        le=12,
    )
    max_width: int = Field(
        default=6,
        description="Largest garden width (number of trees) enumerated",
        ge=2,
        le=12,
    )
    max_canonical_depth: int = Field(
        default=3,
        description="Largest layer bound p accepted by the canonical layering enumerator",
        ge=0,
        le=8,
    )


class DiagramConfig(BaseSettings):
    """Diagram evaluation settings."""

    taylor_threshold: float = Field(
        default=1e-4,
        description="Below this |phase * interval| the exponential primitive uses a series",
        gt=0.0,
        le=1e-1,
    )
    taylor_degree: int = Field(
        default=8,
        description="Degree of the series branch of the exponential primitive",
        ge=2,
        le=20,
    )
    max_decorations: int = Field(
        default=2_000_000,
        description="Largest number of decorations enumerated for one diagram value",
        ge=1,
    )
    chebyshev_nodes: int = Field(
        default=32,
        description="Chebyshev nodes per time interval for Duhamel iterates",
        ge=4,
        le=256,
    )


class WkeConfig(BaseSettings):
    """Kinetic equation solver settings."""

    radial_nodes: int = Field(
        default=12,
        description="Gauss-Legendre nodes along |l1|",
        ge=2,
        le=256,
    )
    angular_nodes: int = Field(
        default=14,
        description="Angular nodes for l1 (Lebedev size in d=3, uniform angles in d=2)",
        ge=4,
        le=512,
    )
    plane_nodes: int = Field(
        default=10,
        description="Gauss-Legendre nodes per direction on the resonant hyperplane",
        ge=2,
        le=256,
    )
    l1_floor: float = Field(
        default=1e-8,
        description="Radial nodes with |l1| below this are excluded from quadrature",
        ge=0.0,
    )
    box_half_width: float = Field(
        default=3.0,
        description="Half width of the Cartesian k-box holding the spectrum",
        gt=0.0,
    )
    l1_radius: float = Field(
        default=3.0,
        description="Truncation radius of the l1 integral",
        gt=0.0,
    )
    plane_radius: float = Field(
        default=3.0,
        description="Half width of the square quadrature on the resonant hyperplane",
        gt=0.0,
    )
    chunk_size: int = Field(
        default=64,
        description="Momenta evaluated per vectorised collision batch",
        ge=1,
    )
    spacing: float = Field(
        default=0.5,
        description="Grid spacing h of the spectrum",
        gt=0.0,
    )
    dtau: float = Field(
        default=0.05,
        description="Kinetic time step",
        gt=0.0,
    )
    sobolev_index: float = Field(
        default=2.0,
        description="Index s of the blowup monitor norm",
    )
    blowup_factor: float = Field(
        default=1e6,
        description="Halt when the monitor exceeds this multiple of its initial value",
        gt=1.0,
    )
    positivity_tol: float = Field(
        default=1e-8,
        description="Largest tolerated negative spectrum value",
        ge=0.0,
    )
    conservative: bool = Field(
        default=True,
        description="Project collision values onto the discrete mass, momentum and energy laws",
    )


class SimConfig(BaseSettings):
    """NLS ensemble settings."""

    dimension: int = Field(default=3, description="Spatial dimension d", ge=1, le=4)
    box_size: float = Field(default=6.0, description="Torus side length L", gt=0.0)
    gamma: float = Field(default=0.5, description="Scaling law exponent", gt=0.0, lt=1.0)
    delta: float = Field(default=0.1, description="Rescaled time unit", gt=0.0)
    k_max: float = Field(
        default=1.0,
        description="Mode cutoff |k|_inf <= k_max on the lattice (1/L)Z^d",
        gt=0.0,
    )
    dt_factor: float = Field(
        default=0.1,
        description="Time step as a fraction of the fastest phase period",
        gt=0.0,
        le=1.0,
    )
    master_seed: int = Field(default=20240611, description="Master RNG seed", ge=0)
    ensemble_size: int = Field(default=200, description="Trajectories per ensemble", ge=2)
    mass_drift_tol: float = Field(
        default=1e-6,
        description="Relative mass drift above which a trajectory is invalid",
        gt=0.0,
    )
    max_invalid_fraction: float = Field(
        default=0.1,
        description="Halt the ensemble when more trajectories than this fraction are invalid",
        ge=0.0,
        le=1.0,
    )
    threads: int = Field(
        default=1,
        description="Worker threads for ensembles (results do not depend on it)",
        ge=1,
        le=256,
    )
    quadruples: list[tuple[int, int, int, int]] = Field(
        default_factory=list,
        description="Mode index quadruples (i, j, k, l) for kappa(a_i, conj a_j, a_k, conj a_l)",
    )


class GapConfig(BaseSettings):
    """Gap classification settings."""

    eta: float = Field(
        default=0.05,
        description="Small-gap threshold exponent: SG iff 0 < |r| <= L^(-gamma+eta)",
        gt=0.0,
        lt=1.0,
    )


class ServerConfig(BaseSettings):
    """MCP server configuration."""

    server_name: str = Field(
        default="wave-kinetics-toolkit",
        description="MCP server name",
    )
    server_version: str = Field(
        default="0.1.0",
        description="MCP server version",
    )
    log_level: str = Field(
        default="INFO",
        description="Logging level",
    )
    log_format: str = Field(
        default="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        description="Log format string",
    )


class OutputConfig(BaseSettings):
    """Output locations and schema versioning."""

    output_dir: Path = Field(
        default=Path("./runs"),
        description="Directory receiving CSV tables, snapshots and manifests",
    )
    schema_version: str = Field(
        default="1.0",
        description="Version stamped into every manifest",
    )


class Config:
    """Main configuration class combining all settings."""

    def __init__(self):
        """Initialize configuration from environment variables."""
        self.enumeration = EnumerationConfig()
        self.diagram = DiagramConfig()
        self.wke = WkeConfig()
        self.sim = SimConfig()
        self.gap = GapConfig()
        self.server = ServerConfig()
        self.output = OutputConfig()

    def _create_directories(self):
        """Create the output directory."""
        self.output.output_dir.mkdir(parents=True, exist_ok=True)

    def validate(self) -> list[str]:
        """Validate configuration and return list of warnings.

        Returns:
            List of validation warnings. Empty if all valid.
        """
        warnings = []

        out = self.output.output_dir
        if out.exists() and not os.access(out, os.W_OK):
            warnings.append(f"Output directory not writable: {out}")

        if self.wke.sobolev_index <= self.sim.dimension / 2 - 1:
            warnings.append(
                f"Sobolev index {self.wke.sobolev_index} should exceed d/2 - 1 "
                f"for d={self.sim.dimension}"
            )

        if self.sim.dimension < 3:
            warnings.append(
                "Kinetic-limit runs use d >= 3; d < 3 is suitable for algebraic checks only"
            )

        if self.enumeration.max_order > 6:
            warnings.append(
                f"Enumeration cap raised to order {self.enumeration.max_order}; "
                "counts grow combinatorially"
            )

        return warnings

    def __repr__(self) -> str:
        """Return string representation of configuration."""
        return (
            f"Config(\n"
            f"  server={self.server.server_name} v{self.server.server_version}\n"
            f"  caps=order<={self.enumeration.max_order}, width<={self.enumeration.max_width}\n"
            f"  sim=d{self.sim.dimension} L={self.sim.box_size} gamma={self.sim.gamma}\n"
            f"  wke=h{self.wke.spacing} dtau={self.wke.dtau}\n"
            f"  output_dir={self.output.output_dir}\n"
            f")"
        )

    def group_dump(self) -> dict[str, dict]:
        """Return every group as plain JSON-ready dictionaries."""
        return {
            name: getattr(self, name).model_dump(mode="json")
            for name in ("enumeration", "diagram", "wke", "sim", "gap", "output")
        }


# Global configuration instance
config = Config()


# Convenience function for getting config
def get_config() -> Config:
    """Get the global configuration instance.

    Returns:
        The global Config instance.
    """
    return config
