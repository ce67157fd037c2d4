"""Pydantic models for tool results, table rows and run manifests.

Rows are flat so that a list of them turns into a CSV table without further
reshaping; manifests carry the configuration echo and seeds of a run.
"""

from enum import Enum
from typing import Any, Optional

from pydantic import BaseModel, Field


# Enums
class ObjectKind(str, Enum):
    """Combinatorial objects that can be enumerated."""

    TREES = "trees"
    COUPLES = "couples"
    GARDENS = "gardens"
    PAIRED = "paired"
    LAYERINGS = "layerings"


class InitialSpectrum(str, Enum):
    """Built-in initial spectra for kinetic and ensemble runs."""

    GAUSSIAN = "gaussian"
    RAYLEIGH_JEANS = "rayleigh_jeans"
    ZERO = "zero"


class RunStatus(str, Enum):
    SUCCESS = "success"
    HALTED = "halted"
    FAILED = "failed"


# Enumeration
class EnumeratedObject(BaseModel):
    """One enumerated tree, garden or layered couple."""

    order: int = Field(..., description="Number of branching nodes")
    index: int = Field(..., description="Position in the deterministic enumeration order")
    text: str = Field(..., description="Serialized object")
    layers: Optional[str] = Field(None, description="Layer of every node, per tree in preorder")


class CensusRow(BaseModel):
    """Number of objects of one order."""

    order: int
    count: int
    expected: Optional[int] = Field(None, description="Closed-form count when known")


# Molecules
class MoleculeStats(BaseModel):
    """Counting invariants of a molecule."""

    atoms: int = Field(..., description="V")
    bonds: int = Field(..., description="E")
    components: int = Field(..., description="F")
    circuit_rank: int = Field(..., description="E - V + F")
    degree_profile: dict[int, int] = Field(
        default_factory=dict, description="Number of atoms of each degree"
    )


class VineInfo(BaseModel):
    """A vine of a molecule and how the garden realizes it."""

    kind: str = Field(..., description="Vine type, I or II")
    atoms: list[int]
    joints: tuple[int, int]
    case: Optional[str] = Field(None, description="Core case for CL vines")
    core: bool = Field(False, description="Whether the vine can be twisted")


class CoupleAnalysis(BaseModel):
    """Regularity, molecule and block structure of a couple or paired tree."""

    text: str
    order: int
    irreducible: bool
    regular: bool
    regular_kind: Optional[str] = None
    dominant: Optional[bool] = None
    legal: Optional[bool] = Field(None, description="Every regular chain has a legal pairing")
    links: int = Field(0, description="Number of links of the regular decomposition")
    skeleton: str = Field(..., description="Prime skeleton garden")
    molecule: MoleculeStats
    vines: list[VineInfo] = Field(default_factory=list)
    blocks: int = 0
    ladders: int = 0


class VerificationReport(BaseModel):
    """Outcome of one exhaustive structural check."""

    check: str
    objects: int = Field(..., description="Number of objects examined")
    violations: list[str] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


# Numerics
class CollisionRow(BaseModel):
    """Collision operator pieces at one momentum."""

    k: list[float]
    gain: float = Field(..., description="K_0")
    k1: float
    k2: float
    k3: float
    total: float = Field(..., description="K_0 - K_1 + K_2 - K_3")


class WkeSnapshot(BaseModel):
    """Diagnostics recorded after one kinetic step."""

    tau: float
    monitor: float
    mass: float
    energy: float
    min_value: float


class ArrowResult(BaseModel):
    """Forward and backward iterate sums at one box size."""

    box_size: float
    forward_abs: float
    forward_real: float
    forward_imag: float
    backward_real: float
    backward_imag: float
    limit: float
    relative_error: float


class IdentityResult(BaseModel):
    """Order-two couple sum against the first kinetic iterate."""

    box_size: float
    couple_sum_real: float
    couple_sum_imag: float
    kinetic: float
    error: float
    relative_error: float


class ModeStatistic(BaseModel):
    """Ensemble estimate of E|a_k|^2 at one snapshot."""

    time: float
    k: list[float]
    mean_power: float
    stderr: float


class ComparisonResult(BaseModel):
    """Discrepancy between ensemble and kinetic prediction at one box size and time."""

    box_size: float
    time: float
    tau: float
    sup_error: float
    l2_error: float
    sup_mc_error: float
    l2_mc_error: float
    status: RunStatus = RunStatus.SUCCESS
    error: Optional[str] = None


# Manifests
class RunManifest(BaseModel):
    """Everything needed to reproduce a command's output files."""

    schema_version: str
    command: str
    status: RunStatus = RunStatus.SUCCESS
    parameters: dict[str, Any] = Field(default_factory=dict)
    config: dict[str, dict[str, Any]] = Field(default_factory=dict)
    seeds: dict[str, Any] = Field(default_factory=dict)
    diagnostics: dict[str, Any] = Field(default_factory=dict)
    outputs: list[str] = Field(default_factory=list)
    warnings: list[str] = Field(default_factory=list)
    error: Optional[str] = None
