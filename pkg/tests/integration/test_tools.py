"""Integration tests for the MCP tool functions.

Each tool returns a status dictionary; failures are reported in the
dictionary rather than raised.
"""

import math

import pytest

from src.tools.combinatorics import (
    analyze_couple,
    compute_wedge_basis,
    enumerate_objects,
    verify_structures,
)
from src.tools.kinetics import arrow_demo, evaluate_collision
from src.tools.simulation import cumulants_from_moments, run_ensemble

MINI_COUPLE = "+(...) -(...) | 0-3,1-4,2-5"


@pytest.mark.asyncio
async def test_enumerate_trees():
    """Three trees of order two."""
    result = await enumerate_objects("trees", 2)
    assert result["status"] == "success"
    assert result["count"] == 3
    assert len(result["objects"]) == 3
    assert not result["truncated"]


@pytest.mark.asyncio
async def test_enumerate_limit():
    """The object list is cut at the limit, the count is not."""
    result = await enumerate_objects("trees", 3, limit=5)
    assert result["count"] == 12
    assert len(result["objects"]) == 5
    assert result["truncated"]


@pytest.mark.asyncio
async def test_enumerate_gardens_with_signature():
    """Gardens of order zero with two opposite roots: one pairing."""
    result = await enumerate_objects("gardens", 0, signature=[1, -1])
    assert result["status"] == "success"
    assert result["count"] == 1


@pytest.mark.asyncio
async def test_enumerate_errors():
    """Missing signatures and capped orders come back as errors."""
    missing = await enumerate_objects("gardens", 1)
    assert missing["status"] == "error"
    capped = await enumerate_objects("trees", 9)
    assert capped["status"] == "error"
    assert "order" in capped["error"].lower()


@pytest.mark.asyncio
async def test_analyze_mini_couple():
    """The mini couple is regular of type 1 with a two-atom molecule."""
    result = await analyze_couple(MINI_COUPLE)
    assert result["status"] == "success"
    assert result["regular"] is True
    assert result["regular_kind"] == "type1"
    assert result["molecule"]["atoms"] == 2
    assert result["molecule"]["circuit_rank"] == 2


@pytest.mark.asyncio
async def test_analyze_malformed():
    """Unparseable text is reported, not raised."""
    result = await analyze_couple("+(...) -(...)")
    assert result["status"] == "error"


@pytest.mark.asyncio
async def test_wedge_basis_rank():
    """Parallel vectors span one dimension."""
    result = await compute_wedge_basis([[1.0, 2.0, 0.0], [2.0, 4.0, 0.0], [0.0, 0.0, 0.0]])
    assert result["status"] == "success"
    assert result["rank"] == 1
    assert result["max_coefficient"] <= 1.0 + 1e-12


@pytest.mark.asyncio
async def test_verify_low_orders():
    """Every structural check passes through order two."""
    result = await verify_structures(2)
    assert result["status"] == "success"
    assert result["passed"]
    assert len(result["reports"]) == 4


@pytest.mark.asyncio
async def test_collision_at_origin():
    """For the unit Gaussian in three dimensions the gain term at k = 0 is pi^2 / 4."""
    result = await evaluate_collision([[0.0, 0.0, 0.0]])
    assert result["status"] == "success"
    row = result["rows"][0]
    assert row["gain"] == pytest.approx(math.pi**2 / 4, rel=1e-2)


@pytest.mark.asyncio
async def test_collision_zero_spectrum():
    """Zero data has zero collision integral."""
    result = await evaluate_collision([[0.5, 0.0, 0.0]], spectrum="zero")
    assert result["status"] == "success"
    assert result["rows"][0]["total"] == 0.0


@pytest.mark.asyncio
async def test_collision_bad_spectrum():
    """Unknown spectrum kinds are reported."""
    result = await evaluate_collision([[0.0, 0.0, 0.0]], spectrum="kolmogorov")
    assert result["status"] == "error"


@pytest.mark.asyncio
async def test_arrow_small_boxes():
    """One row per box size, all sharing the negative backward limit."""
    result = await arrow_demo([2.0, 3.0], dimension=2)
    assert result["status"] == "success"
    assert len(result["rows"]) == 2
    assert result["limit"] < 0


@pytest.mark.asyncio
async def test_cumulant_from_moments():
    """A centered variable has second cumulant equal to its second moment."""
    result = await cumulants_from_moments(indices=[0, 0], moments={"0": 0.0, "0,0": 2.0})
    assert result["status"] == "success"
    assert result["real"] == pytest.approx(2.0)
    assert result["imag"] == 0.0


@pytest.mark.asyncio
async def test_cumulant_missing_moment():
    """A missing moment is named in the error."""
    result = await cumulants_from_moments(indices=[0, 1], moments={"0": 0.0, "1": 0.0})
    assert result["status"] == "error"
    assert "0,1" in result["error"]


@pytest.mark.asyncio
async def test_ensemble_too_small():
    """Ensembles of one trajectory are refused."""
    result = await run_ensemble(ensemble_size=1)
    assert result["status"] == "error"


@pytest.mark.asyncio
async def test_health_check():
    """The server reports its caps and a health verdict."""
    from src.server import health_check

    result = health_check()
    assert result["status"] in ("healthy", "degraded")
    assert result["caps"]["max_order"] >= 0
    assert isinstance(result["warnings"], list)
