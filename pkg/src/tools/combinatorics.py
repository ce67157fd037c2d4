"""Enumeration, structure analysis and exhaustive checks for trees and gardens.

The plain functions return pydantic rows and are shared by the command-line
front end; the ``async`` tools wrap them for the MCP server and report
failures as status dictionaries.
"""

import asyncio
import logging
from collections.abc import Iterator
from typing import Any, Optional, Sequence

from ..config import get_config
from ..core.blocks import classify_block, find_blocks, find_ladders, find_vines, splice
from ..core.gardens import (
    Garden,
    enumerate_couples,
    enumerate_gardens,
    enumerate_paired_trees,
    is_irreducible,
)
from ..core.layering import (
    Layering,
    enumerate_canonical_layerings,
    enumerate_layerings,
    is_canonical,
)
from ..core.molecules import build_molecule, circuit_rank
from ..core.regular import RegularStructure, regular_decompose, skeleton
from ..core.trees import catalan3, enumerate_trees
from ..core.twists import classify_vine, twist, twist_with_map
from ..models.errors import ConfigError, NotABlockError
from ..models.schemas import (
    CensusRow,
    CoupleAnalysis,
    EnumeratedObject,
    MoleculeStats,
    ObjectKind,
    VerificationReport,
    VineInfo,
)
from ..utils.linalg import wedge_basis

logger = logging.getLogger(__name__)
config = get_config()


# -- enumeration -------------------------------------------------------------


def list_objects(
    kind: ObjectKind,
    order: int,
    signature: Optional[Sequence[int]] = None,
    depth: int = 1,
) -> list[EnumeratedObject]:
    """Every object of one kind and order, in enumeration order.

    ``signature`` is used for gardens; ``depth`` is the layer bound for
    canonical layerings of couples.

    Raises:
        CapExceededError: Order, width or depth over the configured caps.
        ConfigError: Gardens requested without a signature.
    """
    kind = ObjectKind(kind)
    if kind == ObjectKind.TREES:
        texts = [t.to_text() for t in enumerate_trees(order)]
    elif kind == ObjectKind.COUPLES:
        texts = [q.to_text() for q in enumerate_couples(order)]
    elif kind == ObjectKind.PAIRED:
        texts = [g.to_text() for g in enumerate_paired_trees(order)]
    elif kind == ObjectKind.GARDENS:
        if not signature:
            raise ConfigError("Enumerating gardens needs a signature such as +,-,+,-")
        texts = [g.to_text() for g in enumerate_gardens(order, signature)]
    else:
        rows = []
        for q in enumerate_couples(order):
            for lay in enumerate_canonical_layerings(q, depth):
                rows.append(
                    EnumeratedObject(
                        order=order,
                        index=len(rows),
                        text=q.to_text(),
                        layers=" ".join(",".join(map(str, v)) for v in lay.values),
                    )
                )
        logger.info(f"Enumerated {len(rows)} canonical layerings at order {order}")
        return rows
    logger.info(f"Enumerated {len(texts)} {kind.value} at order {order}")
    return [EnumeratedObject(order=order, index=i, text=t) for i, t in enumerate(texts)]


def census(
    kind: ObjectKind,
    max_order: int,
    signature: Optional[Sequence[int]] = None,
    depth: int = 1,
) -> list[CensusRow]:
    """Counts for orders 0..max_order; trees carry the closed-form count."""
    kind = ObjectKind(kind)
    rows = []
    for n in range(max_order + 1):
        count = len(list_objects(kind, n, signature, depth))
        expected = catalan3(n) if kind == ObjectKind.TREES else None
        rows.append(CensusRow(order=n, count=count, expected=expected))
    return rows


# -- analysis ----------------------------------------------------------------


def _chains_legal(s: RegularStructure) -> bool:
    return all(c.legal for c in s.chains) and all(_chains_legal(c) for c in s.children())


def analyze(text: str) -> CoupleAnalysis:
    """Regular structure, molecule counts, vines and blocks of a garden.

    Raises:
        InvalidGardenError: Malformed text.
    """
    g = Garden.from_text(text)
    m = build_molecule(g)
    structure = regular_decompose(g) if (g.is_couple or g.is_paired_tree) else None

    vines = []
    for vine in find_vines(m):
        try:
            real = classify_vine(g, m, vine)
            case, core = (real.case.value if real.case else None), real.is_core
        except NotABlockError:
            case, core = None, False
        vines.append(
            VineInfo(
                kind=vine.kind.value,
                atoms=sorted(vine.atoms),
                joints=vine.joints,
                case=case,
                core=core,
            )
        )

    return CoupleAnalysis(
        text=g.to_text(),
        order=g.order,
        irreducible=is_irreducible(g),
        regular=structure is not None,
        regular_kind=structure.kind.value if structure else None,
        dominant=structure.dominant if structure else None,
        legal=_chains_legal(structure) if structure else None,
        links=len(structure.links()) if structure else 0,
        skeleton=skeleton(g).garden.to_text(),
        molecule=MoleculeStats(
            atoms=m.V,
            bonds=m.E,
            components=m.F,
            circuit_rank=circuit_rank(m),
            degree_profile=m.degree_profile(),
        ),
        vines=vines,
        blocks=len(find_blocks(m)),
        ladders=len(find_ladders(m)),
    )


def molecule_graphml(text: str, path) -> str:
    """Write the molecule of a garden as GraphML and return the path."""
    return str(build_molecule(Garden.from_text(text)).write_graphml(path))


# -- exhaustive checks -------------------------------------------------------


def check_tree_census(max_order: int) -> VerificationReport:
    violations = []
    for row in census(ObjectKind.TREES, max_order):
        if row.count != row.expected:
            violations.append(f"order {row.order}: {row.count} trees, expected {row.expected}")
    return VerificationReport(check="tree_census", objects=max_order + 1, violations=violations)


def check_molecules(max_order: int) -> VerificationReport:
    """Atom, bond, component and degree counts of every couple molecule."""
    violations, seen = [], 0
    for n in range(1, max_order + 1):
        profiles = ({3: 2, 4: n - 2} if n > 2 else {3: 2}, {2: 1, 4: n - 1} if n > 1 else {2: 1})
        for q in enumerate_couples(n):
            seen += 1
            m = build_molecule(q)
            text = q.to_text()
            if (m.V, m.E) != (n, 2 * n - 1):
                violations.append(f"{text}: V={m.V}, E={m.E}")
            if not m.is_connected():
                violations.append(f"{text}: disconnected")
            if circuit_rank(m) != n:
                violations.append(f"{text}: circuit rank {circuit_rank(m)}")
            if m.degree_profile() not in profiles:
                violations.append(f"{text}: degree profile {m.degree_profile()}")
    logger.info(f"Checked {seen} couple molecules, {len(violations)} violations")
    return VerificationReport(check="molecules", objects=seen, violations=violations)


def check_canonicity(max_order: int, depth: int) -> VerificationReport:
    """The stacking construction and the criterion select the same layerings."""
    violations, seen = [], 0
    for n in range(max_order + 1):
        for q in enumerate_couples(n):
            for p in range(depth + 1):
                built = {lay.key() for lay in enumerate_canonical_layerings(q, p)}
                tested = set()
                for lay in enumerate_layerings(q, p):
                    seen += 1
                    if is_canonical(q, lay, p):
                        tested.add(lay.key())
                for key in built ^ tested:
                    side = "construction only" if key in built else "criterion only"
                    violations.append(f"{q.to_text()} p={p} {Layering(q, key).values}: {side}")
    logger.info(f"Checked {seen} layerings, {len(violations)} disagreements")
    return VerificationReport(check="canonicity", objects=seen, violations=violations)


def _core_vines(max_order: int) -> Iterator[tuple]:
    for n in range(2, max_order + 1):
        for q in enumerate_couples(n):
            m = build_molecule(q)
            for vine in find_vines(m):
                try:
                    real = classify_vine(q, m, vine)
                except NotABlockError:
                    continue
                if real.is_core:
                    yield q, m, vine, twist_with_map(q, vine, m)


def check_twists(max_order: int) -> VerificationReport:
    """Unit twists keep the molecule, flip only u2, commute with splicing and undo themselves."""
    violations, seen = [], 0
    for q, m, vine, result in _core_vines(max_order):
        seen += 1
        tag = f"{q.to_text()} joints {vine.joints}"
        out = result.garden
        m2 = build_molecule(out)
        if not m.isomorphic(m2, labels=False):
            violations.append(f"{tag}: molecule changed")
        if sorted(b.label.value for b in m.bonds) != sorted(b.label.value for b in m2.bonds):
            violations.append(f"{tag}: bond labels changed")
        u2 = result.realization.block.u2
        for old, new in result.ref_map.items():
            flipped = out.sign(new) == -q.sign(old)
            if flipped != (old == u2):
                violations.append(f"{tag}: sign of {old} handled wrongly")
        atom_of = {ref: v for v, ref in m2.node_of.items()}
        atoms = frozenset(atom_of[result.ref_map[m.node_of[v]]] for v in vine.atoms)
        vine2 = next((v for v in find_vines(m2) if v.atoms == atoms), None)
        if vine2 is None:
            violations.append(f"{tag}: vine lost")
            continue
        if twist(out, vine2, m2) != q:
            violations.append(f"{tag}: twist is not an involution")
        before = splice(q, classify_block(q, m, vine.atoms))
        after = splice(out, classify_block(out, m2, vine2.atoms))
        if before != after:
            violations.append(f"{tag}: splice does not commute")
    logger.info(f"Checked {seen} core vines, {len(violations)} violations")
    return VerificationReport(check="twists", objects=seen, violations=violations)


def verify_all(max_order: int = 3, depth: int = 1) -> list[VerificationReport]:
    """Run every structural check up to ``max_order``."""
    return [
        check_tree_census(max_order),
        check_molecules(max_order),
        check_canonicity(min(max_order, 2), depth),
        check_twists(max_order),
    ]


# -- tools -------------------------------------------------------------------


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
        Dictionary with the count and the first ``limit`` objects.

    Example:
        >>> result = await enumerate_objects("trees", 2)
        >>> result["count"]
        3
    """
    try:
        rows = await asyncio.to_thread(list_objects, kind, order, signature, depth)
        return {
            "status": "success",
            "kind": kind,
            "order": order,
            "count": len(rows),
            "objects": [r.model_dump(exclude_none=True) for r in rows[:limit]],
            "truncated": len(rows) > limit,
        }
    except Exception as e:
        logger.error(f"Error enumerating {kind} of order {order}: {e}")
        return {"status": "error", "error": str(e), "kind": kind, "order": order}


async def analyze_couple(text: str) -> dict[str, Any]:
    """Analyze the regularity, molecule and vines of a serialized couple.

    Args:
        text: Garden text, e.g. "+(...) -(...) | 0-3,1-4,2-5"

    Returns:
        Dictionary with regularity, molecule counts, vines and blocks.
    """
    try:
        result = await asyncio.to_thread(analyze, text)
        return {"status": "success", **result.model_dump(mode="json")}
    except Exception as e:
        logger.error(f"Error analyzing {text!r}: {e}")
        return {"status": "error", "error": str(e), "text": text}


async def compute_wedge_basis(vectors: list[list[float]]) -> dict[str, Any]:
    """Greedy maximal-volume basis of a finite set of vectors.

    Args:
        vectors: The vectors, one per row

    Returns:
        Dictionary with rank, selected indices and coefficient matrix.
    """
    try:
        result = wedge_basis(vectors)
        return {
            "status": "success",
            "rank": result.rank,
            "indices": list(result.indices),
            "coefficients": result.coefficients.tolist(),
            "max_coefficient": (
                float(abs(result.coefficients).max()) if result.coefficients.size else 0.0
            ),
        }
    except Exception as e:
        logger.error(f"Error computing wedge basis: {e}")
        return {"status": "error", "error": str(e)}


async def verify_structures(max_order: int = 3, depth: int = 1) -> dict[str, Any]:
    """Run the exhaustive tree, molecule, canonicity and twist checks.

    Args:
        max_order: Largest couple order examined
        depth: Layer bound for the canonicity comparison

    Returns:
        Dictionary with one report per check and an overall verdict.
    """
    try:
        reports = await asyncio.to_thread(verify_all, max_order, depth)
        return {
            "status": "success",
            "passed": all(r.passed for r in reports),
            "reports": [r.model_dump() for r in reports],
        }
    except Exception as e:
        logger.error(f"Error verifying structures: {e}")
        return {"status": "error", "error": str(e)}
