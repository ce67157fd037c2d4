"""Blocks, ladders and vines inside molecules, and their realization in gardens.

A block is a connected atom group in which every atom has degree 4 inside
the group except two joints, each with one incoming and one outgoing bond
inside the group. In a garden molecule every block is realized either as a
CL block (one joint descends from the other through a fully paired region)
or as a CN block; CL blocks can be spliced away.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import Iterable, Iterator, Optional

import numpy as np

from ..models.errors import NotABlockError
from .forest import Forest
from .gardens import Garden
from .molecules import Molecule, MoleculeDecoration
from .trees import NodeRef

logger = logging.getLogger(__name__)


class BlockKind(str, Enum):
    CL = "CL"
    CN = "CN"


class VineKind(str, Enum):
    I = "I"  # noqa: E741
    II = "II"


@dataclass(frozen=True)
class Block:
    atoms: frozenset[int]
    joints: tuple[int, int]
    sigma: int


@dataclass(frozen=True)
class BlockRealization:
    """Garden-side description of a block.

    For CL blocks ``u2`` descends from ``u1``; ``u21``/``u22`` are the plus
    and minus children of ``u2`` cut off from the block and ``u23`` its third
    child. For CN blocks ``u21`` is the child of ``u2`` with the same sign
    and ``u22``/``u23`` are None. ``nodes`` is the block region of the garden.
    """

    kind: BlockKind
    joints: tuple[int, int]
    u1: NodeRef
    u2: NodeRef
    u11: NodeRef
    u21: NodeRef
    u22: Optional[NodeRef]
    u23: Optional[NodeRef]
    nodes: frozenset[NodeRef]


@dataclass(frozen=True)
class Ladder:
    """Double-bond rungs joined by opposite-direction rail pairs.

    ``rails[i]`` holds the two bond ids between rung i and rung i + 1, the
    first pointing down the ladder (tail in rung i).
    """

    rungs: tuple[tuple[int, int], ...]
    rails: tuple[tuple[int, int], ...]

    @property
    def length(self) -> int:
        return len(self.rungs) - 1

    @property
    def atoms(self) -> frozenset[int]:
        return frozenset(v for r in self.rungs for v in r)


@dataclass(frozen=True)
class Vine:
    """Vine (I): an opposite-direction double bond. Vine (II): a rung chain between two joints."""

    kind: VineKind
    atoms: frozenset[int]
    joints: tuple[int, int]
    rungs: tuple[tuple[int, int], ...] = ()

    @property
    def block(self) -> Block:
        return Block(self.atoms, self.joints, 2 if self.kind == VineKind.I else 0)


# -- blocks ----------------------------------------------------------------


def block_joints(m: Molecule, atoms: Iterable[int]) -> tuple[int, int]:
    """Joints of a block, smaller id first.

    Raises:
        NotABlockError: ``atoms`` is not a connected block of ``m``.
    """
    group = set(atoms)
    if len(group) < 2 or not group <= set(m.atoms):
        raise NotABlockError(f"Atom group {sorted(group)} is not a block")
    joints = []
    for v in sorted(group):
        out, inn = m.inner_degrees(group, v)
        if (out, inn) == (1, 1):
            joints.append(v)
        elif out + inn != 4:
            raise NotABlockError(f"Atom {v} has degree {out + inn} inside the group")
    if len(joints) != 2:
        raise NotABlockError(f"Atom group {sorted(group)} has {len(joints)} joints")
    if not m.is_connected(group):
        raise NotABlockError(f"Atom group {sorted(group)} is not connected")
    return joints[0], joints[1]


def is_block(m: Molecule, atoms: Iterable[int]) -> bool:
    try:
        block_joints(m, atoms)
    except NotABlockError:
        return False
    return True


def make_block(m: Molecule, atoms: Iterable[int]) -> Block:
    group = frozenset(atoms)
    v1, v2 = block_joints(m, group)
    return Block(group, (v1, v2), len(m.between(v1, v2)))


def find_blocks(m: Molecule, max_size: Optional[int] = None) -> list[Block]:
    """Every block of ``m`` with at most ``max_size`` atoms, by size then atoms."""
    top = m.V if max_size is None else min(max_size, m.V)
    out = []
    for size in range(2, top + 1):
        for group in combinations(m.atoms, size):
            if is_block(m, group):
                out.append(make_block(m, group))
    logger.debug(f"{len(out)} blocks among {m.V} atoms")
    return out


def concatenate(m: Molecule, first: Block, second: Block) -> Block:
    """Union of two blocks sharing exactly one joint and no other atom.

    Raises:
        NotABlockError: The blocks do not meet in one joint, or the union is a hyper-block.
    """
    common = first.atoms & second.atoms
    if len(common) != 1 or not common <= set(first.joints) & set(second.joints):
        raise NotABlockError("Blocks must share one joint and no other atom")
    return make_block(m, first.atoms | second.atoms)


def _closed(g: Garden, nodes: set[NodeRef]) -> bool:
    return all(g.partner(x) in nodes for x in nodes if g.is_leaf(x))


def _region(g: Garden, top: NodeRef, cut: Iterable[NodeRef]) -> set[NodeRef]:
    removed = {x for c in cut for x in g.descendants(c)}
    return {x for x in g.descendants(top) if x not in removed}


def _as_cl(g: Garden, u1: NodeRef, u2: NodeRef, want: set[NodeRef]) -> Optional[tuple]:
    if u1 == u2 or not g.is_descendant(u2, u1):
        return None
    kids = g.children(u2)
    for u11 in g.children(u1):
        if g.sign(u11) != g.sign(u1) or g.is_descendant(u2, u11):
            continue
        for u21 in (c for c in kids if g.sign(c) > 0):
            for u22 in (c for c in kids if g.sign(c) < 0):
                nodes = _region(g, u1, (u11, u21, u22))
                if not _closed(g, nodes):
                    continue
                if {x for x in nodes if not g.is_leaf(x)} != want:
                    continue
                u23 = next(c for c in kids if c not in (u21, u22))
                return u11, u21, u22, u23, frozenset(nodes)
    return None


def _as_cn(g: Garden, u1: NodeRef, u2: NodeRef, want: set[NodeRef]) -> Optional[tuple]:
    for u11 in g.children(u1):
        if g.sign(u11) != g.sign(u1):
            continue
        for u21 in g.children(u2):
            if g.sign(u21) != g.sign(u2):
                continue
            if g.is_descendant(u2, u1) and not g.is_descendant(u2, u11):
                continue
            if g.is_descendant(u1, u2) and not g.is_descendant(u1, u21):
                continue
            nodes = _region(g, u1, (u11,)) | _region(g, u2, (u21,))
            if not _closed(g, nodes):
                continue
            if {x for x in nodes if not g.is_leaf(x)} != want:
                continue
            return u11, u21, frozenset(nodes)
    return None


def classify_block(g: Garden, m: Molecule, atoms: Iterable[int]) -> BlockRealization:
    """Decide whether a block of ``m = build_molecule(g)`` is CL or CN.

    Raises:
        NotABlockError: ``atoms`` is not a block, or no realization fits.
    """
    atoms = frozenset(atoms)
    a, b = block_joints(m, atoms)
    want = {m.node_of[v] for v in atoms}
    for v1, v2 in ((a, b), (b, a)):
        u1, u2 = m.node_of[v1], m.node_of[v2]
        found = _as_cl(g, u1, u2, want)
        if found is not None:
            u11, u21, u22, u23, nodes = found
            return BlockRealization(BlockKind.CL, (v1, v2), u1, u2, u11, u21, u22, u23, nodes)
    for v1, v2 in ((a, b), (b, a)):
        u1, u2 = m.node_of[v1], m.node_of[v2]
        found = _as_cn(g, u1, u2, want)
        if found is not None:
            u11, u21, nodes = found
            return BlockRealization(BlockKind.CN, (v1, v2), u1, u2, u11, u21, None, None, nodes)
    raise NotABlockError(f"Block {sorted(atoms)} has no CL or CN realization in the garden")


def splice(g: Garden, block: BlockRealization) -> Garden:
    """Remove a CL block region, keeping ``u1`` with children u11, u21, u22.

    ``u11`` keeps its slot; ``u21`` and ``u22`` take the remaining slots by sign.

    Raises:
        NotABlockError: The block is CN.
    """
    if block.kind != BlockKind.CL:
        raise NotABlockError("Only CL blocks can be spliced")
    forest, refs = Forest.from_garden(g)
    key = {ref: k for k, ref in refs.items()}
    slot11 = g.children(block.u1).index(block.u11)
    kids: list[int] = [0, 0, 0]
    kids[slot11] = key[block.u11]
    plus_slot, minus_slot = (2 - slot11, 1) if g.sign(block.u1) > 0 else (1, 2 - slot11)
    kids[plus_slot] = key[block.u21]
    kids[minus_slot] = key[block.u22]
    forest.drop(key[x] for x in block.nodes if x != block.u1)
    forest.children[key[block.u1]] = kids
    spliced, _ = forest.to_garden()
    logger.debug(f"Spliced order {g.order} garden down to order {spliced.order}")
    return spliced


# -- ladders and vines --------------------------------------------------------


def _rungs(m: Molecule) -> list[tuple[int, int]]:
    out = []
    for a, b in combinations(m.atoms, 2):
        if len(m.between(a, b)) == 2:
            out.append((a, b))
    return out


def _link(m: Molecule, upper: tuple[int, int], lower: tuple[int, int]) -> Optional[tuple]:
    """Rail pair from ``upper`` to ``lower`` as (oriented lower rung, down bond, up bond)."""
    if set(upper) & set(lower):
        return None
    found = [
        b
        for b in m.bonds
        if len({b.tail, b.head} & set(upper)) == 1 and len({b.tail, b.head} & set(lower)) == 1
    ]
    if len(found) != 2:
        return None
    b1, b2 = found
    a_end = [b for b in found if upper[0] in (b.tail, b.head)]
    if len(a_end) != 1:
        return None
    rail_a = a_end[0]
    rail_b = b2 if rail_a is b1 else b1
    la = rail_a.other(upper[0])
    lb = rail_b.other(upper[1])
    if la == lb:
        return None
    down_a = rail_a.tail == upper[0]
    down_b = rail_b.tail == upper[1]
    if down_a == down_b:
        return None
    down, up = (rail_a, rail_b) if down_a else (rail_b, rail_a)
    return (la, lb), down.id, up.id


RungPath = tuple[tuple[tuple[int, int], ...], tuple[tuple[int, int], ...]]


def _rung_paths(m: Molecule) -> Iterator[RungPath]:
    """Every simple rung path (both orientations of each rung as a start)."""
    rungs = _rungs(m)

    def grow(path, rails, used):
        yield tuple(path), tuple(rails)
        for r in rungs:
            if set(r) & used:
                continue
            for cand in (r, (r[1], r[0])):
                link = _link(m, path[-1], cand)
                if link is None or link[0] != cand:
                    continue
                yield from grow(path + [cand], rails + [(link[1], link[2])], used | set(r))

    for r in rungs:
        for start in (r, (r[1], r[0])):
            yield from grow([start], [], set(r))


def find_ladders(m: Molecule) -> list[Ladder]:
    """Maximal ladders with at least two rungs, each reported once."""
    paths = [(p, rails) for p, rails in _rung_paths(m) if len(p) >= 2]
    keys = {}
    for p, rails in paths:
        keys.setdefault(frozenset(frozenset(r) for r in p), (p, rails))
    found = []
    for key, (p, rails) in keys.items():
        if any(key < other for other in keys):
            continue
        found.append(Ladder(p, rails))
    found.sort(key=lambda ld: sorted(ld.atoms))
    return found


def find_vines(m: Molecule) -> list[Vine]:
    """Vines (I) and (II), each once, ordered by smaller joint id."""
    found: dict[frozenset[int], Vine] = {}
    for a, b in _rungs(m):
        bonds = m.between(a, b)
        if {bonds[0].tail, bonds[1].tail} == {a, b} and is_block(m, (a, b)):
            found[frozenset((a, b))] = Vine(VineKind.I, frozenset((a, b)), (a, b))

    for path, _ in _rung_paths(m):
        inside = {v for r in path for v in r}
        leaving = [b for b in m.bonds if (b.tail in inside) != (b.head in inside)]
        if len(leaving) != 4:
            continue
        ends: dict[int, set[int]] = {}
        for b in leaving:
            inner, outer = (b.tail, b.head) if b.tail in inside else (b.head, b.tail)
            ends.setdefault(outer, set()).add(inner)
        if len(ends) != 2:
            continue
        v1, v2 = sorted(ends)
        top, bottom = set(path[0]), set(path[-1])
        if len(path) == 1:
            if ends[v1] != top or ends[v2] != top:
                continue
        elif {frozenset(ends[v1]), frozenset(ends[v2])} != {frozenset(top), frozenset(bottom)}:
            continue
        group = frozenset(inside | {v1, v2})
        if group in found or not is_block(m, group):
            continue
        found[group] = Vine(VineKind.II, group, (v1, v2), path)
    vines = sorted(found.values(), key=lambda v: (v.joints, v.kind.value))
    logger.debug(f"Found {len(vines)} vines")
    return vines


# -- gaps --------------------------------------------------------------------


def block_gap_index(
    dec: MoleculeDecoration, block: Block, joint: Optional[int] = None
) -> np.ndarray:
    """k_out - k_in over the two block bonds at ``joint`` (first joint by default)."""
    m = dec.molecule
    v = block.joints[0] if joint is None else joint
    if v not in block.joints:
        raise NotABlockError(f"Atom {v} is not a joint of the block")
    inside = [b for b in m.inner_bonds(block.atoms) if v in (b.tail, b.head)]
    out = [b for b in inside if b.tail == v]
    inn = [b for b in inside if b.head == v]
    return dec.gap_index(v, out[0].id, inn[0].id)


def block_gap(dec: MoleculeDecoration, block: Block, joint: Optional[int] = None) -> np.ndarray:
    return dec.spacing * block_gap_index(dec, block, joint)


def ladder_gaps_index(dec: MoleculeDecoration, ladder: Ladder) -> list[np.ndarray]:
    """k_down - k_up for every rail pair."""
    return [dec.k[down] - dec.k[up] for down, up in ladder.rails]


__all__ = [
    "Block",
    "BlockKind",
    "BlockRealization",
    "Ladder",
    "Vine",
    "VineKind",
    "block_gap",
    "block_gap_index",
    "block_joints",
    "classify_block",
    "concatenate",
    "find_blocks",
    "find_ladders",
    "find_vines",
    "is_block",
    "ladder_gaps_index",
    "make_block",
    "splice",
]
