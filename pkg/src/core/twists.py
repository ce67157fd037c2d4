"""Unit twists and layered full twists at CL vines.

A CL vine (I) or (II) in a garden molecule is realized by a node ``u2``
below ``u1`` whose third child ``u23`` is a leaf paired with a leaf ``u0``
outside the subtree of ``u2``. Twisting moves ``u2`` into the slot of
``u0``, the leaf pair into the slot ``u2`` left, and exchanges the plus and
minus children of ``u2``. The molecule keeps its shape; only the labels of
two bonds at the lower joint change.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from ..models.errors import InvalidLayeringError, NotABlockError, TwistError
from .blocks import BlockKind, BlockRealization, Vine, VineKind, classify_block
from .decorations import GardenDecoration
from .forest import Forest
from .gardens import Garden
from .layering import Layering, is_canonical
from .molecules import Molecule, build_molecule
from .regular import (
    decompose_couple_at,
    decompose_tree_at,
    is_coherent,
    layer_structure_violations,
    skeleton,
)
from .trees import NodeRef

logger = logging.getLogger(__name__)


class VineCase(str, Enum):
    I_A = "I-a"
    I_B = "I-b"
    II_A = "II-a"
    II_B = "II-b"
    II_C = "II-c"
    II_D = "II-d"
    II_E = "II-e"


@dataclass(frozen=True)
class VineRealization:
    """A vine together with its block realization and the nodes around ``u2``.

    ``u3``/``u4`` are the nodes of the two atoms bonded to the lower joint
    (vine (II) only); ``u0`` is the partner of ``u23`` when ``u23`` is a leaf.
    """

    vine: Vine
    block: BlockRealization
    case: Optional[VineCase]
    u0: Optional[NodeRef] = None
    u3: Optional[NodeRef] = None
    u4: Optional[NodeRef] = None

    @property
    def is_core(self) -> bool:
        return self.block.kind == BlockKind.CL and self.case not in (None, VineCase.II_E)


def _vine_two_case(g: Garden, m: Molecule, vine: Vine, block: BlockRealization):
    v2 = block.joints[1]
    inside = [b for b in m.inner_bonds(vine.atoms) if v2 in (b.tail, b.head)]
    out = next(b for b in inside if b.tail == v2)
    inn = next(b for b in inside if b.head == v2)
    x, y = m.node_of[out.head], m.node_of[inn.tail]
    u2, u23 = block.u2, block.u23
    par = g.parent(u2)

    if u23 in (x, y):
        u3 = y if u23 == x else x
        if par != u3:
            raise NotABlockError("Vine (II) with u4 = u23 needs u2 below u3")
        return VineCase.II_E, None, u3, u23

    if not g.is_leaf(u23):
        raise NotABlockError("Vine (II) needs u23 to be a leaf or a rung node")
    u0 = g.partner(u23)
    if g.parent(x) == y or g.parent(y) == x:
        u3, u4 = (y, x) if g.parent(x) == y else (x, y)
        if par == u4 and g.parent(u0) == u3:
            return VineCase.II_C, u0, u3, u4
        if par == u3 and g.parent(u0) == u4:
            return VineCase.II_D, u0, u3, u4
        raise NotABlockError("Nested vine (II) matches neither II-c nor II-d")
    # u3 is the rung node entered by the bond leaving the lower joint
    u3, u4 = x, y
    if par == u4 and g.parent(u0) == u3:
        return VineCase.II_A, u0, u3, u4
    if par == u3 and g.parent(u0) == u4:
        return VineCase.II_B, u0, u3, u4
    raise NotABlockError("Vine (II) matches neither II-a nor II-b")


def classify_vine(g: Garden, m: Molecule, vine: Vine) -> VineRealization:
    """Realize a vine of ``m = build_molecule(g)`` in the garden.

    CN vines come back with ``case`` None.

    Raises:
        NotABlockError: The vine is not a block of ``m`` or fits no sub-case.
    """
    block = classify_block(g, m, vine.atoms)
    if block.kind == BlockKind.CN:
        return VineRealization(vine, block, None)
    if vine.kind == VineKind.I:
        u0 = g.partner(block.u23) if g.is_leaf(block.u23) else None
        kids = g.children(block.u1)
        if u0 is None or u0 not in kids:
            raise NotABlockError("Vine (I) needs u23 paired with a child of u1")
        case = VineCase.I_B if kids.index(block.u2) == 1 else VineCase.I_A
        return VineRealization(vine, block, case, u0)
    case, u0, u3, u4 = _vine_two_case(g, m, vine, block)
    return VineRealization(vine, block, case, u0, u3, u4)


# -- unit twist --------------------------------------------------------------


@dataclass(frozen=True)
class TwistResult:
    """Twisted garden with the map from old node references to new ones."""

    garden: Garden
    ref_map: dict[NodeRef, NodeRef]
    realization: VineRealization


def _twist_forest(f: Forest, top: int, u2: int, c_top: int, d_top: int) -> None:
    """Swap the object at ``top`` (ending in ``u2``) with the half at ``d_top``.

    ``c_top`` is the child of ``u2`` paired up with ``d_top``; it takes the
    slot of ``top`` while ``d_top`` takes its place under ``u2``.
    """
    parents = f.parents()
    pa, sa = parents[top]
    p0, s0 = parents[d_top]
    slot_c = parents[c_top][1]
    f.children[pa][sa] = c_top
    f.children[p0][s0] = top
    kids = f.children[u2]
    kids[slot_c] = d_top
    i, j = (s for s in range(3) if s != slot_c)
    kids[i], kids[j] = kids[j], kids[i]


def _require_core(real: VineRealization) -> None:
    failures = []
    if real.block.kind != BlockKind.CL:
        failures.append("vine is realized as a CN block")
    elif real.case == VineCase.II_E:
        failures.append("vine (II-e) is not a core vine")
    if failures:
        raise TwistError(failures)


def twist_with_map(g: Garden, vine: Vine, molecule: Optional[Molecule] = None) -> TwistResult:
    """Unit twist at a core CL vine, keeping track of every node.

    Raises:
        TwistError: The vine is CN or of type (II-e).
    """
    m = molecule if molecule is not None else build_molecule(g)
    real = classify_vine(g, m, vine)
    _require_core(real)
    forest, refs = Forest.from_garden(g)
    key = {ref: k for k, ref in refs.items()}
    b = real.block
    _twist_forest(forest, key[b.u2], key[b.u2], key[b.u23], key[real.u0])
    out, new_refs = forest.to_garden()
    ref_map = {refs[k]: new_refs[k] for k in refs}
    logger.debug(f"Twisted {real.case.value} vine at joints {vine.joints}")
    return TwistResult(out, ref_map, real)


def twist(g: Garden, vine: Vine, molecule: Optional[Molecule] = None) -> Garden:
    """Unit twist of ``g`` at a core CL vine of its molecule."""
    return twist_with_map(g, vine, molecule).garden


def twist_decoration(result: TwistResult, dec: GardenDecoration) -> GardenDecoration:
    """Decoration of the twisted garden matching ``dec``.

    Every node keeps its vector except that ``u2`` takes the value of ``u23``
    and the moved leaf pair takes the old value of ``u2``.
    """
    b, u0 = result.realization.block, result.realization.u0
    k = {}
    for old, new in result.ref_map.items():
        value = dec.k[old]
        if old == b.u2:
            value = dec.k[b.u23]
        elif old in (b.u23, u0):
            value = dec.k[b.u2]
        k[new] = np.array(value, copy=True)
    return GardenDecoration(result.garden, k, dec.spacing)


# -- layered full twist ---------------------------------------------------------


@dataclass(frozen=True)
class Replacement:
    """Regular paired tree or couple with its own layering."""

    garden: Garden
    layering: Layering


def _graft(
    forest: Forest,
    layer: dict[int, int],
    rep: Replacement,
    slots: dict[int, int],
    lone_target: Optional[int] = None,
) -> dict[int, int]:
    """Insert ``rep`` replacing the subtrees at ``slots`` (root index -> key).

    Returns the new key of each replacement root. A paired tree's lone leaf
    is replaced by ``lone_target``.
    """
    piece, piece_refs = Forest.from_garden(rep.garden)
    offset = forest.fresh_key()
    removed = {x for old in slots.values() for x in forest.preorder(old)}
    if lone_target is not None:
        removed -= set(forest.preorder(lone_target))
    roots = {}
    for ti, old in slots.items():
        new_root = piece.roots[ti] + offset
        forest.replace(old, new_root)
        roots[ti] = new_root
    forest.drop(removed)
    for k in removed:
        layer.pop(k, None)
    for k, kids in piece.children.items():
        forest.children[k + offset] = [c + offset for c in kids]
    for k, ref in piece_refs.items():
        layer[k + offset] = rep.layering[ref]
    for k, other in piece.partner.items():
        if other is None:
            forest.replace(k + offset, lone_target)
            layer.pop(k + offset, None)
        else:
            forest.partner[k + offset] = other + offset
    return roots


def _region_nodes(g: Garden, tops: list[NodeRef], stop: Optional[NodeRef]) -> list[NodeRef]:
    below = set(g.descendants(stop)) if stop is not None else set()
    return [x for t in tops for x in g.descendants(t) if x not in below]


def _layer_p_count(g: Garden, lay: Layering, nodes: list[NodeRef], p: int) -> int:
    return sum(1 for x in nodes if not g.is_leaf(x) and lay[x] == p)


def lf_twist(
    g: Garden,
    lay: Layering,
    p: int,
    vine: Vine,
    tree: Optional[Replacement] = None,
    couple: Optional[Replacement] = None,
) -> tuple[Garden, Layering]:
    """Layered full twist of a canonical layered garden at a skeleton vine.

    ``vine`` must be a vine of the molecule of ``skeleton(g).garden``. The
    regular tree above ``u2`` and the regular couple at ``(u23, u0)`` are
    carried along unless replacements are given; every other attachment is
    kept with its layers.

    Raises:
        TwistError: One entry per failed precondition or replacement condition.
    """
    lay.validate()
    if not is_canonical(g, lay, p):
        raise TwistError(["input layering is not canonical"])
    sk = skeleton(g)
    msk = build_molecule(sk.garden)
    real = classify_vine(sk.garden, msk, vine)
    _require_core(real)
    b = real.block

    u2 = sk.origin[b.u2]
    a_top = sk.top[b.u2]
    c_top, d_top = sk.top[b.u23], sk.top[real.u0]
    failures: list[str] = []

    if real.u3 is not None and lay[u2] > min(lay[sk.origin[real.u3]], lay[sk.origin[real.u4]]):
        failures.append("u2 sits above one of the rung nodes u3, u4")
    t_struct = decompose_tree_at(g, a_top, u2)
    plus, minus = (c_top, d_top) if g.sign(c_top) > 0 else (d_top, c_top)
    q_struct = decompose_couple_at(g, plus, minus)
    if t_struct is None or not is_coherent(t_struct, lay.__getitem__):
        failures.append("regular tree at u2 is not coherent")
    if q_struct is None or not is_coherent(q_struct, lay.__getitem__):
        failures.append("regular couple at (u23, u0) is not coherent")
    if tree is not None and tree.layering[tree.garden.lone_ref] != lay[u2]:
        failures.append("replacement tree has its lone leaf outside the layer of u2")
    if failures:
        raise TwistError(failures)

    old_nodes = _region_nodes(g, [a_top], u2) + _region_nodes(g, [c_top, d_top], None)
    old_order = t_struct.order + q_struct.order
    old_top = _layer_p_count(g, lay, old_nodes, p)

    forest, refs = Forest.from_garden(g)
    key = {ref: k for k, ref in refs.items()}
    layer = {k: lay[ref] for k, ref in refs.items()}
    ka, k2, kc, kd = key[a_top], key[u2], key[c_top], key[d_top]
    _twist_forest(forest, ka, k2, kc, kd)
    if tree is not None:
        ka = _graft(forest, layer, tree, {0: ka}, lone_target=k2)[0]
    if couple is not None:
        signs = forest.signs()
        kp, km = (kc, kd) if signs[kc] > 0 else (kd, kc)
        roots = _graft(forest, layer, couple, {0: kp, 1: km})
        kc, kd = roots[0], roots[1]

    out, new_refs = forest.to_garden()
    new_lay = Layering.from_dict(out, {new_refs[k]: v for k, v in layer.items()})
    try:
        new_lay.validate()
    except InvalidLayeringError as e:
        raise TwistError([f"twisted layering is invalid: {e}"]) from e

    ra, r2, rc, rd = (new_refs[k] for k in (ka, k2, kc, kd))
    nt = decompose_tree_at(out, ra, r2)
    rp, rm = (rc, rd) if out.sign(rc) > 0 else (rd, rc)
    nq = decompose_couple_at(out, rp, rm)
    if nt is None or nq is None:
        raise TwistError(["replacement objects are not regular"])
    if not is_coherent(nt, new_lay.__getitem__):
        failures.append("replacement tree is not coherent")
    if not is_coherent(nq, new_lay.__getitem__):
        failures.append("replacement couple is not coherent")
    failures += layer_structure_violations(
        out, nt, new_lay.__getitem__, new_lay.parent_layer(ra, p), new_lay[r2]
    )
    failures += layer_structure_violations(
        out, nq, new_lay.__getitem__, new_lay.parent_layer(rp, p), new_lay.parent_layer(rm, p)
    )
    new_nodes = _region_nodes(out, [ra], r2) + _region_nodes(out, [rc, rd], None)
    if nt.order + nq.order != old_order:
        failures.append(f"order changes from {old_order} to {nt.order + nq.order}")
    new_top = _layer_p_count(out, new_lay, new_nodes, p)
    if new_top != old_top:
        failures.append(f"layer-{p} branching count changes from {old_top} to {new_top}")
    if failures:
        raise TwistError(failures)
    if not is_canonical(out, new_lay, p):
        raise TwistError(["twisted layered garden is not canonical"])
    logger.debug(f"LF twist at {real.case.value} vine keeps order {out.order}")
    return out, new_lay


__all__ = [
    "Replacement",
    "TwistResult",
    "VineCase",
    "VineRealization",
    "classify_vine",
    "lf_twist",
    "twist",
    "twist_decoration",
    "twist_with_map",
]
