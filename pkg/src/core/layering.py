"""Layerings and canonical layered gardens.

A layering gives every node a nonnegative layer, nonincreasing from parent
to child and equal on paired leaves. Canonical layerings of depth bound p are
the ones produced by stacking: the nodes in layer p form the top trees, and
every maximal group of lower subtrees closed under the pairing is itself a
canonical garden of depth bound p - 1 with at least four trees.
"""

import logging
from dataclasses import dataclass
from itertools import combinations, product
from typing import Iterator

import networkx as nx

from ..config import get_config
from ..models.errors import CapExceededError, InvalidGardenError, InvalidLayeringError
from .gardens import Garden, is_irreducible
from .trees import NodeRef

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Layering:
    """Layer of every node of a garden, stored per tree in preorder."""

    garden: Garden
    values: tuple[tuple[int, ...], ...]

    def __getitem__(self, ref: NodeRef) -> int:
        return self.values[ref[0]][ref[1]]

    @classmethod
    def from_dict(cls, g: Garden, layers: dict[NodeRef, int]) -> "Layering":
        return cls(
            g,
            tuple(
                tuple(layers[(ti, n)] for n in range(t.size)) for ti, t in enumerate(g.trees)
            ),
        )

    @classmethod
    def constant(cls, g: Garden, value: int = 0) -> "Layering":
        return cls(g, tuple((value,) * t.size for t in g.trees))

    def as_dict(self) -> dict[NodeRef, int]:
        return {ref: self[ref] for ref in self.garden.node_refs}

    @property
    def depth(self) -> int:
        """Largest layer used."""
        return max(max(v) for v in self.values)

    def parent_layer(self, ref: NodeRef, p: int) -> int:
        """Layer of the parent of ``ref``; roots see ``p``."""
        par = self.garden.parent(ref)
        return p if par is None else self[par]

    def pre_layering(self) -> dict[NodeRef, int]:
        """Restriction to branching nodes."""
        return {ref: self[ref] for ref in self.garden.branching_refs}

    def violations(self) -> list[str]:
        g = self.garden
        problems = []
        if len(self.values) != g.width or any(
            len(v) != t.size for v, t in zip(self.values, g.trees)
        ):
            return ["layer table does not match the garden"]
        for ref in g.node_refs:
            if self[ref] < 0:
                problems.append(f"negative layer at {ref}")
            for c in g.children(ref) if not g.is_leaf(ref) else ():
                if self[c] > self[ref]:
                    problems.append(f"child {c} above parent {ref}")
        for i, j in g.pairs():
            a, b = g.leaf_refs[i], g.leaf_refs[j]
            if self[a] != self[b]:
                problems.append(f"paired leaves {a} and {b} in layers {self[a]} and {self[b]}")
        return problems

    def validate(self) -> None:
        problems = self.violations()
        if problems:
            raise InvalidLayeringError("; ".join(problems))

    def key(self) -> tuple[tuple[int, ...], ...]:
        return self.values


def enumerate_layerings(g: Garden, p: int) -> Iterator[Layering]:
    """Every layering of ``g`` with all layers in [0, p]."""
    refs = g.node_refs
    partner_ref = {g.leaf_refs[i]: g.leaf_refs[j] for i, j in g.pairs()}
    partner_ref.update({b: a for a, b in list(partner_ref.items())})
    position = {r: i for i, r in enumerate(refs)}
    assigned: dict[NodeRef, int] = {}

    def walk(idx: int) -> Iterator[dict[NodeRef, int]]:
        if idx == len(refs):
            yield dict(assigned)
            return
        ref = refs[idx]
        par = g.parent(ref)
        hi = p if par is None else assigned[par]
        other = partner_ref.get(ref)
        if other is not None and position[other] < idx:
            choices = [assigned[other]] if assigned[other] <= hi else []
        else:
            choices = range(hi + 1)
        for v in choices:
            assigned[ref] = v
            yield from walk(idx + 1)
        assigned.pop(ref, None)

    for layers in walk(0):
        yield Layering.from_dict(g, layers)


# -- canonicity ----------------------------------------------------------------


def _check_depth(p: int) -> None:
    cap = get_config().enumeration.max_canonical_depth
    if p > cap:
        raise CapExceededError("canonical depth", p, cap)


def _closed(g: Garden, a: NodeRef, b: NodeRef) -> bool:
    leaves = set(g.leaves_under(a)) | set(g.leaves_under(b))
    return all(g.partner(x) in leaves for x in leaves)


def canonical_violations(g: Garden, lay: Layering, p: int) -> list[tuple[NodeRef, NodeRef]]:
    """Node pairs breaking the max/min layer criterion."""
    refs = g.node_refs
    bad = []
    for a, b in combinations(refs, 2):
        if g.is_descendant(a, b) or g.is_descendant(b, a):
            continue
        if not _closed(g, a, b):
            continue
        if max(lay[a], lay[b]) < min(lay.parent_layer(a, p), lay.parent_layer(b, p)):
            bad.append((a, b))
    return bad


def is_canonical(g: Garden, lay: Layering, p: int) -> bool:
    """Test whether a layered garden is canonical with layers bounded by ``p``.

    The layering is validated first; then every layer must be at most ``p``
    and every two subtrees whose leaves pair up completely must satisfy
    max(layers) >= min(parent layers), a root's parent layer being ``p``.

    Raises:
        InvalidLayeringError: ``lay`` is not a layering of ``g``.
        InvalidGardenError: ``g`` is reducible.
    """
    lay.validate()
    if not is_irreducible(g):
        raise InvalidGardenError("Canonicity is defined for irreducible gardens and couples")
    if p < 0 or lay.depth > p:
        return False
    return not canonical_violations(g, lay, p)


def _antichains(g: Garden, roots: list[NodeRef]) -> Iterator[tuple[NodeRef, ...]]:
    """Every set of pairwise non-nested nodes below ``roots``."""

    def under(stack: list[NodeRef]) -> Iterator[tuple[NodeRef, ...]]:
        if not stack:
            yield ()
            return
        head, rest = stack[0], stack[1:]
        for tail in under(rest):
            yield (head,) + tail
        if g.is_leaf(head):
            yield from under(rest)
        else:
            yield from under(list(g.children(head)) + rest)

    yield from under(list(roots))


def _groups(g: Garden, cut: tuple[NodeRef, ...]) -> list[list[NodeRef]]:
    """Cut nodes joined through pairings of the leaves below them, in cut order."""
    owner = {leaf: u for u in cut for leaf in g.leaves_under(u)}
    graph = nx.Graph()
    graph.add_nodes_from(cut)
    for leaf, u in owner.items():
        v = owner.get(g.partner(leaf))
        if v is not None:
            graph.add_edge(u, v)
    rank = {u: n for n, u in enumerate(cut)}
    comps = sorted(nx.connected_components(graph), key=lambda c: min(rank[u] for u in c))
    return [[u for u in cut if u in c] for c in comps]


def _top_connected(g: Garden, roots: list[NodeRef], cut: tuple[NodeRef, ...], groups) -> bool:
    """No proper subset of top trees is closed under the top pairs and the groups."""
    if len(roots) <= 2:
        return True
    tree_of = {x: ti for ti, r in enumerate(roots) for x in g.descendants(r)}
    graph = nx.Graph()
    graph.add_nodes_from(range(len(roots)))
    for grp in groups:
        graph.add_edges_from((tree_of[grp[0]], tree_of[u]) for u in grp[1:])
    below = {x for u in cut for x in g.descendants(u)}
    for r in roots:
        for leaf in g.leaves_under(r):
            if leaf not in below:
                graph.add_edge(tree_of[leaf], tree_of[g.partner(leaf)])
    return nx.is_connected(graph)


def _construct(g: Garden, roots: list[NodeRef], p: int) -> Iterator[dict[NodeRef, int]]:
    if p < 0:
        return
    for cut in _antichains(g, roots):
        below = {x for u in cut for x in g.descendants(u)}
        top = [x for r in roots for x in g.descendants(r) if x not in below]
        if any(g.is_leaf(x) and g.partner(x) in below for x in top):
            continue
        groups = _groups(g, cut)
        if any(len(grp) < 4 for grp in groups):
            continue
        if not _top_connected(g, roots, cut, groups):
            continue
        base = {x: p for x in top}
        parts = [list(_construct(g, grp, p - 1)) for grp in groups]
        for combo in product(*parts):
            out = dict(base)
            for part in combo:
                out.update(part)
            yield out


def enumerate_canonical_layerings(g: Garden, p: int) -> list[Layering]:
    """All canonical layerings of ``g`` with depth bound ``p``, built by stacking.

    Raises:
        InvalidGardenError: ``g`` is reducible or a paired tree.
        CapExceededError: ``p`` above ``config.enumeration.max_canonical_depth``.
    """
    if g.lone is not None or not is_irreducible(g):
        raise InvalidGardenError("Canonical layerings are defined for irreducible gardens")
    _check_depth(p)
    roots = [(ti, 0) for ti in range(g.width)]
    out = [Layering.from_dict(g, layers) for layers in _construct(g, roots, p)]
    logger.debug(f"{len(out)} canonical layerings of depth bound {p}")
    return out


def layer_count(lay: Layering, layer: int, branching_only: bool = True) -> int:
    """Number of (branching) nodes sitting in ``layer``."""
    refs = lay.garden.branching_refs if branching_only else lay.garden.node_refs
    return sum(1 for r in refs if lay[r] == layer)

