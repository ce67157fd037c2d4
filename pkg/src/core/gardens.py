"""Gardens, couples and paired trees.

A garden is an ordered tuple of signed trees plus a fixed-point-free
involution on the global leaf numbering (tree-major, preorder inside each
tree). A width-1 garden whose pairing leaves exactly one leaf unpaired
(marked ``-1``) is a paired tree.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from itertools import permutations, product
from typing import Iterator, Optional, Sequence

import networkx as nx

from ..config import get_config
from ..models.errors import CapExceededError, InvalidGardenError
from .trees import NodeRef, SignedTree, tree_shapes

logger = logging.getLogger(__name__)

LONE = -1


@dataclass(frozen=True)
class Garden:
    """Ordered trees with a sign-respecting leaf pairing."""

    trees: tuple[SignedTree, ...]
    pairing: tuple[int, ...]

    def __post_init__(self):
        if not self.trees:
            raise InvalidGardenError("A garden needs at least one tree")
        n_leaves = sum(len(t.leaves) for t in self.trees)
        if len(self.pairing) != n_leaves:
            raise InvalidGardenError(
                f"Pairing has {len(self.pairing)} entries for {n_leaves} leaves"
            )
        lone = [i for i, j in enumerate(self.pairing) if j == LONE]
        if len(self.trees) == 1:
            if len(lone) != 1:
                raise InvalidGardenError("A paired tree has exactly one lone leaf")
        else:
            if lone:
                raise InvalidGardenError("Only paired trees may carry a lone leaf")
            if len(self.trees) % 2:
                raise InvalidGardenError(f"Garden width {len(self.trees)} is odd")
            if sum(t.sign for t in self.trees) != 0:
                raise InvalidGardenError("Signature must be half + and half -")
        signs = self.leaf_signs
        for i, j in enumerate(self.pairing):
            if j == LONE:
                continue
            if not 0 <= j < n_leaves or j == i or self.pairing[j] != i:
                raise InvalidGardenError(f"Pairing is not an involution at leaf {i}")
            if signs[i] == signs[j]:
                raise InvalidGardenError(f"Paired leaves {i} and {j} share a sign")

    # -- layout ---------------------------------------------------------

    @cached_property
    def leaf_refs(self) -> tuple[NodeRef, ...]:
        return tuple((ti, n) for ti, t in enumerate(self.trees) for n in t.leaves)

    @cached_property
    def leaf_index(self) -> dict[NodeRef, int]:
        return {ref: i for i, ref in enumerate(self.leaf_refs)}

    @cached_property
    def leaf_signs(self) -> tuple[int, ...]:
        return tuple(self.trees[ti].signs[n] for ti, n in self.leaf_refs)

    @cached_property
    def node_refs(self) -> tuple[NodeRef, ...]:
        return tuple((ti, n) for ti, t in enumerate(self.trees) for n in range(t.size))

    @cached_property
    def branching_refs(self) -> tuple[NodeRef, ...]:
        return tuple((ti, n) for ti, t in enumerate(self.trees) for n in t.branching)

    @property
    def width(self) -> int:
        return len(self.trees)

    @property
    def order(self) -> int:
        return sum(t.order for t in self.trees)

    @property
    def signature(self) -> tuple[int, ...]:
        return tuple(t.sign for t in self.trees)

    @property
    def is_couple(self) -> bool:
        return self.signature == (1, -1)

    @property
    def is_paired_tree(self) -> bool:
        return len(self.trees) == 1

    @property
    def lone(self) -> Optional[int]:
        """Global index of the lone leaf of a paired tree."""
        if not self.is_paired_tree:
            return None
        return self.pairing.index(LONE)

    @property
    def lone_ref(self) -> Optional[NodeRef]:
        i = self.lone
        return None if i is None else self.leaf_refs[i]

    # -- node access ----------------------------------------------------

    def sign(self, ref: NodeRef) -> int:
        return self.trees[ref[0]].signs[ref[1]]

    def is_leaf(self, ref: NodeRef) -> bool:
        return self.trees[ref[0]].is_leaf(ref[1])

    def children(self, ref: NodeRef) -> tuple[NodeRef, ...]:
        return tuple((ref[0], c) for c in self.trees[ref[0]].children[ref[1]])

    def parent(self, ref: NodeRef) -> Optional[NodeRef]:
        p = self.trees[ref[0]].parent[ref[1]]
        return None if p is None else (ref[0], p)

    def partner(self, ref: NodeRef) -> Optional[NodeRef]:
        j = self.pairing[self.leaf_index[ref]]
        return None if j == LONE else self.leaf_refs[j]

    def descendants(self, ref: NodeRef) -> list[NodeRef]:
        return [(ref[0], n) for n in self.trees[ref[0]].descendants(ref[1])]

    def is_descendant(self, ref: NodeRef, ancestor: NodeRef) -> bool:
        """True if ``ref`` lies in the subtree of ``ancestor`` (itself included)."""
        return ref[0] == ancestor[0] and ref[1] in self.trees[ancestor[0]].descendants(
            ancestor[1]
        )

    def leaves_under(self, ref: NodeRef) -> list[NodeRef]:
        return [r for r in self.descendants(ref) if self.is_leaf(r)]

    def pairs(self) -> tuple[tuple[int, int], ...]:
        return tuple(
            (i, j) for i, j in enumerate(self.pairing) if j != LONE and i < j
        )

    def zeta(self) -> complex:
        out = 1 + 0j
        for t in self.trees:
            out *= t.zeta()
        return out

    # -- derived gardens ------------------------------------------------

    def conjugate(self) -> "Garden":
        """Conjugate object: couples swap and flip their trees, others flip signs."""
        if self.is_couple:
            plus, minus = self.trees
            n_plus = len(plus.leaves)
            n_minus = len(minus.leaves)

            def move(i: int) -> int:
                return i + n_minus if i < n_plus else i - n_plus

            pairing = [0] * len(self.pairing)
            for i, j in enumerate(self.pairing):
                pairing[move(i)] = move(j)
            return Garden((minus.conjugate(), plus.conjugate()), tuple(pairing))
        return Garden(tuple(t.conjugate() for t in self.trees), self.pairing)

    def restrict(self, tree_ids: Sequence[int]) -> "Garden":
        """Sub-garden on a fully self-paired set of trees."""
        keep = sorted(tree_ids)
        keep_set = set(keep)
        old = [i for i, (ti, _) in enumerate(self.leaf_refs) if ti in keep_set]
        new_index = {o: k for k, o in enumerate(old)}
        pairing = []
        for o in old:
            j = self.pairing[o]
            if j == LONE:
                pairing.append(LONE)
                continue
            if j not in new_index:
                raise InvalidGardenError(f"Trees {keep} are not closed under the pairing")
            pairing.append(new_index[j])
        return Garden(tuple(self.trees[t] for t in keep), tuple(pairing))

    # -- text form ------------------------------------------------------

    def to_text(self) -> str:
        body = " ".join(t.to_text() for t in self.trees)
        pairs = ",".join(f"{i}-{j}" for i, j in self.pairs())
        text = f"{body} | {pairs}"
        if self.is_paired_tree:
            text += f" ; lone={self.lone}"
        return text

    @classmethod
    def from_text(cls, text: str) -> "Garden":
        lone = None
        if ";" in text:
            text, tail = text.split(";", 1)
            tail = tail.strip()
            if not tail.startswith("lone="):
                raise InvalidGardenError(f"Unexpected suffix {tail!r}")
            lone = int(tail[len("lone=") :])
        if "|" not in text:
            raise InvalidGardenError("Garden text needs a ' | ' pairing section")
        head, pairs = text.split("|", 1)
        trees = tuple(SignedTree.from_text(t) for t in head.split())
        n_leaves = sum(len(t.leaves) for t in trees)
        pairing = [None] * n_leaves
        for item in filter(None, (p.strip() for p in pairs.split(","))):
            a, b = (int(x) for x in item.split("-"))
            if not (0 <= a < n_leaves and 0 <= b < n_leaves):
                raise InvalidGardenError(f"Leaf index out of range in pair {item}")
            if pairing[a] is not None or pairing[b] is not None:
                raise InvalidGardenError(f"Leaf paired twice in pair {item}")
            pairing[a], pairing[b] = b, a
        if lone is not None:
            if not 0 <= lone < n_leaves or pairing[lone] is not None:
                raise InvalidGardenError(f"Invalid lone leaf {lone}")
            pairing[lone] = LONE
        if any(p is None for p in pairing):
            raise InvalidGardenError("Some leaves are left unpaired")
        return cls(trees, tuple(pairing))

    def __str__(self) -> str:
        return self.to_text()


def trivial_couple() -> Garden:
    return Garden((SignedTree("0", 1), SignedTree("0", -1)), (1, 0))


def paired_tree(tree: SignedTree, pairing: Sequence[int]) -> Garden:
    return Garden((tree,), tuple(pairing))


# -- enumeration ---------------------------------------------------------


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _matchings(
    trees: tuple[SignedTree, ...], lone: Optional[int] = None
) -> Iterator[tuple[int, ...]]:
    signs = [t.signs[n] for t in trees for n in t.leaves]
    plus = [i for i, s in enumerate(signs) if s > 0 and i != lone]
    minus = [i for i, s in enumerate(signs) if s < 0 and i != lone]
    if len(plus) != len(minus):
        return
    for perm in permutations(minus):
        pairing = [LONE] * len(signs)
        for a, b in zip(plus, perm):
            pairing[a], pairing[b] = b, a
        yield tuple(pairing)


def _check_caps(order: int, width: int, max_order: Optional[int], max_width: Optional[int]):
    cfg = get_config().enumeration
    order_cap = cfg.max_order if max_order is None else max_order
    width_cap = cfg.max_width if max_width is None else max_width
    if order > order_cap:
        raise CapExceededError("order", order, order_cap)
    if width > width_cap:
        raise CapExceededError("width", width, width_cap)


def enumerate_gardens(
    order: int,
    signature: Sequence[int],
    max_order: Optional[int] = None,
    max_width: Optional[int] = None,
) -> list[Garden]:
    """Enumerate every garden of the given order and signature.

    All tuples of tree shapes with total order ``order`` are combined with
    every sign-compatible perfect matching of their leaves.

    Raises:
        InvalidGardenError: Odd or unbalanced signature.
        CapExceededError: Order or width over the configured caps.
    """
    signature = tuple(signature)
    if not signature or len(signature) % 2 or any(s not in (1, -1) for s in signature):
        raise InvalidGardenError(f"Invalid signature {signature}")
    if sum(signature) != 0:
        raise InvalidGardenError(f"Signature {signature} is not half + and half -")
    _check_caps(order, len(signature), max_order, max_width)

    gardens = []
    for comp in _compositions(order, len(signature)):
        for shapes in product(*(tree_shapes(n) for n in comp)):
            trees = tuple(SignedTree(s, z) for s, z in zip(shapes, signature))
            gardens.extend(Garden(trees, m) for m in _matchings(trees))
    logger.debug(f"Enumerated {len(gardens)} gardens of order {order}, signature {signature}")
    return gardens


def enumerate_couples(order: int, max_order: Optional[int] = None) -> list[Garden]:
    return enumerate_gardens(order, (1, -1), max_order=max_order)


def enumerate_paired_trees(
    order: int, sign: int = 1, max_order: Optional[int] = None
) -> list[Garden]:
    """Enumerate paired trees; the lone leaf always carries the root sign."""
    _check_caps(order, 1, max_order, None)
    out = []
    for shape in tree_shapes(order):
        tree = SignedTree(shape, sign)
        for lone, n in enumerate(tree.leaves):
            if tree.signs[n] != sign:
                continue
            out.extend(Garden((tree,), m) for m in _matchings((tree,), lone))
    return out


# -- irreducibility ------------------------------------------------------


def _tree_components(g: Garden) -> list[list[int]]:
    graph = nx.Graph()
    graph.add_nodes_from(range(g.width))
    graph.add_edges_from((g.leaf_refs[i][0], g.leaf_refs[j][0]) for i, j in g.pairs())
    return sorted(sorted(c) for c in nx.connected_components(graph))


def is_irreducible(g: Garden) -> bool:
    """True iff no proper subset of trees is paired only among itself."""
    return len(_tree_components(g)) == 1


def decompose_components(g: Garden) -> list[Garden]:
    """Split a garden into its irreducible components, in tree order."""
    return [g.restrict(c) for c in _tree_components(g)]
