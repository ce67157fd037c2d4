"""Signed plane ternary trees.

A tree is stored by its preorder shape string: ``"1"`` marks a branching node
(exactly three ordered children follow), ``"0"`` marks a leaf. Node ids are
preorder positions, so node 0 is always the root.
"""

import logging
from dataclasses import dataclass
from functools import cached_property, lru_cache
from math import comb
from typing import Optional

from ..config import get_config
from ..models.errors import CapExceededError, InvalidGardenError

logger = logging.getLogger(__name__)

# (tree index, node id) inside a garden
NodeRef = tuple[int, int]


def catalan3(n: int) -> int:
    """Number of plane ternary trees with ``n`` branching nodes."""
    return comb(3 * n, n) // (2 * n + 1)


@lru_cache(maxsize=None)
def tree_shapes(order: int) -> tuple[str, ...]:
    """All preorder shape strings with ``order`` branching nodes."""
    if order < 0:
        return ()
    if order == 0:
        return ("0",)
    shapes = []
    for n1 in range(order):
        for n2 in range(order - n1):
            n3 = order - 1 - n1 - n2
            for a in tree_shapes(n1):
                for b in tree_shapes(n2):
                    for c in tree_shapes(n3):
                        shapes.append("1" + a + b + c)
    return tuple(shapes)


def _check_order_cap(order: int, cap: Optional[int]) -> None:
    limit = get_config().enumeration.max_order if cap is None else cap
    if order > limit:
        raise CapExceededError("order", order, limit)


@dataclass(frozen=True)
class SignedTree:
    """Plane ternary tree with a root sign.

    Children of a node with sign z carry signs (z, -z, z) from left to right.
    """

    shape: str
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise InvalidGardenError(f"Tree sign must be +1 or -1, got {self.sign}")
        if not self.shape or set(self.shape) - {"0", "1"}:
            raise InvalidGardenError(f"Malformed tree shape: {self.shape!r}")
        need = 1
        for ch in self.shape:
            if need == 0:
                raise InvalidGardenError(f"Trailing nodes in tree shape: {self.shape!r}")
            need += 2 if ch == "1" else -1
        if need != 0:
            raise InvalidGardenError(f"Incomplete tree shape: {self.shape!r}")

    @cached_property
    def children(self) -> tuple[tuple[int, ...], ...]:
        kids: list[tuple[int, ...]] = [()] * len(self.shape)

        def walk(i: int) -> int:
            if self.shape[i] == "0":
                return i + 1
            ids = []
            j = i + 1
            for _ in range(3):
                ids.append(j)
                j = walk(j)
            kids[i] = tuple(ids)
            return j

        walk(0)
        return tuple(kids)

    @cached_property
    def parent(self) -> tuple[Optional[int], ...]:
        par: list[Optional[int]] = [None] * len(self.shape)
        for n, kids in enumerate(self.children):
            for c in kids:
                par[c] = n
        return tuple(par)

    @cached_property
    def signs(self) -> tuple[int, ...]:
        sg = [0] * len(self.shape)
        sg[0] = self.sign
        for n, kids in enumerate(self.children):
            for pos, c in enumerate(kids):
                sg[c] = -sg[n] if pos == 1 else sg[n]
        return tuple(sg)

    @cached_property
    def leaves(self) -> tuple[int, ...]:
        return tuple(i for i, ch in enumerate(self.shape) if ch == "0")

    @cached_property
    def branching(self) -> tuple[int, ...]:
        return tuple(i for i, ch in enumerate(self.shape) if ch == "1")

    @property
    def order(self) -> int:
        return len(self.branching)

    @property
    def size(self) -> int:
        return len(self.shape)

    def is_leaf(self, node: int) -> bool:
        return self.shape[node] == "0"

    def descendants(self, node: int) -> range:
        """Preorder ids of the subtree rooted at ``node`` (itself included)."""
        need = 1
        j = node
        while need:
            need += 2 if self.shape[j] == "1" else -1
            j += 1
        return range(node, j)

    def subtree(self, node: int) -> "SignedTree":
        span = self.descendants(node)
        return SignedTree(self.shape[span.start : span.stop], self.signs[node])

    def conjugate(self) -> "SignedTree":
        return SignedTree(self.shape, -self.sign)

    def zeta(self) -> complex:
        """Product of i*sign over branching nodes."""
        out = 1 + 0j
        for n in self.branching:
            out *= 1j * self.signs[n]
        return out

    def node_text(self, node: int = 0) -> str:
        if self.is_leaf(node):
            return "."
        return "(" + "".join(self.node_text(c) for c in self.children[node]) + ")"

    def to_text(self) -> str:
        return ("+" if self.sign > 0 else "-") + self.node_text(0)

    @classmethod
    def from_text(cls, text: str) -> "SignedTree":
        text = text.strip()
        if not text or text[0] not in "+-":
            raise InvalidGardenError(f"Tree text must start with a sign: {text!r}")
        body = text[1:]
        shape = []
        for ch in body:
            if ch == ".":
                shape.append("0")
            elif ch == "(":
                shape.append("1")
            elif ch != ")":
                raise InvalidGardenError(f"Unexpected character {ch!r} in tree text")
        tree = cls("".join(shape), 1 if text[0] == "+" else -1)
        if tree.node_text(0) != body:
            raise InvalidGardenError(f"Unbalanced tree text: {text!r}")
        return tree


def trivial_tree(sign: int = 1) -> SignedTree:
    return SignedTree("0", sign)


def enumerate_trees(order: int, sign: int = 1, cap: Optional[int] = None) -> list[SignedTree]:
    """Enumerate every plane ternary tree of the given order.

    Args:
        order: Number of branching nodes.
        sign: Root sign.
        cap: Order cap; defaults to ``config.enumeration.max_order``.

    Returns:
        Duplicate-free list in a deterministic order.

    Raises:
        CapExceededError: If ``order`` exceeds the cap.
    """
    _check_order_cap(order, cap)
    if order < 0:
        return []
    trees = [SignedTree(s, sign) for s in tree_shapes(order)]
    logger.debug(f"Enumerated {len(trees)} trees of order {order}")
    return trees
