"""Keyed working copy of a garden for structural surgery.

Gardens are immutable and addressed by position. Surgery (collapsing
mini-couples, grafting attachments, twisting subtrees) is easier on a
mutable structure whose nodes keep a stable integer key while they move.
Signs are never stored per node; they follow from the root signs and the
child positions, so a moved subtree picks up its new signs automatically.
"""

from typing import Iterable, Optional

from ..models.errors import InvalidGardenError
from .gardens import LONE, Garden
from .trees import NodeRef, SignedTree


class Forest:
    """Ordered trees over keyed nodes with a (partial) leaf pairing."""

    def __init__(
        self,
        roots: list[int],
        root_signs: list[int],
        children: dict[int, list[int]],
        partner: dict[int, Optional[int]],
    ):
        self.roots = list(roots)
        self.root_signs = list(root_signs)
        self.children = {k: list(v) for k, v in children.items()}
        self.partner = dict(partner)

    @classmethod
    def from_garden(cls, g: Garden) -> tuple["Forest", dict[int, NodeRef]]:
        """Build a forest whose keys are positions in ``g.node_refs``."""
        key = {ref: i for i, ref in enumerate(g.node_refs)}
        children = {}
        partner: dict[int, Optional[int]] = {}
        for ref in g.node_refs:
            if g.is_leaf(ref):
                other = g.partner(ref)
                partner[key[ref]] = None if other is None else key[other]
            else:
                children[key[ref]] = [key[c] for c in g.children(ref)]
        roots = [key[(ti, 0)] for ti in range(g.width)]
        forest = cls(roots, list(g.signature), children, partner)
        return forest, {i: ref for ref, i in key.items()}

    def copy(self) -> "Forest":
        return Forest(self.roots, self.root_signs, self.children, self.partner)

    # -- navigation -----------------------------------------------------

    def is_leaf(self, k: int) -> bool:
        return k not in self.children

    def preorder(self, root: int) -> list[int]:
        out = []
        stack = [root]
        while stack:
            k = stack.pop()
            out.append(k)
            stack.extend(reversed(self.children.get(k, ())))
        return out

    def keys(self) -> list[int]:
        return [k for r in self.roots for k in self.preorder(r)]

    def parents(self) -> dict[int, tuple[int, int]]:
        """Map child key -> (parent key, slot)."""
        return {c: (p, s) for p, kids in self.children.items() for s, c in enumerate(kids)}

    def signs(self) -> dict[int, int]:
        out = {}
        for r, z in zip(self.roots, self.root_signs):
            out[r] = z
            for k in self.preorder(r):
                for s, c in enumerate(self.children.get(k, ())):
                    out[c] = -out[k] if s == 1 else out[k]
        return out

    def root_of(self) -> dict[int, int]:
        """Map every key to the index of its tree."""
        return {k: ti for ti, r in enumerate(self.roots) for k in self.preorder(r)}

    def leaves_under(self, k: int) -> list[int]:
        return [x for x in self.preorder(k) if self.is_leaf(x)]

    def closed(self, keys: Iterable[int]) -> bool:
        """True if every leaf below ``keys`` is paired with a leaf below ``keys``."""
        leaves = set()
        for k in keys:
            leaves.update(self.leaves_under(k))
        return all(self.partner.get(x) in leaves for x in leaves)

    def order(self) -> int:
        return sum(1 for r in self.roots for k in self.preorder(r) if not self.is_leaf(k))

    # -- conversion -----------------------------------------------------

    def extract(self, roots: list[int], cut: Optional[int] = None) -> "Forest":
        """Copy the subtrees below ``roots``; ``cut`` becomes an unpaired leaf."""
        signs = self.signs()
        children = {}
        partner: dict[int, Optional[int]] = {}
        members = set()
        for r in roots:
            stack = [r]
            while stack:
                k = stack.pop()
                members.add(k)
                if k == cut:
                    partner[k] = None
                elif self.is_leaf(k):
                    partner[k] = self.partner.get(k)
                else:
                    children[k] = list(self.children[k])
                    stack.extend(self.children[k])
        for leaf, other in partner.items():
            if leaf != cut and other not in members:
                raise InvalidGardenError(f"Node set {roots} is not closed under the pairing")
        return Forest(list(roots), [signs[r] for r in roots], children, partner)

    def to_garden(self) -> tuple[Garden, dict[int, NodeRef]]:
        """Freeze into a garden; returns the garden and a key -> NodeRef map."""
        refs: dict[int, NodeRef] = {}
        trees = []
        leaf_order: list[int] = []
        for ti, (r, z) in enumerate(zip(self.roots, self.root_signs)):
            order = self.preorder(r)
            shape = "".join("0" if self.is_leaf(k) else "1" for k in order)
            trees.append(SignedTree(shape, z))
            for n, k in enumerate(order):
                refs[k] = (ti, n)
                if self.is_leaf(k):
                    leaf_order.append(k)
        index = {k: i for i, k in enumerate(leaf_order)}
        pairing = []
        for k in leaf_order:
            other = self.partner.get(k)
            pairing.append(LONE if other is None else index[other])
        return Garden(tuple(trees), tuple(pairing)), refs

    # -- surgery --------------------------------------------------------

    def fresh_key(self) -> int:
        used = set(self.children) | set(self.partner)
        return max(used, default=-1) + 1

    def replace(self, old: int, new: int) -> None:
        """Put the subtree rooted at ``new`` into the position held by ``old``."""
        for ti, r in enumerate(self.roots):
            if r == old:
                self.roots[ti] = new
                return
        for kids in self.children.values():
            for s, c in enumerate(kids):
                if c == old:
                    kids[s] = new
                    return
        raise InvalidGardenError(f"Key {old} has no position")

    def drop(self, keys: Iterable[int]) -> None:
        for k in keys:
            self.children.pop(k, None)
            self.partner.pop(k, None)

    def find_mini_couple(self) -> Optional[tuple[int, int]]:
        """First pair of branching nodes whose six leaf children pair across."""
        parents = self.parents()
        for k in self.keys():
            kids = self.children.get(k)
            if kids is None or not all(self.is_leaf(c) for c in kids):
                continue
            other_mid = self.partner.get(kids[1])
            if other_mid is None or other_mid not in parents:
                continue
            b, slot = parents[other_mid]
            if b == k or slot != 1:
                continue
            bk = self.children[b]
            if not all(self.is_leaf(c) for c in bk):
                continue
            p0, p2 = self.partner.get(kids[0]), self.partner.get(kids[2])
            if (p0, p2) in ((bk[0], bk[2]), (bk[2], bk[0])):
                return k, b
        return None

    def collapse_mini_couple(self, a: int, b: int) -> None:
        self.drop(self.children[a] + self.children[b])
        del self.children[a]
        del self.children[b]
        self.partner[a] = b
        self.partner[b] = a

    def find_mini_tree(self) -> Optional[tuple[int, int, int]]:
        """First node with one branching child absorbing its two leaf children.

        Returns ``(top, inner, rest)`` where ``rest`` is the child of ``inner``
        left over after the two leaf pairs are removed.
        """
        for k in self.keys():
            kids = self.children.get(k)
            if kids is None:
                continue
            inner = [c for c in kids if not self.is_leaf(c)]
            if len(inner) != 1:
                continue
            nb = inner[0]
            bk = self.children[nb]
            matched = [self.partner.get(c) for c in kids if c != nb]
            if all(m in bk for m in matched):
                rest = [c for c in bk if c not in matched]
                return k, nb, rest[0]
        return None

    def collapse_mini_tree(self, top: int, inner: int, rest: int) -> None:
        self.replace(top, rest)
        self.drop([c for c in self.children[top] if c != inner])
        self.drop([c for c in self.children[inner] if c != rest])
        del self.children[top]
        del self.children[inner]
