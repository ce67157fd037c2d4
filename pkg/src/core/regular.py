"""Regular couples and trees: skeletons, structure, links and coherence.

Regular objects are the ones built from the trivial couple (or the trivial
tree) by repeatedly inserting mini-couples and mini-trees. Collapsing those
insertions greedily gives the skeleton of any garden; reading them off
level by level gives the structure decomposition used for links.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterator, Optional

from ..models.errors import InvalidGardenError
from .forest import Forest
from .gardens import Garden
from .trees import NodeRef

logger = logging.getLogger(__name__)


class RegularKind(str, Enum):
    """Top-level shape of a regular object."""

    TRIVIAL = "trivial"
    TYPE1 = "type1"
    TYPE2 = "type2"
    TREE = "tree"


# -- skeleton --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Skeleton:
    """Prime garden left after collapsing every regular insertion.

    Attributes:
        garden: The prime garden.
        couples: Nontrivial regular couple hanging at each skeleton leaf pair,
            keyed by the pair of global leaf indices (smaller first).
        trees: Nontrivial regular paired tree sitting above a skeleton node,
            keyed by the skeleton node; its lone leaf marks where the node's
            own subtree continues.
        origin: Skeleton node -> node of the original garden with the same key.
        top: Skeleton node -> original node whose subtree it stands for.
    """

    garden: Garden
    couples: dict[tuple[int, int], Garden] = field(default_factory=dict)
    trees: dict[NodeRef, Garden] = field(default_factory=dict)
    origin: dict[NodeRef, NodeRef] = field(default_factory=dict)
    top: dict[NodeRef, NodeRef] = field(default_factory=dict)

    @property
    def is_trivial(self) -> bool:
        return self.garden.order == 0


def collapse(g: Garden) -> tuple[Forest, Forest, dict[int, int], dict[int, NodeRef]]:
    """Greedily collapse mini-couples and mini-trees.

    Returns the original forest, the collapsed forest, the ``top`` map from
    surviving keys to the original key they stand for, and the key -> NodeRef
    map of ``g``.
    """
    forest, refs = Forest.from_garden(g)
    work = forest.copy()
    top = {k: k for k in refs}
    while True:
        mc = work.find_mini_couple()
        if mc is not None:
            work.collapse_mini_couple(*mc)
            continue
        mt = work.find_mini_tree()
        if mt is not None:
            na, nb, rest = mt
            work.collapse_mini_tree(na, nb, rest)
            top[rest] = top[na]
            continue
        break
    return forest, work, top, refs


def skeleton(g: Garden) -> Skeleton:
    """Compute the prime skeleton of ``g`` with its regular attachments."""
    forest, work, top, refs = collapse(g)
    prime, skel_refs = work.to_garden()
    key_of = {ref: k for k, ref in skel_refs.items()}
    signs = forest.signs()

    couples: dict[tuple[int, int], Garden] = {}
    for i, j in prime.pairs():
        ki, kj = key_of[prime.leaf_refs[i]], key_of[prime.leaf_refs[j]]
        ti, tj = top[ki], top[kj]
        roots = [ti, tj] if signs[ti] > 0 else [tj, ti]
        q, _ = forest.extract(roots).to_garden()
        if q.order > 0:
            couples[(i, j)] = q

    trees: dict[NodeRef, Garden] = {}
    for k, ref in skel_refs.items():
        if top[k] == k:
            continue
        if work.is_leaf(k) and work.partner.get(k) is not None:
            continue
        t, _ = forest.extract([top[k]], cut=k).to_garden()
        trees[ref] = t

    origin = {ref: refs[k] for k, ref in skel_refs.items()}
    tops = {ref: refs[top[k]] for k, ref in skel_refs.items()}
    logger.debug(
        f"Skeleton of order {prime.order} with {len(couples)} couple and "
        f"{len(trees)} tree attachments"
    )
    return Skeleton(prime, couples, trees, origin, tops)


def _rekey(src: Forest, offset: int) -> Forest:
    def mv(k):
        return None if k is None else k + offset

    return Forest(
        [mv(r) for r in src.roots],
        list(src.root_signs),
        {mv(k): [mv(c) for c in v] for k, v in src.children.items()},
        {mv(k): mv(v) for k, v in src.partner.items()},
    )


def reattach(sk: Skeleton) -> Garden:
    """Insert every attachment back into the skeleton (inverse of ``skeleton``)."""
    forest, skel_refs = Forest.from_garden(sk.garden)
    key_of = {ref: k for k, ref in skel_refs.items()}
    signs = forest.signs()

    for (i, j), q in sk.couples.items():
        qf, _ = Forest.from_garden(q)
        qf = _rekey(qf, forest.fresh_key())
        forest.children.update(qf.children)
        forest.partner.update(qf.partner)
        for idx in (i, j):
            leaf = key_of[sk.garden.leaf_refs[idx]]
            root = qf.roots[0] if signs[leaf] > 0 else qf.roots[1]
            forest.replace(leaf, root)
            forest.partner.pop(leaf, None)

    for ref, t in sk.trees.items():
        node = key_of[ref]
        tf, _ = Forest.from_garden(t)
        tf = _rekey(tf, forest.fresh_key())
        lone = next(k for k, v in tf.partner.items() if v is None)
        forest.children.update(tf.children)
        forest.replace(node, tf.roots[0])
        forest.replace(lone, node)
        forest.partner.update({k: v for k, v in tf.partner.items() if k != lone})
    garden, _ = forest.to_garden()
    return garden


def is_regular(q: Garden) -> bool:
    """A couple or paired tree is regular iff it collapses completely."""
    if not (q.is_couple or q.is_paired_tree):
        raise InvalidGardenError("Regularity is defined for couples and paired trees")
    _, work, _, _ = collapse(q)
    return work.order() == 0


# -- structure ----------------------------------------------------------------


@dataclass(frozen=True)
class SubCouple:
    """Regular couple sitting at one child slot of each of two nodes.

    ``slots`` gives the slot under the first and second node; the couple's
    tree whose sign matches a slot's sign occupies that slot.
    """

    slots: tuple[int, int]
    structure: "RegularStructure"


@dataclass(frozen=True)
class ChainPair:
    """Two chain positions (1-based, ``a < b``) joined by two sub-couples."""

    a: int
    b: int
    couples: tuple[SubCouple, SubCouple]


@dataclass(frozen=True)
class RegularChain:
    sign: int
    nodes: tuple[NodeRef, ...]
    slots: tuple[int, ...]
    pairs: tuple[ChainPair, ...]

    @property
    def legal(self) -> bool:
        spans = [(p.a, p.b) for p in self.pairs]
        return not any(a < b < c < d for a, c in spans for b, d in spans)

    @property
    def dominant(self) -> bool:
        return all(p.a == 2 * i + 1 and p.b == 2 * i + 2 for i, p in enumerate(self.pairs))


@dataclass(frozen=True)
class RegularStructure:
    """Decomposition of a regular couple or regular tree.

    Node references point into the garden the decomposition was computed on,
    so nested structures share one coordinate system.
    """

    kind: RegularKind
    roots: tuple[NodeRef, ...]
    sign: int = 1
    lone: Optional[NodeRef] = None
    subs: tuple[SubCouple, ...] = ()
    chains: tuple[RegularChain, ...] = ()
    lp: Optional["RegularStructure"] = None

    @property
    def is_tree(self) -> bool:
        return self.lone is not None

    def children(self) -> Iterator["RegularStructure"]:
        yield from (s.structure for s in self.subs)
        for chain in self.chains:
            for pair in chain.pairs:
                yield from (s.structure for s in pair.couples)
        if self.lp is not None:
            yield self.lp

    @property
    def order(self) -> int:
        own = 2 if self.kind == RegularKind.TYPE1 else 0
        own += sum(len(c.nodes) for c in self.chains)
        return own + sum(c.order for c in self.children())

    @property
    def dominant(self) -> bool:
        return all(c.dominant for c in self.chains) and all(
            c.dominant for c in self.children()
        )

    def links(self) -> list[tuple[NodeRef, NodeRef]]:
        """All links; the first entry of each link is the node selected into N^ch."""
        out = []
        if self.kind == RegularKind.TYPE1:
            out.append((self.roots[0], self.roots[1]))
        for chain in self.chains:
            for pair in chain.pairs:
                out.append((chain.nodes[pair.a - 1], chain.nodes[pair.b - 1]))
        for c in self.children():
            out.extend(c.links())
        return out

    def chosen(self) -> set[NodeRef]:
        """The set N^ch: one node from each link."""
        return {a for a, _ in self.links()}


class _NotRegular(Exception):
    pass


class _Decomposer:
    def __init__(self, forest: Forest, refs: dict[int, NodeRef]):
        self.f = forest
        self.refs = refs
        self.signs = forest.signs()

    def _cross(self, other: set[int]) -> Callable[[int], bool]:
        def crosses(k: int) -> bool:
            return any(self.f.partner.get(x) in other for x in self.f.leaves_under(k))

        return crosses

    def couple(self, plus: int, minus: int) -> RegularStructure:
        f = self.f
        side_p, side_m = set(f.preorder(plus)), set(f.preorder(minus))
        chain_p, end_p = self._follow(plus, self._cross(side_m))
        chain_m, end_m = self._follow(minus, self._cross(side_p))
        roots = (self.refs[plus], self.refs[minus])

        if not chain_p and not chain_m:
            if f.is_leaf(plus) and f.is_leaf(minus):
                if f.partner.get(plus) != minus:
                    raise _NotRegular
                return RegularStructure(RegularKind.TRIVIAL, roots)
            if f.is_leaf(plus) or f.is_leaf(minus):
                raise _NotRegular
            a, b = f.children[plus], f.children[minus]
            if not f.closed([a[1], b[1]]):
                raise _NotRegular
            if f.closed([a[0], b[0]]) and f.closed([a[2], b[2]]):
                slots = ((0, 0), (1, 1), (2, 2))
            elif f.closed([a[0], b[2]]) and f.closed([a[2], b[0]]):
                slots = ((0, 2), (1, 1), (2, 0))
            else:
                raise _NotRegular
            subs = tuple(SubCouple((s, t), self._oriented(a[s], b[t])) for s, t in slots)
            return RegularStructure(RegularKind.TYPE1, roots, subs=subs)

        lp = self._oriented(end_p, end_m)
        if lp.kind not in (RegularKind.TRIVIAL, RegularKind.TYPE1):
            raise _NotRegular
        chains = (self._chain(1, chain_p, end_p), self._chain(-1, chain_m, end_m))
        return RegularStructure(RegularKind.TYPE2, roots, chains=chains, lp=lp)

    def tree(self, root: int, lone: int) -> RegularStructure:
        f = self.f
        roots = (self.refs[root],)
        sign = self.signs[root]
        if root == lone:
            return RegularStructure(RegularKind.TRIVIAL, roots, sign=sign, lone=self.refs[lone])
        below = {}
        for k in f.preorder(root):
            for c in f.children.get(k, ()):
                below[c] = k
        path = []
        k = lone
        while k != root:
            k = below[k]
            path.append(k)
        path.reverse()
        chain = self._chain(sign, path, lone)
        return RegularStructure(
            RegularKind.TREE, roots, sign=sign, lone=self.refs[lone], chains=(chain,)
        )

    def _oriented(self, x: int, y: int) -> RegularStructure:
        return self.couple(x, y) if self.signs[x] > 0 else self.couple(y, x)

    def _follow(self, root: int, crosses: Callable[[int], bool]) -> tuple[list[int], int]:
        chain = []
        x = root
        while not self.f.is_leaf(x):
            hits = [c for c in self.f.children[x] if crosses(c)]
            if len(hits) == 3:
                break
            if len(hits) != 1:
                raise _NotRegular
            chain.append(x)
            x = hits[0]
        return chain, x

    def _chain(self, sign: int, nodes: list[int], end: int) -> RegularChain:
        f = self.f
        if len(nodes) % 2:
            raise _NotRegular
        nxt = nodes[1:] + [end]
        slots = [f.children[n].index(c) for n, c in zip(nodes, nxt)]
        owner: dict[int, tuple[int, int]] = {}
        for i, n in enumerate(nodes):
            for s, c in enumerate(f.children[n]):
                if s != slots[i]:
                    for k in f.preorder(c):
                        owner[k] = (i, s)

        match: dict[tuple[int, int], tuple[int, int]] = {}
        for i, n in enumerate(nodes):
            for s, c in enumerate(f.children[n]):
                if s == slots[i]:
                    continue
                inside = set(f.preorder(c))
                targets = {
                    owner.get(f.partner.get(x))
                    for x in f.leaves_under(c)
                    if f.partner.get(x) not in inside
                }
                if len(targets) != 1 or None in targets:
                    raise _NotRegular
                j, t = targets.pop()
                if j == i or not f.closed([c, f.children[nodes[j]][t]]):
                    raise _NotRegular
                match[(i, s)] = (j, t)

        pairs = []
        for i in range(len(nodes)):
            mine = sorted((s, jt) for (ii, s), jt in match.items() if ii == i)
            partners = {jt[0] for _, jt in mine}
            if len(partners) != 1:
                raise _NotRegular
            j = partners.pop()
            if i > j:
                continue
            subs = []
            for s, (_, t) in mine:
                if match.get((j, t)) != (i, s):
                    raise _NotRegular
                sub = self._oriented(f.children[nodes[i]][s], f.children[nodes[j]][t])
                subs.append(SubCouple((s, t), sub))
            pairs.append(ChainPair(i + 1, j + 1, (subs[0], subs[1])))
        chain = RegularChain(sign, tuple(self.refs[n] for n in nodes), tuple(slots), tuple(pairs))
        if not chain.legal:
            raise _NotRegular
        return chain


def decompose_couple_at(g: Garden, plus: NodeRef, minus: NodeRef) -> Optional[RegularStructure]:
    """Decompose the couple formed inside ``g`` by the subtrees at two nodes.

    Returns None when the two subtrees do not form a regular couple.
    """
    forest, refs = Forest.from_garden(g)
    key_of = {ref: k for k, ref in refs.items()}
    kp, km = key_of[plus], key_of[minus]
    if not forest.closed([kp, km]):
        return None
    try:
        return _Decomposer(forest, refs)._oriented(kp, km)
    except _NotRegular:
        return None


def decompose_tree_at(g: Garden, root: NodeRef, lone: NodeRef) -> Optional[RegularStructure]:
    """Decompose the paired tree between ``root`` and a descendant ``lone``."""
    if not g.is_descendant(lone, root):
        return None
    forest, refs = Forest.from_garden(g)
    key_of = {ref: k for k, ref in refs.items()}
    kr, kl = key_of[root], key_of[lone]
    try:
        sub = forest.extract([kr], cut=kl)
        return _Decomposer(sub, refs).tree(kr, kl)
    except (_NotRegular, InvalidGardenError):
        return None


def regular_decompose(q: Garden) -> Optional[RegularStructure]:
    """Structure decomposition of a regular couple or paired tree.

    Returns None for objects that are not regular.
    """
    if q.is_couple:
        return decompose_couple_at(q, (0, 0), (1, 0))
    if q.is_paired_tree:
        return decompose_tree_at(q, (0, 0), q.lone_ref)
    raise InvalidGardenError("Regularity is defined for couples and paired trees")


# -- reconstruction ----------------------------------------------------------


class _Builder:
    def __init__(self):
        self.children: dict[int, list[int]] = {}
        self.partner: dict[int, Optional[int]] = {}
        self.next = 0

    def node(self) -> int:
        self.next += 1
        return self.next - 1

    @staticmethod
    def slot_sign(parent_sign: int, slot: int) -> int:
        return -parent_sign if slot == 1 else parent_sign

    def couple(self, s: RegularStructure) -> tuple[int, int]:
        """Build a couple; returns (plus root, minus root)."""
        if s.kind == RegularKind.TRIVIAL:
            a, b = self.node(), self.node()
            self.partner[a], self.partner[b] = b, a
            return a, b
        if s.kind == RegularKind.TYPE1:
            rp, rm = self.node(), self.node()
            self.children[rp], self.children[rm] = [None] * 3, [None] * 3
            for sub in s.subs:
                self._place(sub, (rp, 1), (rm, -1))
            return rp, rm
        xp, xm = self.couple(s.lp)
        ends = {1: xp, -1: xm}
        roots = [self._chain(c, ends) for c in s.chains]
        return roots[0], roots[1]

    def _place(self, sub: SubCouple, first: tuple[int, int], second: tuple[int, int]):
        plus, minus = self.couple(sub.structure)
        for (node, sign), slot in zip((first, second), sub.slots):
            self.children[node][slot] = plus if self.slot_sign(sign, slot) > 0 else minus

    def _chain(self, chain: RegularChain, ends: dict[int, int]) -> int:
        if not chain.nodes:
            return ends[chain.sign]
        keys = [self.node() for _ in chain.nodes]
        signs = [chain.sign]
        for slot in chain.slots[:-1]:
            signs.append(self.slot_sign(signs[-1], slot))
        for k in keys:
            self.children[k] = [None] * 3
        for i, k in enumerate(keys[:-1]):
            self.children[k][chain.slots[i]] = keys[i + 1]
        end_sign = self.slot_sign(signs[-1], chain.slots[-1])
        self.children[keys[-1]][chain.slots[-1]] = ends[end_sign]
        for pair in chain.pairs:
            a, b = pair.a - 1, pair.b - 1
            for sub in pair.couples:
                self._place(sub, (keys[a], signs[a]), (keys[b], signs[b]))
        return keys[0]


def reconstruct(s: RegularStructure) -> Garden:
    """Rebuild the couple or paired tree described by a decomposition."""
    b = _Builder()
    if s.is_tree:
        lone = b.node()
        b.partner[lone] = None
        root = b._chain(s.chains[0], {s.sign: lone}) if s.chains else lone
        forest = Forest([root], [s.sign], b.children, b.partner)
    else:
        plus, minus = b.couple(s)
        forest = Forest([plus, minus], [1, -1], b.children, b.partner)
    garden, _ = forest.to_garden()
    return garden


# -- layers ------------------------------------------------------------------


def incoherency_index(s: RegularStructure, layer: Callable[[NodeRef], int]) -> int:
    """Number of links whose two nodes sit in different layers."""
    return sum(1 for a, b in s.links() if layer(a) != layer(b))


def is_coherent(s: RegularStructure, layer: Callable[[NodeRef], int]) -> bool:
    return incoherency_index(s, layer) == 0


def _couple_nodes(g: Garden, s: RegularStructure) -> list[NodeRef]:
    return [r for root in s.roots for r in g.descendants(root)]


def layer_structure_violations(
    g: Garden,
    s: RegularStructure,
    layer: Callable[[NodeRef], int],
    q: int,
    q_other: int,
) -> list[str]:
    """Check the layer pattern forced on a coherent regular object.

    For couples ``q`` and ``q_other`` are the parent layers of the plus and
    minus roots. For trees ``q`` is the parent layer of the root and
    ``q_other`` the layer of the lone leaf. Returns one message per
    violated condition.
    """
    problems: list[str] = []

    def flat(nodes: list[NodeRef], value: int, what: str):
        bad = [n for n in nodes if layer(n) != value]
        if bad:
            problems.append(f"{what}: nodes {bad} not in layer {value}")

    def free_chain(chain: RegularChain, hi: int, lo: int, what: str):
        values = [layer(n) for n in chain.nodes]
        seq = [hi] + values + [lo]
        if any(x < y for x, y in zip(seq, seq[1:])):
            problems.append(f"{what}: layers {values} not monotone between {hi} and {lo}")
        for pair in chain.pairs:
            v = layer(chain.nodes[pair.a - 1])
            if layer(chain.nodes[pair.b - 1]) != v:
                problems.append(f"{what}: pair {pair.a},{pair.b} split across layers")
            for sub in pair.couples:
                flat(_couple_nodes(g, sub.structure), v, f"{what} pair {pair.a},{pair.b}")

    if s.is_tree:
        if s.chains:
            free_chain(s.chains[0], q, q_other, "tree chain")
        return problems

    lo = min(q, q_other)
    if s.kind in (RegularKind.TRIVIAL, RegularKind.TYPE1):
        flat(_couple_nodes(g, s), lo, s.kind.value)
        return problems

    plus, minus = s.chains
    high, low = (plus, minus) if q >= q_other else (minus, plus)
    hi = max(q, q_other)
    flat(list(low.nodes), lo, "low chain")
    for pair in low.pairs:
        for sub in pair.couples:
            flat(_couple_nodes(g, sub.structure), lo, "low chain couples")
    flat(_couple_nodes(g, s.lp), lo, "end couple")
    free_chain(high, hi, lo, "high chain")
    return problems
