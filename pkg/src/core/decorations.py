"""Momentum decorations of gardens.

A decoration assigns an integer lattice index vector to every node such that
each branching node carries k_n = k_{n1} - k_{n2} + k_{n3} and paired leaves
carry equal vectors. Physical momenta are ``spacing * k``.
"""

import logging
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from itertools import product
from typing import Iterator, Optional

import numpy as np

from ..models.errors import DecorationError
from .gardens import Garden
from .trees import NodeRef

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class GardenDecoration:
    garden: Garden
    k: dict[NodeRef, np.ndarray]
    spacing: float = 1.0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        g = self.garden
        missing = [r for r in g.node_refs if r not in self.k]
        if missing:
            raise DecorationError(f"Decoration misses nodes {missing}")
        for ref in g.branching_refs:
            a, b, c = (self.k[x] for x in g.children(ref))
            if not np.array_equal(self.k[ref], a - b + c):
                raise DecorationError(f"Momentum relation fails at node {ref}")
        for i, j in g.pairs():
            if not np.array_equal(self.k[g.leaf_refs[i]], self.k[g.leaf_refs[j]]):
                raise DecorationError(f"Paired leaves {i} and {j} differ")

    @property
    def dimension(self) -> int:
        return len(next(iter(self.k.values())))

    def momentum(self, ref: NodeRef) -> np.ndarray:
        return self.spacing * self.k[ref]

    def root_momenta(self) -> list[np.ndarray]:
        return [self.k[(ti, 0)] for ti in range(self.garden.width)]

    def omega_index(self, ref: NodeRef) -> int:
        """Resonance factor in index units (exact integer)."""
        a, b, c = (self.k[x] for x in self.garden.children(ref))
        n = self.k[ref]
        return int(a @ a - b @ b + c @ c - n @ n)

    def omega(self, ref: NodeRef) -> float:
        return self.spacing**2 * self.omega_index(ref)

    def link_vectors(self, ref: NodeRef) -> tuple[np.ndarray, np.ndarray]:
        """(x, y) = (k_{n1} - k_n, k_n - k_{n3}) at a branching node."""
        a, _, c = (self.k[x] for x in self.garden.children(ref))
        n = self.k[ref]
        return a - n, n - c

    def epsilon(self, ref: NodeRef) -> int:
        a, b, c = (self.k[x] for x in self.garden.children(ref))
        return epsilon(a, b, c)


def epsilon(k1, k2, k3) -> int:
    """Resonance coefficient: +1 generic, -1 if all equal, 0 if k2 equals exactly one side."""
    k1, k2, k3 = (np.asarray(x) for x in (k1, k2, k3))
    e12 = np.array_equal(k1, k2)
    e23 = np.array_equal(k2, k3)
    if e12 and e23:
        return -1
    if e12 or e23:
        return 0
    return 1


def omega(k1, k2, k3, k) -> float:
    """|k1|^2 - |k2|^2 + |k3|^2 - |k|^2 for a quadruple with k1 - k2 + k3 = k.

    Raises:
        DecorationError: If the momentum relation fails.
    """
    k1, k2, k3, k = (np.asarray(x) for x in (k1, k2, k3, k))
    if not np.allclose(k1 - k2 + k3, k, rtol=0.0, atol=1e-12):
        raise DecorationError("Momentum relation k1 - k2 + k3 = k fails")
    return float(k1 @ k1 - k2 @ k2 + k3 @ k3 - k @ k)


def omega_factored(k1, k3, k) -> float:
    """Factored form 2<k1 - k, k - k3>."""
    k1, k3, k = (np.asarray(x) for x in (k1, k3, k))
    return float(2 * (k1 - k) @ (k - k3))


def decorate(
    g: Garden,
    pair_values: dict[tuple[int, int], np.ndarray],
    lone_value: Optional[np.ndarray] = None,
    spacing: float = 1.0,
) -> GardenDecoration:
    """Build the decoration fixed by one vector per leaf pair.

    Args:
        g: Garden or paired tree.
        pair_values: Vector for each pair ``(i, j)`` of ``g.pairs()``.
        lone_value: Vector of the lone leaf, for paired trees.
        spacing: Physical momentum per index unit.
    """
    leaf_k: dict[int, np.ndarray] = {}
    for i, j in g.pairs():
        if (i, j) not in pair_values:
            raise DecorationError(f"No value for leaf pair {(i, j)}")
        leaf_k[i] = leaf_k[j] = np.asarray(pair_values[(i, j)], dtype=np.int64)
    if g.lone is not None:
        if lone_value is None:
            raise DecorationError("Paired tree needs a lone-leaf value")
        leaf_k[g.lone] = np.asarray(lone_value, dtype=np.int64)

    k: dict[NodeRef, np.ndarray] = {}
    for ti, tree in enumerate(g.trees):
        for n in reversed(range(tree.size)):
            ref = (ti, n)
            if tree.is_leaf(n):
                k[ref] = leaf_k[g.leaf_index[ref]]
            else:
                a, b, c = (k[(ti, x)] for x in tree.children[n])
                k[ref] = a - b + c
    return GardenDecoration(g, k, spacing)


def random_decoration(
    g: Garden,
    rng: np.random.Generator,
    dimension: int = 2,
    bound: int = 3,
    spacing: float = 1.0,
) -> GardenDecoration:
    """Decoration with independent uniform integer pair vectors in [-bound, bound]^d."""
    values = {p: rng.integers(-bound, bound + 1, size=dimension) for p in g.pairs()}
    lone = rng.integers(-bound, bound + 1, size=dimension) if g.lone is not None else None
    return decorate(g, values, lone, spacing)


# -- decorations with prescribed roots --------------------------------------


@dataclass(frozen=True)
class PairSystem:
    """Split of leaf pairs into free pairs and pairs fixed by root momenta.

    Tree roots are vertices and pairs joining distinct trees are edges; the
    edges of a BFS spanning forest are solved from the roots, every other
    pair is free.
    """

    garden: Garden

    @cached_property
    def _layout(self):
        g = self.garden
        tree_of = [ti for ti, _ in g.leaf_refs]
        pairs = g.pairs()
        adjacency: dict[int, list[int]] = {t: [] for t in range(g.width)}
        for p, (i, j) in enumerate(pairs):
            if tree_of[i] != tree_of[j]:
                adjacency[tree_of[i]].append(p)
                adjacency[tree_of[j]].append(p)
        seen: set[int] = set()
        spanning: list[int] = []
        parent_edge: dict[int, int] = {}
        components: list[list[int]] = []
        for start in range(g.width):
            if start in seen:
                continue
            comp = [start]
            seen.add(start)
            queue = deque([start])
            while queue:
                t = queue.popleft()
                for p in adjacency[t]:
                    i, j = pairs[p]
                    other = tree_of[j] if tree_of[i] == t else tree_of[i]
                    if other not in seen:
                        seen.add(other)
                        comp.append(other)
                        spanning.append(p)
                        parent_edge[other] = p
                        queue.append(other)
            components.append(comp)
        free = [p for p in range(len(pairs)) if p not in set(spanning)]
        return tree_of, pairs, spanning, parent_edge, components, free

    @property
    def free_pairs(self) -> list[tuple[int, int]]:
        _, pairs, _, _, _, free = self._layout
        return [pairs[p] for p in free]

    @property
    def dependent_pairs(self) -> list[tuple[int, int]]:
        _, pairs, spanning, _, _, _ = self._layout
        return [pairs[p] for p in spanning]

    @property
    def components(self) -> list[list[int]]:
        return self._layout[4]

    def solve(
        self, roots: list[np.ndarray], free_values: dict[tuple[int, int], np.ndarray]
    ) -> Optional[dict[tuple[int, int], np.ndarray]]:
        """Pair vectors reproducing ``roots``; None if the roots are inconsistent."""
        g = self.garden
        tree_of, pairs, _, parent_edge, components, _ = self._layout
        signs = g.leaf_signs
        values = {pairs.index(p): np.asarray(v, dtype=np.int64) for p, v in free_values.items()}
        roots = [np.asarray(r, dtype=np.int64) for r in roots]
        dim = len(roots[0])

        # residual[t] = zeta_t k_t - sum of known signed leaf vectors in tree t
        residual = {t: g.signature[t] * roots[t] for t in range(g.width)}
        for p, (i, j) in enumerate(pairs):
            if p in values and tree_of[i] != tree_of[j]:
                residual[tree_of[i]] = residual[tree_of[i]] - signs[i] * values[p]
                residual[tree_of[j]] = residual[tree_of[j]] - signs[j] * values[p]

        for comp in components:
            total = sum((residual[t] for t in comp), np.zeros(dim, dtype=np.int64))
            if np.any(total != 0):
                return None
            # peel BFS order backwards: every non-root tree fixes its parent edge
            for t in reversed(comp[1:]):
                p = parent_edge[t]
                i, j = pairs[p]
                leaf = i if tree_of[i] == t else j
                other = j if leaf == i else i
                v = signs[leaf] * residual[t]
                values[p] = v
                residual[t] = residual[t] - signs[leaf] * v
                residual[tree_of[other]] = residual[tree_of[other]] - signs[other] * v
        return {pairs[p]: v for p, v in values.items()}


def decorations_with_roots(
    g: Garden,
    roots: list[np.ndarray],
    grid,
    lone_value: Optional[np.ndarray] = None,
) -> Iterator[GardenDecoration]:
    """Every decoration of ``g`` with given root vectors and all nodes on ``grid``.

    Args:
        g: Garden or paired tree.
        roots: Root index vectors, one per tree.
        grid: A ``LatticeGrid``; every node vector must lie inside it.
        lone_value: Lone-leaf vector for paired trees (defaults to the root).
    """
    system = PairSystem(g)
    free = system.free_pairs
    if g.lone is not None and lone_value is None:
        lone_value = roots[0]
    count = 0
    for combo in product(range(len(grid)), repeat=len(free)):
        free_values = {p: grid.indices[c] for p, c in zip(free, combo)}
        values = free_values if g.lone is not None else system.solve(roots, free_values)
        if values is None:
            return
        if any(not grid.contains(v) for v in values.values()):
            continue
        dec = decorate(g, values, lone_value, grid.spacing)
        if g.lone is not None and not np.array_equal(dec.k[(0, 0)], np.asarray(roots[0])):
            continue
        if any(not grid.contains(v) for v in dec.k.values()):
            continue
        count += 1
        yield dec
    logger.debug(f"Garden of order {g.order} has {count} decorations on the grid")


__all__ = [
    "GardenDecoration",
    "PairSystem",
    "decorate",
    "decorations_with_roots",
    "epsilon",
    "omega",
    "omega_factored",
    "random_decoration",
]
