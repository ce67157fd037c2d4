"""Evaluation of garden, couple and paired-tree expressions.

A diagram value is a sum over lattice decorations of a signed product of
resonance coefficients, an exact time integral over the layered domain and
input spectra at the + leaves. Sums are vectorised over decorations; time
integrals decompose each same-layer component into chains via its linear
extensions.
"""

import logging
from dataclasses import dataclass, field
from functools import reduce
from typing import Callable, Hashable, Iterator, Optional, Sequence

import numpy as np

from ..config import config
from ..models.errors import CapExceededError, DecorationError, InvalidLayeringError
from ..utils.lattice import LatticeGrid, Scaling
from ..utils.quadrature import chain_integral
from .decorations import PairSystem
from .gardens import Garden
from .layering import Layering
from .trees import NodeRef, SignedTree

logger = logging.getLogger(__name__)

SpectrumFn = Callable[[np.ndarray], np.ndarray]


def epsilon_table(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Row-wise resonance coefficient of ``(count, d)`` index arrays."""
    e12 = np.all(a == b, axis=-1)
    e23 = np.all(b == c, axis=-1)
    return np.where(e12 & e23, -1, np.where(e12 | e23, 0, 1))


def omega_table(a: np.ndarray, b: np.ndarray, c: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Row-wise |a|^2 - |b|^2 + |c|^2 - |n|^2 in index units."""
    sq = lambda x: np.sum(x * x, axis=-1)  # noqa: E731
    return sq(a) - sq(b) + sq(c) - sq(n)


# -- time integrals ---------------------------------------------------------


@dataclass(frozen=True)
class TimeForest:
    """Branching nodes carrying time variables, their timed children and layers."""

    kids: dict[Hashable, tuple[Hashable, ...]]
    layer: dict[Hashable, int]
    tops: tuple[Hashable, ...]

    @classmethod
    def of_garden(cls, g: Garden, lay: Layering) -> "TimeForest":
        kids = {
            n: tuple(c for c in g.children(n) if not g.is_leaf(c)) for n in g.branching_refs
        }
        tops = tuple((ti, 0) for ti, t in enumerate(g.trees) if t.order > 0)
        return cls(kids, {n: lay[n] for n in g.branching_refs}, tops)

    @classmethod
    def of_tree(cls, tree: SignedTree, layer: int = 0) -> "TimeForest":
        kids = {
            n: tuple(c for c in tree.children[n] if not tree.is_leaf(c)) for n in tree.branching
        }
        tops = (0,) if tree.order > 0 else ()
        return cls(kids, {n: layer for n in tree.branching}, tops)


def linear_extensions(
    members: Sequence[Hashable], below: dict[Hashable, tuple[Hashable, ...]]
) -> Iterator[tuple[Hashable, ...]]:
    """Orderings of ``members`` placing every node after all of its ``below`` nodes."""
    members = list(members)

    def extend(placed: tuple, remaining: list) -> Iterator[tuple]:
        if not remaining:
            yield placed
            return
        done = set(placed)
        for x in remaining:
            if all(c in done for c in below.get(x, ())):
                yield from extend(placed + (x,), [y for y in remaining if y != x])

    yield from extend((), members)


def time_integral(
    forest: TimeForest,
    rates: dict[Hashable, np.ndarray],
    uppers: dict[Hashable, float],
    floor: Optional[tuple[Hashable, float]] = None,
    count: int = 1,
) -> np.ndarray:
    """Integral of prod_n exp(i c_n t_n) over the layered time domain.

    Node n lives in [L_n, L_n + 1] below its parent's time; top nodes also sit
    below ``uppers[top]``. ``floor = (node, s)`` adds t_node > s.

    Raises:
        InvalidLayeringError: If an upper limit does not exceed its top's layer.
    """
    threshold = config.diagram.taylor_threshold
    degree = config.diagram.taylor_degree

    def component(top: Hashable, upper: float) -> np.ndarray:
        level = forest.layer[top]
        members, stack = [], [top]
        while stack:
            n = stack.pop()
            members.append(n)
            stack.extend(c for c in forest.kids[n] if forest.layer[c] == level)
        inside = set(members)
        below = {n: tuple(c for c in forest.kids[n] if c in inside) for n in members}
        const = np.ones(count, dtype=complex)
        for n in members:
            for c in forest.kids[n]:
                if c not in inside:
                    const = const * component(c, forest.layer[c] + 1.0)
        hi = min(upper, level + 1.0)
        total = np.zeros(count, dtype=complex)
        for order in linear_extensions(members, below):
            fl = None
            if floor is not None and floor[0] in inside:
                fl = (order.index(floor[0]), floor[1])
            stacked = np.stack([np.broadcast_to(rates[n], (count,)) for n in order], axis=-1)
            total = total + chain_integral(stacked, float(level), hi, fl, threshold, degree)
        return total * const

    out = np.ones(count, dtype=complex)
    for top in forest.tops:
        upper = uppers[top]
        if upper <= forest.layer[top]:
            raise InvalidLayeringError(
                f"Upper time {upper} does not exceed the layer {forest.layer[top]} of {top}"
            )
        out = out * component(top, upper)
    return out


# -- decoration tables ------------------------------------------------------


@dataclass(frozen=True)
class DecorationTable:
    """All decorations of a garden as ``(count, d)`` index arrays per node."""

    garden: Garden
    k: dict[NodeRef, np.ndarray]
    spacing: float

    @property
    def count(self) -> int:
        return len(next(iter(self.k.values())))

    def epsilon(self, ref: NodeRef) -> np.ndarray:
        a, b, c = (self.k[x] for x in self.garden.children(ref))
        return epsilon_table(a, b, c)

    def omega(self, ref: NodeRef) -> np.ndarray:
        """Physical resonance factor per decoration."""
        a, b, c = (self.k[x] for x in self.garden.children(ref))
        return self.spacing**2 * omega_table(a, b, c, self.k[ref])


def _free_grid(grid: LatticeGrid, slots: int) -> np.ndarray:
    total = len(grid) ** slots
    cap = config.diagram.max_decorations
    if total > cap:
        raise CapExceededError("Decoration count", total, cap)
    if slots == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.indices((len(grid),) * slots).reshape(slots, -1).T


def decoration_table(
    g: Garden,
    roots: Sequence[np.ndarray],
    grid: LatticeGrid,
    lone_value: Optional[np.ndarray] = None,
) -> DecorationTable:
    """Every decoration of ``g`` with the given root index vectors and all nodes on ``grid``."""
    dim = grid.dimension
    roots = [np.asarray(r, dtype=np.int64) for r in roots]
    system = PairSystem(g)
    free = system.free_pairs
    combos = _free_grid(grid, len(free))
    count = len(combos)
    free_values = {p: grid.indices[combos[:, i]] for i, p in enumerate(free)}
    if g.lone is not None:
        values = free_values
        lone = roots[0] if lone_value is None else np.asarray(lone_value, dtype=np.int64)
    else:
        values = system.solve(roots, free_values)
        lone = None
    if values is None:
        empty = {r: np.zeros((0, dim), np.int64) for r in g.node_refs}
        return DecorationTable(g, empty, grid.spacing)

    leaf_k: dict[int, np.ndarray] = {}
    for (i, j), v in values.items():
        leaf_k[i] = leaf_k[j] = np.broadcast_to(v, (count, dim))
    if lone is not None:
        leaf_k[g.lone] = np.broadcast_to(lone, (count, dim))
    k: dict[NodeRef, np.ndarray] = {}
    for ti, tree in enumerate(g.trees):
        for n in reversed(range(tree.size)):
            ref = (ti, n)
            if tree.is_leaf(n):
                k[ref] = leaf_k[g.leaf_index[ref]]
            else:
                a, b, c = (k[(ti, x)] for x in tree.children[n])
                k[ref] = a - b + c
    mask = np.ones(count, dtype=bool)
    for v in k.values():
        mask &= np.max(np.abs(v), axis=-1, initial=0) <= grid.cutoff
    if g.lone is not None:
        mask &= np.all(k[(0, 0)] == roots[0], axis=-1)
    k = {ref: np.ascontiguousarray(v[mask]) for ref, v in k.items()}
    logger.debug(f"Garden of order {g.order} has {int(mask.sum())} decorations on the grid")
    return DecorationTable(g, k, grid.spacing)


# -- diagram values ---------------------------------------------------------


@dataclass(frozen=True)
class DiagramValue:
    value: complex
    decorations: int

    @property
    def empty(self) -> bool:
        """True when no decoration survived the grid restriction."""
        return self.decorations == 0


@dataclass(frozen=True)
class DiagramSetup:
    """A layered garden with input spectra F_q (one callable per layer q)."""

    garden: Garden
    layering: Layering
    inputs: tuple[SpectrumFn, ...]
    scaling: Scaling
    grid: LatticeGrid
    shift: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        if self.layering.garden != self.garden:
            raise InvalidLayeringError("Layering belongs to a different garden")
        self.layering.validate()
        if abs(self.scaling.box_size - self.grid.box_size) > 1e-12:
            raise DecorationError("Scaling and grid disagree on the box size")
        top = max(self.layering[r] for r in self.garden.leaf_refs)
        if len(self.inputs) <= top:
            raise InvalidLayeringError(
                f"Leaves reach layer {top} but only {len(self.inputs)} input spectra were given"
            )

    def rates(self, table: DecorationTable) -> dict[NodeRef, np.ndarray]:
        """c_n = pi * zeta_n * delta L^(2 gamma) * Omega_n per decoration."""
        g = self.garden
        return {
            n: np.pi * g.sign(n) * self.scaling.phase * table.omega(n) for n in g.branching_refs
        }

    def momenta(self, index: np.ndarray) -> np.ndarray:
        k = index * self.grid.spacing
        return k if self.shift is None else k + np.asarray(self.shift, dtype=float)


def _evaluate(
    setup: DiagramSetup,
    table: DecorationTable,
    uppers: dict[NodeRef, float],
    floor: Optional[tuple[NodeRef, float]] = None,
) -> DiagramValue:
    g = setup.garden
    count = table.count
    if count == 0:
        logger.warning(f"No decorations of the order-{g.order} garden lie on the grid")
        return DiagramValue(0j, 0)
    weights = reduce(
        np.multiply, (table.epsilon(n) for n in g.branching_refs), np.ones(count, dtype=int)
    )
    forest = TimeForest.of_garden(g, setup.layering)
    times = time_integral(forest, setup.rates(table), uppers, floor, count)
    inputs = np.ones(count)
    for i, ref in enumerate(g.leaf_refs):
        if g.leaf_signs[i] == 1 and i != g.lone:
            feed = setup.inputs[setup.layering[ref]]
            inputs = inputs * np.asarray(feed(setup.momenta(table.k[ref])), dtype=float)
    prefactor = setup.scaling.coupling**g.order * g.zeta()
    return DiagramValue(complex(prefactor * np.sum(weights * times * inputs)), count)


def eval_garden(setup: DiagramSetup, t: float, roots: Sequence[np.ndarray]) -> DiagramValue:
    """K_G(t, k_1, ..., k_2R) for a garden with all roots below time ``t``."""
    g = setup.garden
    roots = [np.asarray(r, dtype=np.int64) for r in roots]
    if len(roots) != g.width:
        raise DecorationError(f"Expected {g.width} root vectors, got {len(roots)}")
    total = sum(s * r for s, r in zip(g.signature, roots))
    if np.any(total != 0):
        return DiagramValue(0j, 0)
    table = decoration_table(g, roots, setup.grid)
    return _evaluate(setup, table, {(ti, 0): t for ti in range(g.width)})


def eval_couple(setup: DiagramSetup, t: float, s: float, k: np.ndarray) -> DiagramValue:
    """K_Q*(t, s, k): the + tree below ``t`` and the - tree below ``s``."""
    g = setup.garden
    if not g.is_couple:
        raise DecorationError("eval_couple needs a couple")
    k = np.asarray(k, dtype=np.int64)
    table = decoration_table(g, [k, k], setup.grid)
    return _evaluate(setup, table, {(0, 0): t, (1, 0): s})


def eval_paired_tree(setup: DiagramSetup, t: float, s: float, k: np.ndarray) -> DiagramValue:
    """K_T*(t, s, k): lone leaf carries ``k`` and its parent's time exceeds ``s``."""
    g = setup.garden
    if not g.is_paired_tree:
        raise DecorationError("eval_paired_tree needs a paired tree")
    if not t > s:
        raise DecorationError(f"Paired-tree evaluation needs t > s, got t={t}, s={s}")
    k = np.asarray(k, dtype=np.int64)
    table = decoration_table(g, [k], setup.grid, lone_value=k)
    parent = g.parent(g.lone_ref)
    floor = None if parent is None else (parent, s)
    return _evaluate(setup, table, {(0, 0): t}, floor)


# -- single trees -----------------------------------------------------------


@dataclass(frozen=True)
class TreeTerms:
    """J_T(t)_k as a polynomial sum_i coef_i prod_l a^{zeta_l}(k_il)."""

    tree: SignedTree
    coefs: np.ndarray
    leaves: np.ndarray
    signs: np.ndarray

    @property
    def count(self) -> int:
        return len(self.coefs)

    def evaluate(self, a: np.ndarray, grid: LatticeGrid) -> complex:
        """Value for amplitudes ``a`` laid out in ``grid`` order."""
        a = np.asarray(a, dtype=complex)
        n = grid.cutoff
        strides = grid.side ** np.arange(grid.dimension - 1, -1, -1)
        flat = (self.leaves + n) @ strides
        vals = a[flat]
        vals = np.where(self.signs > 0, vals, np.conj(vals))
        return complex(np.sum(self.coefs * np.prod(vals, axis=-1)))


def tree_terms(
    tree: SignedTree,
    k: np.ndarray,
    grid: LatticeGrid,
    scaling: Scaling,
    t: float,
    p: int = 0,
) -> TreeTerms:
    """Every decoration of ``tree`` with root ``k`` on ``grid``, integrated over p < ... < t."""
    k = np.asarray(k, dtype=np.int64)
    leaves = tree.leaves
    signs = np.array([tree.signs[n] for n in leaves])
    rel = signs * tree.sign
    dim = grid.dimension
    combos = _free_grid(grid, len(leaves) - 1)
    free = grid.indices[combos]
    rest = np.einsum("l,cld->cd", rel[1:], free) if len(leaves) > 1 else 0
    first = (k - rest)[:, None, :] if len(leaves) > 1 else np.broadcast_to(k, (1, 1, dim))
    leaf_k = np.concatenate([first, free], axis=1)

    node_k: dict[int, np.ndarray] = {n: leaf_k[:, i] for i, n in enumerate(leaves)}
    for n in reversed(tree.branching):
        a, b, c = (node_k[x] for x in tree.children[n])
        node_k[n] = a - b + c
    mask = np.ones(len(leaf_k), dtype=bool)
    for v in node_k.values():
        mask &= np.max(np.abs(v), axis=-1, initial=0) <= grid.cutoff
    node_k = {n: v[mask] for n, v in node_k.items()}
    count = int(mask.sum())

    coefs = np.full(count, scaling.coupling**tree.order * tree.zeta(), dtype=complex)
    rates = {}
    for n in tree.branching:
        a, b, c = (node_k[x] for x in tree.children[n])
        coefs = coefs * epsilon_table(a, b, c)
        omega = grid.spacing**2 * omega_table(a, b, c, node_k[n])
        rates[n] = np.pi * tree.signs[n] * scaling.phase * omega
    if tree.order > 0 and count:
        coefs = coefs * time_integral(TimeForest.of_tree(tree, p), rates, {0: t}, count=count)
    return TreeTerms(tree, coefs, leaf_k[mask], signs)


__all__ = [
    "DecorationTable",
    "DiagramSetup",
    "DiagramValue",
    "TimeForest",
    "TreeTerms",
    "decoration_table",
    "epsilon_table",
    "eval_couple",
    "eval_garden",
    "eval_paired_tree",
    "linear_extensions",
    "omega_table",
    "time_integral",
    "tree_terms",
]
