"""Gaussian expectations, cumulants and the couple expansion of correlations."""

import logging
import math
from collections import Counter
from typing import Callable, Hashable, Iterator, Sequence

import networkx as nx
import numpy as np

from ..models.errors import CapExceededError
from ..utils.lattice import LatticeGrid, Scaling
from .diagrams import DiagramSetup, eval_couple, tree_terms
from .gardens import enumerate_couples
from .layering import Layering
from .trees import SignedTree

logger = logging.getLogger(__name__)

MAX_CUMULANT_ORDER = 8


def gaussian_expectation(factors: Sequence[tuple[Hashable, int]], variance) -> float:
    """E of prod a^{sign}(mode) for independent circular Gaussian modes.

    ``factors`` lists ``(mode, sign)``; ``variance(mode)`` is E|a_mode|^2.
    Each mode contributes p! variance^p when it carries p factors of each sign.
    """
    plus: Counter = Counter()
    minus: Counter = Counter()
    for mode, sign in factors:
        (plus if sign > 0 else minus)[mode] += 1
    if plus != minus:
        return 0.0
    out = 1.0
    for mode, p in plus.items():
        out *= math.factorial(p) * variance(mode) ** p
    return out


def set_partitions(items: Sequence) -> Iterator[list[list]]:
    """Every partition of ``items`` into non-empty blocks."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]
        yield [[first]] + part


def _check_order(r: int) -> None:
    if r > MAX_CUMULANT_ORDER:
        raise CapExceededError("Cumulant order", r, MAX_CUMULANT_ORDER)


def cumulant(indices: Sequence[int], moment: Callable[[tuple[int, ...]], complex]) -> complex:
    """Joint cumulant from moments by the partition formula.

    Args:
        indices: Variables entering the cumulant.
        moment: E of the product of the variables in a tuple of indices.
    """
    _check_order(len(indices))
    total = 0j
    for part in set_partitions(list(indices)):
        b = len(part)
        weight = (-1) ** (b - 1) * math.factorial(b - 1)
        total += weight * np.prod([moment(tuple(block)) for block in part])
    return total


def sample_cumulant(samples: np.ndarray) -> complex:
    """Joint cumulant of the columns of ``samples`` ``(n, r)`` from sample moments."""
    samples = np.asarray(samples)
    return cumulant(
        range(samples.shape[1]), lambda block: np.mean(np.prod(samples[:, list(block)], axis=1))
    )


def _connects(part: list[list[int]], groups: Sequence[Sequence[int]]) -> bool:
    owner = {x: g for g, members in enumerate(groups) for x in members}
    graph = nx.Graph()
    graph.add_nodes_from(range(len(groups)))
    for block in part:
        graph.add_edges_from((owner[block[0]], owner[x]) for x in block[1:])
    return nx.is_connected(graph)


def product_cumulant(
    groups: Sequence[Sequence[int]], base: Callable[[tuple[int, ...]], complex]
) -> complex:
    """Cumulant of products prod_{i in G} X_i, one per group, from base cumulants.

    Sums prod_B base(B) over partitions whose blocks connect all groups.
    """
    _check_order(len(groups))
    items = [x for g in groups for x in g]
    total = 0j
    for part in set_partitions(items):
        if _connects(part, groups):
            total += np.prod([base(tuple(block)) for block in part])
    return total


def correlation_expansion(
    tree_a: SignedTree,
    tree_b: SignedTree,
    k: np.ndarray,
    grid: LatticeGrid,
    scaling: Scaling,
    phi_in,
    t: float,
) -> tuple[complex, complex]:
    """E(J_A(t)_k conj J_B(t)_k) from Gaussian data, and the same from couples.

    Returns ``(direct, couples)``: the first from Wick's rule applied to the
    polynomial expansions of the two trees, the second as the sum of K_Q over
    couples (A, conj B) with input spectrum ``phi_in`` in layer 0.
    """
    terms_a = tree_terms(tree_a, k, grid, scaling, t)
    terms_b = tree_terms(tree_b, k, grid, scaling, t)
    variance_table = grid.evaluate(phi_in)
    n = grid.cutoff
    strides = grid.side ** np.arange(grid.dimension - 1, -1, -1)
    modes_a = (terms_a.leaves + n) @ strides
    modes_b = (terms_b.leaves + n) @ strides

    direct = 0j
    for i in range(terms_a.count):
        fa = list(zip(modes_a[i], terms_a.signs))
        for j in range(terms_b.count):
            fb = list(zip(modes_b[j], -terms_b.signs))
            e = gaussian_expectation(fa + fb, lambda m: variance_table[m])
            if e:
                direct += terms_a.coefs[i] * np.conj(terms_b.coefs[j]) * e

    target = (tree_a, tree_b.conjugate())
    couples = [q for q in enumerate_couples(tree_a.order + tree_b.order) if q.trees == target]
    total = 0j
    for q in couples:
        setup = DiagramSetup(q, Layering.constant(q, 0), (phi_in,), scaling, grid)
        total += eval_couple(setup, t, t, k).value
    logger.debug(f"Compared {len(couples)} couples against the Wick expansion")
    return direct, total


__all__ = [
    "MAX_CUMULANT_ORDER",
    "correlation_expansion",
    "cumulant",
    "gaussian_expectation",
    "product_cumulant",
    "sample_cumulant",
    "set_partitions",
]
