"""Molecules: directed multigraphs read off gardens.

Atoms are the branching nodes of a garden, numbered in ``branching_refs``
order. A PC bond joins a branching node to each branching child and points
from parent to child when the child has sign minus, from child to parent
otherwise. An LP bond joins the parents of two paired leaves when both
parents are branching nodes, pointing from the parent of the minus leaf to
the parent of the plus leaf. Every bond endpoint remembers the garden node
whose momentum the bond carries.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import networkx as nx
import numpy as np

from ..config import get_config
from ..models.errors import DecorationError, InvalidGardenError, NotABlockError
from .decorations import GardenDecoration
from .gardens import Garden
from .trees import NodeRef

logger = logging.getLogger(__name__)


class BondLabel(str, Enum):
    PC = "PC"
    LP = "LP"


class GapKind(str, Enum):
    """Small, large or zero gap."""

    SG = "SG"
    LG = "LG"
    ZG = "ZG"


class CutKind(str, Enum):
    ALPHA = "alpha"
    BETA = "beta"


@dataclass(frozen=True)
class Bond:
    """Directed bond with the garden nodes carried at each end.

    For PC bonds ``parent_end`` names the endpoint ("tail" or "head") that
    sits at the parent node.
    """

    id: int
    tail: int
    head: int
    label: BondLabel
    tail_node: Optional[NodeRef] = None
    head_node: Optional[NodeRef] = None
    parent_end: Optional[str] = None

    @property
    def is_loop(self) -> bool:
        return self.tail == self.head

    def other(self, v: int) -> int:
        return self.head if self.tail == v else self.tail


@dataclass(frozen=True, eq=False)
class Molecule:
    """Atoms with an optional layer, and a multiset of labelled bonds."""

    atoms: tuple[int, ...]
    bonds: tuple[Bond, ...]
    node_of: dict[int, NodeRef] = field(default_factory=dict)
    layers: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        known = set(self.atoms)
        for b in self.bonds:
            if b.tail not in known or b.head not in known:
                raise InvalidGardenError(f"Bond {b.id} touches an unknown atom")
        for v in self.atoms:
            if self.out_degree(v) > 2 or self.in_degree(v) > 2:
                raise InvalidGardenError(
                    f"Atom {v} has out-degree {self.out_degree(v)} "
                    f"and in-degree {self.in_degree(v)}"
                )
        for group in self.components():
            if all(self.degree(v) == 4 for v in group):
                raise InvalidGardenError(
                    f"Component {sorted(group)} has every atom at degree 4"
                )

    @classmethod
    def from_edges(
        cls,
        edges: Sequence[tuple[int, int, Union[str, BondLabel]]],
        atoms: Optional[Iterable[int]] = None,
        layers: Optional[dict[int, int]] = None,
    ) -> "Molecule":
        """Hand-built molecule from ``(tail, head, label)`` triples."""
        bonds = tuple(Bond(i, t, h, BondLabel(lab)) for i, (t, h, lab) in enumerate(edges))
        if atoms is None:
            atoms = sorted({x for t, h, _ in edges for x in (t, h)})
        return cls(tuple(atoms), bonds, {}, dict(layers or {}))

    # -- incidence ------------------------------------------------------

    @cached_property
    def _by_id(self) -> dict[int, Bond]:
        return {b.id: b for b in self.bonds}

    def bond(self, bond_id: int) -> Bond:
        return self._by_id[bond_id]

    def out_degree(self, v: int) -> int:
        return sum(1 for b in self.bonds if b.tail == v)

    def in_degree(self, v: int) -> int:
        return sum(1 for b in self.bonds if b.head == v)

    def degree(self, v: int) -> int:
        return self.out_degree(v) + self.in_degree(v)

    def incident(self, v: int) -> list[tuple[Bond, int]]:
        """Bond ends at ``v`` with zeta = +1 for outgoing, -1 for incoming.

        A self-loop shows up twice, once each way.
        """
        out = []
        for b in self.bonds:
            if b.tail == v:
                out.append((b, 1))
            if b.head == v:
                out.append((b, -1))
        return out

    def between(self, a: int, b: int) -> list[Bond]:
        """Bonds joining two distinct atoms, in either direction."""
        return [x for x in self.bonds if {x.tail, x.head} == {a, b} and a != b]

    def neighbours(self, v: int) -> list[int]:
        return sorted({b.other(v) for b, _ in self.incident(v) if not b.is_loop})

    def inner_degrees(self, group: Iterable[int], v: int) -> tuple[int, int]:
        """(out, in) degree of ``v`` counting only bonds inside ``group``."""
        group = set(group)
        inside = [b for b in self.bonds if b.tail in group and b.head in group]
        return sum(1 for b in inside if b.tail == v), sum(1 for b in inside if b.head == v)

    def inner_bonds(self, group: Iterable[int]) -> list[Bond]:
        group = set(group)
        return [b for b in self.bonds if b.tail in group and b.head in group]

    # -- counts ---------------------------------------------------------

    @property
    def V(self) -> int:
        return len(self.atoms)

    @property
    def E(self) -> int:
        return len(self.bonds)

    @property
    def F(self) -> int:
        """Number of connected components."""
        return nx.number_weakly_connected_components(self.to_networkx()) if self.atoms else 0

    def components(self) -> list[set[int]]:
        return [set(c) for c in nx.weakly_connected_components(self.to_networkx())]

    def is_connected(self, group: Optional[Iterable[int]] = None) -> bool:
        graph = self.to_networkx()
        if group is not None:
            graph = graph.subgraph(list(group))
        return graph.number_of_nodes() > 0 and nx.is_weakly_connected(graph)

    def degree_profile(self) -> dict[int, int]:
        """Number of atoms of each degree."""
        profile: dict[int, int] = {}
        for v in self.atoms:
            d = self.degree(v)
            profile[d] = profile.get(d, 0) + 1
        return profile

    # -- conversion -----------------------------------------------------

    def to_networkx(self) -> nx.MultiDiGraph:
        graph = nx.MultiDiGraph()
        for v in self.atoms:
            if v in self.layers:
                graph.add_node(v, layer=self.layers[v])
            else:
                graph.add_node(v)
        for b in self.bonds:
            graph.add_edge(b.tail, b.head, key=b.id, label=b.label.value)
        return graph

    def write_graphml(self, path: Union[str, Path]) -> Path:
        """Export as GraphML with node attribute ``layer`` and edge attribute ``label``."""
        path = Path(path)
        nx.write_graphml(self.to_networkx(), path)
        logger.debug(f"Wrote molecule with {self.V} atoms and {self.E} bonds to {path}")
        return path

    def isomorphic(self, other: "Molecule", labels: bool = True) -> bool:
        """Directed multigraph isomorphism, optionally matching bond labels."""
        match = None
        if labels:
            match = nx.algorithms.isomorphism.categorical_multiedge_match("label", None)
        return nx.is_isomorphic(self.to_networkx(), other.to_networkx(), edge_match=match)

    # -- surgery --------------------------------------------------------

    def merge(self, group: Iterable[int]) -> "Molecule":
        """Merge ``group`` into its smallest atom, dropping bonds inside it."""
        group = set(group)
        keep = min(group)

        def mv(v: int) -> int:
            return keep if v in group else v

        bonds = tuple(
            Bond(b.id, mv(b.tail), mv(b.head), b.label, b.tail_node, b.head_node, b.parent_end)
            for b in self.bonds
            if not (b.tail in group and b.head in group)
        )
        atoms = tuple(v for v in self.atoms if v not in group or v == keep)
        node_of = {v: n for v, n in self.node_of.items() if v in atoms}
        layers = {v: x for v, x in self.layers.items() if v in atoms}
        return Molecule(atoms, bonds, node_of, layers)


def circuit_rank(m: Molecule) -> int:
    """chi = E - V + F."""
    return m.E - m.V + m.F


def build_molecule(g: Garden, layering=None) -> Molecule:
    """Molecule of a garden; atom layers follow ``layering`` when given."""
    atom_of = {ref: v for v, ref in enumerate(g.branching_refs)}
    bonds: list[Bond] = []

    for ref in g.branching_refs:
        for c in g.children(ref):
            if g.is_leaf(c):
                continue
            if g.sign(c) < 0:
                bonds.append(Bond(len(bonds), atom_of[ref], atom_of[c], BondLabel.PC, c, c, "tail"))
            else:
                bonds.append(Bond(len(bonds), atom_of[c], atom_of[ref], BondLabel.PC, c, c, "head"))

    for i, j in g.pairs():
        a, b = g.leaf_refs[i], g.leaf_refs[j]
        pa, pb = g.parent(a), g.parent(b)
        if pa is None or pb is None:
            continue
        minus, plus = (a, b) if g.sign(a) < 0 else (b, a)
        bonds.append(
            Bond(
                len(bonds),
                atom_of[g.parent(minus)],
                atom_of[g.parent(plus)],
                BondLabel.LP,
                minus,
                plus,
            )
        )

    layers = {}
    if layering is not None:
        layers = {v: layering[ref] for ref, v in atom_of.items()}
    node_of = {v: ref for ref, v in atom_of.items()}
    return Molecule(tuple(range(len(g.branching_refs))), tuple(bonds), node_of, layers)


# -- decorations --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MoleculeDecoration:
    """Integer index vector on every bond; physical momenta are ``spacing * k``."""

    molecule: Molecule
    k: dict[int, np.ndarray]
    spacing: float = 1.0

    def __post_init__(self):
        missing = [b.id for b in self.molecule.bonds if b.id not in self.k]
        if missing:
            raise DecorationError(f"Decoration misses bonds {missing}")

    def c(self, v: int) -> np.ndarray:
        """Kirchhoff constant: sum of zeta * k over the bond ends at ``v``."""
        dim = len(next(iter(self.k.values()))) if self.k else 1
        total = np.zeros(dim, dtype=np.int64)
        for b, z in self.molecule.incident(v):
            total = total + z * self.k[b.id]
        return total

    def gamma_index(self, v: int) -> int:
        """Sum of zeta * |k|^2 over the bond ends at ``v``, in index units."""
        return int(sum(z * int(self.k[b.id] @ self.k[b.id]) for b, z in self.molecule.incident(v)))

    def gamma(self, v: int) -> float:
        return self.spacing**2 * self.gamma_index(v)

    def gap_index(self, v: int, first: int, second: int) -> np.ndarray:
        """k_first - k_second for two bonds at ``v`` of opposite directions.

        Raises:
            NotABlockError: The bonds are not at ``v`` or point the same way.
        """
        zf, zs = _end_sign(self.molecule, v, first), _end_sign(self.molecule, v, second)
        if zf == zs:
            raise NotABlockError(f"Bonds {first} and {second} point the same way at atom {v}")
        return self.k[first] - self.k[second]

    def gap(self, v: int, first: int, second: int) -> np.ndarray:
        return self.spacing * self.gap_index(v, first, second)


def _end_sign(m: Molecule, v: int, bond_id: int) -> int:
    b = m.bond(bond_id)
    if b.is_loop:
        raise NotABlockError(f"Bond {bond_id} is a self-loop at atom {v}")
    if b.tail == v:
        return 1
    if b.head == v:
        return -1
    raise NotABlockError(f"Bond {bond_id} does not touch atom {v}")


def decorate_molecule(
    g: Garden, dec: GardenDecoration, molecule: Optional[Molecule] = None
) -> MoleculeDecoration:
    """Transport a garden decoration to the bonds of its molecule.

    Raises:
        DecorationError: ``dec`` belongs to another garden or is inconsistent.
    """
    if dec.garden != g:
        raise DecorationError("Decoration belongs to a different garden")
    dec.validate()
    m = molecule if molecule is not None else build_molecule(g)
    k = {b.id: dec.k[b.tail_node] for b in m.bonds}
    return MoleculeDecoration(m, k, dec.spacing)


def _unbonded_children(g: Garden, ref: NodeRef) -> list[NodeRef]:
    """Leaf children whose partner is a tree root or missing."""
    out = []
    for c in g.children(ref):
        if not g.is_leaf(c):
            continue
        other = g.partner(c)
        if other is None or g.parent(other) is None:
            out.append(c)
    return out


def kirchhoff_constant(dec: GardenDecoration, ref: NodeRef) -> np.ndarray:
    """c_v predicted from the garden: root term plus children paired to tree roots."""
    g = dec.garden
    total = np.zeros(dec.dimension, dtype=np.int64)
    if g.parent(ref) is None:
        total = total - g.sign(ref) * dec.k[ref]
    for c in _unbonded_children(g, ref):
        total = total + g.sign(c) * dec.k[c]
    return total


def gamma_from_garden(dec: GardenDecoration, ref: NodeRef) -> int:
    """Gamma_v predicted from -zeta_n Omega_n and the same root corrections."""
    g = dec.garden
    value = -g.sign(ref) * dec.omega_index(ref)
    if g.parent(ref) is None:
        value -= g.sign(ref) * int(dec.k[ref] @ dec.k[ref])
    for c in _unbonded_children(g, ref):
        value += g.sign(c) * int(dec.k[c] @ dec.k[c])
    return int(value)


def garden_decoration(
    g: Garden,
    mdec: MoleculeDecoration,
    roots: Sequence[np.ndarray],
    lone_value: Optional[np.ndarray] = None,
) -> GardenDecoration:
    """Inverse of ``decorate_molecule`` given the root vectors.

    Raises:
        DecorationError: The bond values and roots do not fit together.
    """
    m = mdec.molecule
    k: dict[NodeRef, np.ndarray] = {}
    for b in m.bonds:
        for node in (b.tail_node, b.head_node):
            if node is None:
                raise DecorationError("Molecule carries no garden provenance")
            k[node] = np.asarray(mdec.k[b.id], dtype=np.int64)
    for ti, tree in enumerate(g.trees):
        if tree.order == 0:
            k[(ti, 0)] = np.asarray(roots[ti], dtype=np.int64)
    for ref in g.leaf_refs:
        if ref in k:
            continue
        other = g.partner(ref)
        if other is None:
            k[ref] = np.asarray(lone_value if lone_value is not None else roots[0], dtype=np.int64)
        elif other in k:
            k[ref] = k[other]
        else:
            k[ref] = np.asarray(roots[other[0]], dtype=np.int64)
    for ti, tree in enumerate(g.trees):
        for n in reversed(range(tree.size)):
            ref = (ti, n)
            if ref not in k:
                a, b, c = (k[x] for x in g.children(ref))
                k[ref] = a - b + c
    dec = GardenDecoration(g, k, mdec.spacing)
    for ti in range(g.width):
        if not np.array_equal(dec.k[(ti, 0)], np.asarray(roots[ti])):
            raise DecorationError(f"Root {ti} does not match the bond values")
    return dec


def classify_gap(
    r: np.ndarray,
    box_size: float,
    gamma: float,
    eta: Optional[float] = None,
) -> GapKind:
    """ZG when r = 0, SG when 0 < |r| <= L^(-gamma + eta), LG otherwise."""
    if eta is None:
        eta = get_config().gap.eta
    r = np.asarray(r, dtype=float)
    if not np.any(r):
        return GapKind.ZG
    threshold = box_size ** (-gamma + eta)
    return GapKind.SG if float(np.linalg.norm(r)) <= threshold else GapKind.LG


# -- cuts --------------------------------------------------------------------


@dataclass(frozen=True)
class CutResult:
    molecule: Molecule
    kind: CutKind
    atoms: tuple[int, int]


def cut(m: Molecule, v: int, first: int, second: int) -> CutResult:
    """Split ``v`` so that ``first`` and ``second`` keep ``v`` and the rest move.

    The new atom takes the next free id. The cut is a beta cut when it
    raises the number of connected components.

    Raises:
        NotABlockError: The bonds are not at ``v``, coincide, or point the same way.
    """
    if first == second:
        raise NotABlockError("A cut needs two different bonds")
    if _end_sign(m, v, first) == _end_sign(m, v, second):
        raise NotABlockError(f"Bonds {first} and {second} point the same way at atom {v}")
    fresh = max(m.atoms) + 1
    bonds = []
    for b in m.bonds:
        if b.id in (first, second):
            bonds.append(b)
            continue
        tail = fresh if b.tail == v else b.tail
        head = fresh if b.head == v else b.head
        bonds.append(Bond(b.id, tail, head, b.label, b.tail_node, b.head_node, b.parent_end))
    layers = dict(m.layers)
    if v in layers:
        layers[fresh] = layers[v]
    out = Molecule(m.atoms + (fresh,), tuple(bonds), dict(m.node_of), layers)
    kind = CutKind.BETA if out.F > m.F else CutKind.ALPHA
    return CutResult(out, kind, (v, fresh))


__all__ = [
    "Bond",
    "BondLabel",
    "CutKind",
    "CutResult",
    "GapKind",
    "Molecule",
    "MoleculeDecoration",
    "build_molecule",
    "circuit_rank",
    "classify_gap",
    "cut",
    "decorate_molecule",
    "gamma_from_garden",
    "garden_decoration",
    "kirchhoff_constant",
]
