"""Tests for trees, gardens, regular structure and layerings.

This module covers enumeration counts, irreducibility, skeletons, the
structure decomposition of regular couples and the canonical layering
construction and criterion.
"""

import numpy as np
import pytest

from src.core.decorations import random_decoration
from src.core.gardens import (
    Garden,
    decompose_components,
    enumerate_couples,
    enumerate_paired_trees,
    is_irreducible,
    trivial_couple,
)
from src.core.layering import (
    Layering,
    enumerate_canonical_layerings,
    enumerate_layerings,
    is_canonical,
)
from src.core.regular import (
    RegularKind,
    incoherency_index,
    is_regular,
    layer_structure_violations,
    reattach,
    reconstruct,
    regular_decompose,
    skeleton,
)
from src.core.trees import SignedTree, catalan3, enumerate_trees
from src.models.errors import CapExceededError, InvalidGardenError, InvalidLayeringError

MINI_COUPLE_00 = "+(...) -(...) | 0-3,1-4,2-5"
MINI_COUPLE_01 = "+(...) -(...) | 0-5,1-4,2-3"


@pytest.fixture(scope="module")
def regular_order2():
    return [q for q in enumerate_couples(2) if is_regular(q)]


class TestEnumerateTrees:
    def test_counts(self):
        """Tree counts follow the ternary Catalan numbers."""
        counts = [len(enumerate_trees(n)) for n in range(6)]
        assert counts == [1, 1, 3, 12, 55, 273]
        assert counts == [catalan3(n) for n in range(6)]

    def test_leaf_and_node_counts(self):
        """A tree of order n has 2n+1 leaves and 3n+1 nodes."""
        for n in range(5):
            for tree in enumerate_trees(n):
                assert len(tree.leaves) == 2 * n + 1
                assert tree.size == 3 * n + 1

    def test_child_signs(self):
        """Children of a sign-z node carry (z, -z, z)."""
        tree = enumerate_trees(2, sign=-1)[0]
        for n in tree.branching:
            a, b, c = tree.children[n]
            assert tree.signs[a] == tree.signs[n]
            assert tree.signs[b] == -tree.signs[n]
            assert tree.signs[c] == tree.signs[n]

    def test_cap(self):
        """Orders above the cap are refused with the required cap in the message."""
        with pytest.raises(CapExceededError, match="at least 7"):
            enumerate_trees(7)

    def test_text_round_trip(self):
        """Every tree survives its text form."""
        for tree in enumerate_trees(3, sign=-1):
            assert SignedTree.from_text(tree.to_text()) == tree

    def test_malformed_text(self):
        """Unbalanced text is rejected."""
        with pytest.raises(InvalidGardenError):
            SignedTree.from_text("+(..")


class TestEnumerateGardens:
    def test_couple_counts(self):
        """Couple counts for orders 0..3."""
        assert [len(enumerate_couples(n)) for n in range(4)] == [1, 4, 42, 720]

    def test_trivial_couple(self):
        """The only couple of order 0 is the trivial couple."""
        assert enumerate_couples(0) == [trivial_couple()]

    def test_mini_couples_present(self):
        """Both mini-couple codes appear among order-2 couples."""
        couples = set(enumerate_couples(2))
        assert Garden.from_text(MINI_COUPLE_00) in couples
        assert Garden.from_text(MINI_COUPLE_01) in couples

    def test_pairings_respect_signs(self):
        """Paired leaves always carry opposite signs."""
        for q in enumerate_couples(2):
            for i, j in q.pairs():
                assert q.leaf_signs[i] == -q.leaf_signs[j]

    def test_unbalanced_signature(self):
        """Signatures must be half + and half -."""
        from src.core.gardens import enumerate_gardens

        with pytest.raises(InvalidGardenError):
            enumerate_gardens(1, (1, 1))

    def test_paired_tree_lone_sign(self):
        """The lone leaf of a paired tree carries the root sign."""
        for t in enumerate_paired_trees(2, sign=-1):
            assert t.leaf_signs[t.lone] == -1

    def test_conjugate_couple(self):
        """Conjugation is an involution and keeps the couple signature."""
        for q in enumerate_couples(2):
            c = q.conjugate()
            assert c.signature == (1, -1)
            assert c.conjugate() == q


class TestIrreducibility:
    def test_couples_irreducible(self):
        """Every couple is irreducible."""
        assert all(is_irreducible(q) for q in enumerate_couples(2))

    def test_disjoint_union(self):
        """Two couples side by side split into two components."""
        g = Garden.from_text("+. -. +. -. | 0-1,2-3")
        assert not is_irreducible(g)
        parts = decompose_components(g)
        assert len(parts) == 2
        assert all(p == trivial_couple() for p in parts)

    def test_crossing_pairing(self):
        """A pairing touching all four trees is irreducible."""
        g = Garden.from_text("+(...) -. +. -. | 0-3,1-4,2-5")
        assert is_irreducible(g)
        assert decompose_components(g) == [g]


class TestRegularDecompose:
    def test_trivial(self):
        """The trivial couple is regular of kind trivial."""
        s = regular_decompose(trivial_couple())
        assert s.kind == RegularKind.TRIVIAL
        assert s.links() == []

    @pytest.mark.parametrize("text", [MINI_COUPLE_00, MINI_COUPLE_01])
    def test_mini_couple(self, text):
        """Mini-couples are type 1 with three trivial sub-couples."""
        s = regular_decompose(Garden.from_text(text))
        assert s.kind == RegularKind.TYPE1
        assert [sub.structure.kind for sub in s.subs] == [RegularKind.TRIVIAL] * 3
        assert s.links() == [((0, 0), (1, 0))]
        assert s.chosen() == {(0, 0)}

    def test_sibling_pairs_not_regular(self):
        """Pairing siblings breaks regularity."""
        q = Garden.from_text("+(...) -(...) | 0-1,2-3,4-5")
        assert not is_regular(q)
        assert regular_decompose(q) is None

    def test_odd_order_never_regular(self):
        """Regular couples have even order."""
        assert not any(is_regular(q) for q in enumerate_couples(1))
        assert not any(is_regular(q) for q in enumerate_couples(3))

    def test_order2_count(self, regular_order2):
        """Two mini-couples plus six mini-trees on each side."""
        assert len(regular_order2) == 14

    def test_structure_agrees_with_collapse(self):
        """Decomposition succeeds exactly on couples that collapse fully."""
        for n in range(4):
            for q in enumerate_couples(n):
                assert (regular_decompose(q) is not None) == is_regular(q)

    def test_reconstruct(self, regular_order2):
        """Rebuilding from the decomposition gives the couple back."""
        for q in regular_order2:
            assert reconstruct(regular_decompose(q)) == q

    def test_links_partition_branching_nodes(self, regular_order2):
        """Links cover every branching node once; N^ch has half of them."""
        for q in regular_order2:
            s = regular_decompose(q)
            linked = [n for link in s.links() for n in link]
            assert sorted(linked) == sorted(q.branching_refs)
            assert len(s.chosen()) == q.order // 2

    def test_link_antisymmetry(self, regular_order2):
        """Linked nodes carry opposite signed resonance factors."""
        rng = np.random.default_rng(7)
        for q in regular_order2:
            s = regular_decompose(q)
            for _ in range(20):
                dec = random_decoration(q, rng, dimension=3, bound=4)
                for a, b in s.links():
                    assert q.sign(b) * dec.omega_index(b) == -q.sign(a) * dec.omega_index(a)

    def test_link_vectors(self, regular_order2):
        """Linked nodes share their (x, y) vectors up to sign and order."""

        def canon(v):
            v = tuple(int(x) for x in v)
            neg = tuple(-x for x in v)
            return max(v, neg)

        rng = np.random.default_rng(11)
        for q in regular_order2:
            for a, b in regular_decompose(q).links():
                dec = random_decoration(q, rng, dimension=2, bound=5)
                xa, ya = dec.link_vectors(a)
                xb, yb = dec.link_vectors(b)
                assert sorted([canon(xa), canon(ya)]) == sorted([canon(xb), canon(yb)])

    def test_dominant_mini_couple(self):
        """Mini-couples are dominant."""
        assert regular_decompose(Garden.from_text(MINI_COUPLE_00)).dominant

    def test_regular_tree(self):
        """Regular paired trees decompose into a single chain."""
        trees = [t for t in enumerate_paired_trees(2) if is_regular(t)]
        assert trees
        for t in trees:
            s = regular_decompose(t)
            assert s.kind == RegularKind.TREE
            assert len(s.chains[0].nodes) == 2
            assert reconstruct(s) == t

    @pytest.mark.slow
    def test_order4_agreement(self):
        """Collapse and decomposition agree on all order-4 couples; growth stays geometric."""
        regular = []
        for q in enumerate_couples(4):
            s = regular_decompose(q)
            assert (s is not None) == is_regular(q)
            if s is not None:
                assert reconstruct(s) == q
                regular.append(q)
        assert 0 < len(regular) / 14 < 200


class TestSkeleton:
    def test_regular_collapses(self, regular_order2):
        """Regular couples have a trivial skeleton."""
        for q in regular_order2:
            assert skeleton(q).is_trivial

    def test_prime_is_fixed(self):
        """A prime couple is its own skeleton."""
        q = Garden.from_text("+(...) -. | 0-3,1-2")
        sk = skeleton(q)
        assert sk.garden == q
        assert sk.couples == {}
        assert sk.trees == {}

    def test_round_trip(self):
        """Re-attaching the attachments gives the garden back."""
        for n in range(4):
            for q in enumerate_couples(n):
                assert reattach(skeleton(q)) == q

    def test_garden_round_trip(self):
        """Round trip also holds for a width-4 garden."""
        g = Garden.from_text("+(...) -. +. -. | 0-3,1-4,2-5")
        assert reattach(skeleton(g)) == g


class TestLayerings:
    def test_invalid_layering(self):
        """A child above its parent is rejected."""
        q = Garden.from_text(MINI_COUPLE_00)
        lay = Layering(q, ((0, 1, 0, 0), (0, 0, 0, 0)))
        with pytest.raises(InvalidLayeringError):
            is_canonical(q, lay, 1)

    def test_depth_zero(self):
        """Depth bound 0 admits only the all-zero layering."""
        for q in enumerate_couples(2):
            lays = enumerate_canonical_layerings(q, 0)
            assert lays == [Layering.constant(q, 0)]

    def test_criterion_violation(self):
        """Sibling leaves below their parent's layer violate the criterion."""
        q = Garden.from_text("+(...) -. | 0-1,2-3")
        bad = Layering(q, ((1, 0, 0, 1), (1,)))
        good = Layering.constant(q, 1)
        assert not is_canonical(q, bad, 1)
        assert is_canonical(q, good, 1)

    def test_depth_bound(self):
        """Layers above p are never canonical."""
        q = trivial_couple()
        assert not is_canonical(q, Layering.constant(q, 2), 1)

    @pytest.mark.parametrize("p", [0, 1, 2])
    def test_construction_matches_criterion(self, p):
        """The stacking construction and the criterion pick the same layerings."""
        for n in range(3):
            for q in enumerate_couples(n):
                built = {lay.key() for lay in enumerate_canonical_layerings(q, p)}
                tested = {lay.key() for lay in enumerate_layerings(q, p) if is_canonical(q, lay, p)}
                assert built == tested
                assert all(is_canonical(q, Layering(q, k), p) for k in built)

    @pytest.mark.slow
    def test_construction_matches_criterion_order3(self):
        """Same agreement on order-3 couples."""
        for q in enumerate_couples(3):
            for p in (0, 1):
                built = {lay.key() for lay in enumerate_canonical_layerings(q, p)}
                tested = {lay.key() for lay in enumerate_layerings(q, p) if is_canonical(q, lay, p)}
                assert built == tested

    def test_depth_cap(self):
        """Depth bounds above the cap are refused."""
        with pytest.raises(CapExceededError):
            enumerate_canonical_layerings(trivial_couple(), 9)


class TestCoherence:
    def test_single_layer(self, regular_order2):
        """Everything in one layer is coherent."""
        for q in regular_order2:
            s = regular_decompose(q)
            assert incoherency_index(s, Layering.constant(q, 1).__getitem__) == 0

    def test_split_link(self):
        """Roots of a mini-couple in different layers give one incoherency."""
        q = Garden.from_text(MINI_COUPLE_00)
        lay = Layering(q, ((1, 0, 0, 0), (0, 0, 0, 0)))
        assert incoherency_index(regular_decompose(q), lay.__getitem__) == 1

    @pytest.mark.parametrize("p", [1, 2])
    def test_coherent_layer_structure(self, regular_order2, p):
        """Coherent canonical layerings follow the chain layer pattern."""
        checked = 0
        for q in regular_order2:
            s = regular_decompose(q)
            for lay in enumerate_canonical_layerings(q, p):
                if incoherency_index(s, lay.__getitem__):
                    continue
                assert layer_structure_violations(q, s, lay.__getitem__, p, p) == []
                checked += 1
        assert checked > 0
