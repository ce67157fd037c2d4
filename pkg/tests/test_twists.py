"""Tests for vine classification, unit twists and layered full twists."""

import numpy as np
import pytest

from src.core.blocks import classify_block, find_vines, splice
from src.core.decorations import random_decoration
from src.core.gardens import Garden, enumerate_couples
from src.core.layering import enumerate_canonical_layerings, is_canonical
from src.core.molecules import BondLabel, build_molecule, decorate_molecule
from src.core.regular import skeleton
from src.core.twists import (
    VineCase,
    classify_vine,
    lf_twist,
    twist,
    twist_decoration,
    twist_with_map,
)
from src.models.errors import NotABlockError, TwistError

VINE_I_B = "+(.(...).) -(...) | 0-5,1-4,2-7,3-6"
VINE_I_A = "+(..(...)) -(...) | 0-5,1-2,3-6,4-7"
VINE_II_B = "+(.(...)((...)..)) -(...) | 0-9,1-8,2-7,3-4,5-10,6-11"
VINE_II_A = "+(.(..(...))(...)) -(...) | 0-9,1-8,2-7,3-6,4-11,5-10"
MINI_COUPLE_00 = "+(...) -(...) | 0-3,1-4,2-5"


def _vine(m, atoms):
    return next(v for v in find_vines(m) if v.atoms == frozenset(atoms))


def _core_twists(max_order: int):
    """Every core vine of every couple up to ``max_order`` with its twist."""
    for n in range(2, max_order + 1):
        for q in enumerate_couples(n):
            m = build_molecule(q)
            for vine in find_vines(m):
                try:
                    real = classify_vine(q, m, vine)
                except NotABlockError:
                    continue
                if real.is_core:
                    yield q, m, vine, twist_with_map(q, vine, m)


def _mapped_vine(result, m, vine):
    m2 = build_molecule(result.garden)
    atom_of = {ref: v for v, ref in m2.node_of.items()}
    atoms = {atom_of[result.ref_map[m.node_of[v]]] for v in vine.atoms}
    return m2, _vine(m2, atoms)


class TestClassifyVine:
    def test_vine_one(self):
        """The root double bond of VINE_I_B is a vine (I-b) with u0 under u1."""
        g = Garden.from_text(VINE_I_B)
        m = build_molecule(g)
        real = classify_vine(g, m, _vine(m, {0, 1}))
        assert real.case == VineCase.I_B
        assert real.u0 == (0, 6)
        assert real.is_core

    def test_vine_two(self):
        """The four-atom vine of VINE_II_B is of type (II-b)."""
        g = Garden.from_text(VINE_II_B)
        m = build_molecule(g)
        real = classify_vine(g, m, _vine(m, {0, 1, 2, 3}))
        assert real.case == VineCase.II_B
        assert real.u0 == (0, 5)
        assert (real.u3, real.u4) == ((0, 6), (0, 2))

    def test_cn_vine(self):
        """A vine across two trees has no core case."""
        g = Garden.from_text(VINE_I_B)
        m = build_molecule(g)
        real = classify_vine(g, m, _vine(m, {1, 2}))
        assert real.case is None
        assert not real.is_core


class TestUnitTwist:
    def test_vine_one_fixture(self):
        """Twisting the (I-b) vine gives the (I-a) garden."""
        g = Garden.from_text(VINE_I_B)
        out = twist(g, _vine(build_molecule(g), {0, 1}))
        assert out == Garden.from_text(VINE_I_A)
        m2 = build_molecule(out)
        assert classify_vine(out, m2, _vine(m2, {0, 1})).case == VineCase.I_A

    def test_vine_two_fixture(self):
        """Twisting the (II-b) vine gives the (II-a) garden."""
        g = Garden.from_text(VINE_II_B)
        out = twist(g, _vine(build_molecule(g), {0, 1, 2, 3}))
        assert out == Garden.from_text(VINE_II_A)
        m2 = build_molecule(out)
        assert classify_vine(out, m2, _vine(m2, {0, 1, 2, 3})).case == VineCase.II_A

    def test_labels_switch_at_lower_joint(self):
        """The directed bonds survive; the PC and LP labels trade places."""
        g = Garden.from_text(VINE_I_B)
        m = build_molecule(g)
        m2 = build_molecule(twist(g, _vine(m, {0, 1})))
        assert m.isomorphic(m2, labels=False)
        assert not m.isomorphic(m2)
        pc = [(b.tail, b.head) for b in m.bonds if b.label == BondLabel.PC]
        pc2 = [(b.tail, b.head) for b in m2.bonds if b.label == BondLabel.PC]
        assert pc == [(0, 1)] and pc2 == [(1, 0)]

    def test_cn_vine_rejected(self):
        """CN vines cannot be twisted."""
        g = Garden.from_text(VINE_II_B)
        with pytest.raises(TwistError) as exc:
            twist(g, _vine(build_molecule(g), {3, 4}))
        assert exc.value.failures == ["vine is realized as a CN block"]

    def test_involution(self):
        """Twisting twice at the same vine restores the garden."""
        count = 0
        for q, m, vine, result in _core_twists(3):
            m2, vine2 = _mapped_vine(result, m, vine)
            assert twist(result.garden, vine2, m2) == q
            count += 1
        assert count > 0

    def test_molecule_preserved(self):
        """The twisted molecule is the same directed multigraph with the same label counts."""
        for q, m, vine, result in _core_twists(3):
            m2 = build_molecule(result.garden)
            assert m.isomorphic(m2, labels=False)
            labels = sorted(b.label.value for b in m.bonds)
            assert labels == sorted(b.label.value for b in m2.bonds)

    def test_only_u2_changes_sign(self):
        """Every node keeps its sign except u2."""
        for q, _, _, result in _core_twists(3):
            u2 = result.realization.block.u2
            out = result.garden
            for old, new in result.ref_map.items():
                if old == u2:
                    assert out.sign(new) == -q.sign(old)
                else:
                    assert out.sign(new) == q.sign(old)

    def test_commutes_with_splice(self):
        """Splicing the vine before or after the twist gives the same garden."""
        for q, m, vine, result in _core_twists(3):
            m2, vine2 = _mapped_vine(result, m, vine)
            before = splice(q, classify_block(q, m, vine.atoms))
            after = splice(result.garden, classify_block(result.garden, m2, vine2.atoms))
            assert before == after

    def test_splice_fixture(self):
        """Both vine fixtures splice to the (0,0) mini couple after twisting."""
        mini = Garden.from_text(MINI_COUPLE_00)
        for text, atoms in ((VINE_I_A, {0, 1}), (VINE_II_A, {0, 1, 2, 3})):
            g = Garden.from_text(text)
            m = build_molecule(g)
            assert splice(g, classify_block(g, m, atoms)) == mini


class TestTwistDecoration:
    def test_decoration_moves_with_twist(self):
        """u2 takes the value of u23 and the moved pair takes the old u2 value."""
        g = Garden.from_text(VINE_I_B)
        result = twist_with_map(g, _vine(build_molecule(g), {0, 1}))
        dec = random_decoration(g, np.random.default_rng(3), dimension=2, bound=3)
        new = twist_decoration(result, dec)
        b = result.realization.block
        assert np.array_equal(new.k[result.ref_map[b.u2]], dec.k[b.u23])
        assert np.array_equal(new.k[result.ref_map[b.u23]], dec.k[b.u2])
        assert np.array_equal(new.k[result.ref_map[result.realization.u0]], dec.k[b.u2])

    def test_decorations_stay_valid(self):
        """Transported decorations satisfy the node rule on every twisted couple."""
        for i, (q, _, _, result) in enumerate(_core_twists(3)):
            dec = random_decoration(q, np.random.default_rng(i), dimension=2, bound=3)
            new = twist_decoration(result, dec)
            new.validate()
            decorate_molecule(result.garden, new)


class TestLayeredTwist:
    def test_vine_one(self):
        """Some canonical layering of VINE_I_B admits an LF twist, and the result is canonical."""
        g = Garden.from_text(VINE_I_B)
        msk = build_molecule(skeleton(g).garden)
        vine = _vine(msk, {0, 1})
        done = 0
        for lay in enumerate_canonical_layerings(g, 1):
            try:
                out, new_lay = lf_twist(g, lay, 1, vine)
            except TwistError as e:
                assert not any("not canonical" in f for f in e.failures)
                continue
            assert out == Garden.from_text(VINE_I_A)
            assert is_canonical(out, new_lay, 1)
            done += 1
        assert done > 0

    def test_rejects_non_canonical(self):
        """A layering that is not canonical is refused up front."""
        from src.core.layering import Layering

        g = Garden.from_text(VINE_I_B)
        vine = _vine(build_molecule(skeleton(g).garden), {0, 1})
        with pytest.raises(TwistError) as exc:
            lf_twist(g, Layering.constant(g, 2), 1, vine)
        assert exc.value.failures == ["input layering is not canonical"]

    @pytest.mark.slow
    def test_order_three_sweep(self):
        """Every successful LF twist of an order-3 couple stays canonical."""
        for q in enumerate_couples(3):
            sk = skeleton(q)
            msk = build_molecule(sk.garden)
            vines = find_vines(msk)
            if not vines:
                continue
            for lay in enumerate_canonical_layerings(q, 1):
                for vine in vines:
                    try:
                        out, new_lay = lf_twist(q, lay, 1, vine)
                    except (TwistError, NotABlockError) as e:
                        if isinstance(e, TwistError):
                            assert not any("not canonical" in f for f in e.failures)
                        continue
                    assert is_canonical(out, new_lay, 1)
