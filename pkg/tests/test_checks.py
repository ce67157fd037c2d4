"""Tests for the enumeration, analysis and exhaustive-check tool functions."""

import pytest

from src.models.errors import CapExceededError, ConfigError
from src.models.schemas import ObjectKind
from src.tools.combinatorics import (
    analyze,
    census,
    check_canonicity,
    check_molecules,
    check_tree_census,
    check_twists,
    list_objects,
    molecule_graphml,
)
from src.tools.simulation import moment_cumulant, snapshot_times

MINI_COUPLE = "+(...) -(...) | 0-3,1-4,2-5"


class TestListObjects:
    def test_indices_are_positions(self):
        """Rows are numbered in enumeration order."""
        rows = list_objects(ObjectKind.TREES, 2)
        assert [r.index for r in rows] == [0, 1, 2]
        assert all(r.order == 2 for r in rows)

    def test_couples_parse_back(self):
        """Every listed couple analyzes as a couple of the same order."""
        for row in list_objects(ObjectKind.COUPLES, 2):
            assert analyze(row.text).order == 2

    def test_layerings_carry_layers(self):
        """Canonical layerings list their layer values."""
        rows = list_objects(ObjectKind.LAYERINGS, 2, depth=1)
        assert rows
        assert all(r.layers for r in rows)

    def test_gardens_need_signature(self):
        """Gardens are only enumerated for a given signature."""
        with pytest.raises(ConfigError):
            list_objects(ObjectKind.GARDENS, 1)

    def test_cap(self):
        """Orders over the cap are refused."""
        with pytest.raises(CapExceededError):
            list_objects(ObjectKind.TREES, 99)


class TestCensus:
    def test_trees_match_closed_form(self):
        """Tree counts equal the closed form at every order."""
        rows = census(ObjectKind.TREES, 4)
        assert [r.count for r in rows] == [1, 1, 3, 12, 55]
        assert all(r.count == r.expected for r in rows)

    def test_other_kinds_have_no_closed_form(self):
        """Couples carry no expected count."""
        rows = census(ObjectKind.COUPLES, 1)
        assert rows[0].count == 1
        assert all(r.expected is None for r in rows)


class TestAnalyze:
    def test_mini_couple(self):
        """Two atoms, three bonds, circuit rank two, regular of type 1."""
        result = analyze(MINI_COUPLE)
        assert result.regular and result.regular_kind == "type1"
        assert (result.molecule.atoms, result.molecule.bonds) == (2, 3)
        assert result.molecule.circuit_rank == 2
        assert result.links == 1

    def test_sibling_pairing_is_not_regular(self):
        """Regular-only fields are empty for non-regular couples."""
        result = analyze("+(...) -(...) | 0-1,2-3,4-5")
        assert not result.regular
        assert result.regular_kind is None
        assert result.legal is None

    def test_graphml(self, tmp_path):
        """The molecule is written as GraphML."""
        path = molecule_graphml(MINI_COUPLE, tmp_path / "m.graphml")
        assert "graphml" in (tmp_path / "m.graphml").read_text()
        assert path.endswith("m.graphml")


class TestChecks:
    def test_tree_census(self):
        """The tree count check passes through order five."""
        report = check_tree_census(5)
        assert report.passed
        assert report.objects == 6

    def test_molecules(self):
        """Molecule invariants hold for every couple through order three."""
        assert check_molecules(3).passed

    def test_canonicity(self):
        """Construction and criterion agree through order two."""
        report = check_canonicity(2, 1)
        assert report.passed
        assert report.objects > 0

    def test_twists(self):
        """Twists of core vines through order three satisfy every check."""
        assert check_twists(3).passed


class TestHelpers:
    def test_snapshot_times(self):
        """Equal kinetic steps rescaled by delta."""
        assert snapshot_times(0.2, 2, 0.1).tolist() == pytest.approx([0.0, 1.0, 2.0])

    def test_snapshot_times_rejects_negative(self):
        """Negative end times are configuration errors."""
        with pytest.raises(ConfigError):
            snapshot_times(-1.0, 1, 0.1)

    def test_fourth_cumulant_of_gaussian_moments(self):
        """Gaussian moments E X^2 = 1, E X^4 = 3 give a vanishing fourth cumulant."""
        moments = {"0": 0.0, "0,0": 1.0, "0,0,0": 0.0, "0,0,0,0": 3.0}
        assert abs(moment_cumulant([0, 0, 0, 0], moments)) < 1e-12
