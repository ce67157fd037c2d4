"""Integration tests for the wavekit command line.

These tests run whole commands through ``main`` with a temporary output
directory and check exit codes, written files and manifests.
"""

import json

import pandas as pd
import pytest

from src import cli
from src.config import get_config
from src.core.wke import solve
from src.models.errors import BlowupError

MINI_COUPLE = "+(...) -(...) | 0-3,1-4,2-5"

SMALL_SIM = [
    "--dimension", "2",
    "--box-size", "2",
    "--k-max", "0.5",
    "--delta", "0.1",
    "--ensemble-size", "4",
    "--dt-factor", "0.005",
]
SMALL_WKE = [
    "--half-width", "1",
    "--spacing", "0.5",
    "--dtau", "0.005",
    "--radial-nodes", "4",
    "--angular-nodes", "6",
    "--plane-nodes", "4",
]


def _run(tmp_path, *argv):
    return cli.main([*argv, "--output-dir", str(tmp_path)])


def _manifest(tmp_path, command):
    return json.loads((tmp_path / command / "manifest.json").read_text())


class TestArguments:
    def test_help_exits_zero(self):
        """--help prints usage and exits with status 0."""
        with pytest.raises(SystemExit) as exc:
            cli.main(["--help"])
        assert exc.value.code == 0

    def test_unknown_flag_is_config_error(self, tmp_path):
        """A malformed flag exits 1 before any output is written."""
        out = tmp_path / "out"
        assert cli.main(["enumerate", "--kind", "trees", "--bogus", "--output-dir", str(out)]) == 1
        assert not out.exists()

    def test_bad_config_file_group(self, tmp_path):
        """An unknown configuration group exits 1."""
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"plotting": {"dpi": 300}}))
        argv = ["enumerate", "--kind", "trees", "--order", "1", "--config", str(path)]
        assert _run(tmp_path, *argv) == 1

    def test_out_of_range_value(self, tmp_path):
        """Values outside a field's range exit 1."""
        assert _run(tmp_path, "nls", "--tau", "0.1", *SMALL_SIM, "--gamma", "2.0") == 1

    def test_ensemble_of_one_rejected(self, tmp_path):
        """Error bars need at least two trajectories."""
        assert _run(tmp_path, "nls", "--tau", "0.1", *SMALL_SIM, "--ensemble-size", "1") == 1

    def test_config_restored_after_run(self, tmp_path):
        """Flags do not leak into the process-wide configuration."""
        before = get_config().sim.threads
        assert _run(tmp_path, "enumerate", "--kind", "trees", "--order", "1", "--threads", "3") == 0
        assert get_config().sim.threads == before


class TestEnumerate:
    def test_tree_census(self, tmp_path):
        """Tree counts follow the closed form up to order 5."""
        assert _run(tmp_path, "enumerate", "--kind", "trees", "--max-order", "5") == 0
        counts = pd.read_csv(tmp_path / "enumerate" / "trees_counts.csv")
        assert counts["count"].tolist() == [1, 1, 3, 12, 55, 273]
        assert counts["count"].tolist() == counts["expected"].tolist()
        trees = pd.read_csv(tmp_path / "enumerate" / "trees.csv")
        assert len(trees) == sum([1, 1, 3, 12, 55, 273])

    def test_order_zero_couple(self, tmp_path):
        """The only couple of order zero is the trivial one."""
        assert _run(tmp_path, "enumerate", "--kind", "couples", "--order", "0") == 0
        couples = pd.read_csv(tmp_path / "enumerate" / "couples.csv")
        assert len(couples) == 1

    def test_cap_exceeded(self, tmp_path):
        """Orders over the cap exit 2."""
        assert _run(tmp_path, "enumerate", "--kind", "trees", "--order", "7") == 2

    def test_cap_raised_by_config_file(self, tmp_path):
        """A config file can raise the order cap."""
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"enumeration": {"max_order": 7}}))
        argv = ["enumerate", "--kind", "trees", "--order", "7", "--config", str(path)]
        assert _run(tmp_path, *argv) == 0
        trees = pd.read_csv(tmp_path / "enumerate" / "trees.csv")
        assert len(trees) == 7752

    def test_gardens_need_signature(self, tmp_path):
        """Gardens without a signature exit 1."""
        assert _run(tmp_path, "enumerate", "--kind", "gardens", "--order", "1") == 1

    def test_manifest_is_reproducible(self, tmp_path):
        """Rerunning a command rewrites identical files."""
        argv = ["enumerate", "--kind", "couples", "--order", "2"]
        assert _run(tmp_path, *argv) == 0
        first = (tmp_path / "enumerate" / "manifest.json").read_bytes()
        table = (tmp_path / "enumerate" / "couples.csv").read_bytes()
        assert _run(tmp_path, *argv) == 0
        assert (tmp_path / "enumerate" / "manifest.json").read_bytes() == first
        assert (tmp_path / "enumerate" / "couples.csv").read_bytes() == table


class TestMolecule:
    def test_mini_couple(self, tmp_path):
        """The mini couple is two atoms and three bonds."""
        assert _run(tmp_path, "molecule", "--garden", MINI_COUPLE) == 0
        out = tmp_path / "molecule"
        analysis = json.loads((out / "analysis.json").read_text())
        assert analysis["molecule"]["atoms"] == 2
        assert analysis["molecule"]["bonds"] == 3
        assert analysis["regular"] is True
        assert (out / "molecule.graphml").exists()
        assert _manifest(tmp_path, "molecule")["status"] == "success"

    def test_malformed_garden(self, tmp_path):
        """Unparseable garden text exits 1."""
        assert _run(tmp_path, "molecule", "--garden", "+(.. | 0-1") == 1


class TestWke:
    def test_zero_spectrum_stays_zero(self, tmp_path):
        """Zero data is a fixed point of the kinetic equation."""
        argv = ["wke", "--tau", "0.01", "--spectrum", "zero", "--dimension", "2", *SMALL_WKE]
        assert _run(tmp_path, *argv) == 0
        final = pd.read_csv(tmp_path / "wke" / "final.csv")
        assert (final["phi"] == 0).all()
        snaps = pd.read_csv(tmp_path / "wke" / "snapshots.csv")
        assert snaps["tau"].iloc[0] == 0.0
        assert snaps["tau"].iloc[-1] == pytest.approx(0.01)

    def test_blowup_writes_partial_outputs(self, tmp_path, monkeypatch):
        """A halted solve exits 3 and still writes what it computed."""

        def halting(phi, tau, params, radial=False):
            raise BlowupError("monitor ceiling", partial=solve(phi, params.dtau, params, radial))

        monkeypatch.setattr(cli, "solve", halting)
        argv = ["wke", "--tau", "1.0", "--spectrum", "zero", "--dimension", "2", *SMALL_WKE]
        assert _run(tmp_path, *argv) == 3
        snaps = pd.read_csv(tmp_path / "wke" / "snapshots.csv")
        assert len(snaps) == 2
        manifest = _manifest(tmp_path, "wke")
        assert manifest["status"] == "halted"
        assert "monitor ceiling" in manifest["error"]


class TestNls:
    def test_snapshots_and_mass(self, tmp_path):
        """One CSV per snapshot plus the per-trajectory mass drift."""
        argv = ["nls", "--tau", "0.05", "--snapshots", "2", *SMALL_SIM]
        assert _run(tmp_path, *argv) == 0
        out = tmp_path / "nls"
        for j in range(3):
            assert (out / f"snapshot_{j:03d}.csv").exists()
        mass = pd.read_csv(out / "mass.csv")
        assert len(mass) == 4
        assert (mass["max_relative_drift"] < 1e-6).all()
        assert _manifest(tmp_path, "nls")["seeds"]["trajectories"] == 4

    def test_thread_count_does_not_change_results(self, tmp_path):
        """Seeded ensembles give identical files with one or two threads."""
        argv = ["nls", "--tau", "0.05", *SMALL_SIM]
        assert cli.main([*argv, "--threads", "1", "--output-dir", str(tmp_path / "a")]) == 0
        assert cli.main([*argv, "--threads", "2", "--output-dir", str(tmp_path / "b")]) == 0
        name = "nls/snapshot_001.csv"
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_halt_exits_three(self, tmp_path):
        """Too many trajectories over the drift tolerance exit 3."""
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"sim": {"mass_drift_tol": 1e-300}}))
        argv = ["nls", "--tau", "0.8", "--config", str(path), *SMALL_SIM, "--dt-factor", "1.0"]
        argv = [*argv, "--delta", "0.4"]
        assert _run(tmp_path, *argv) == 3
        assert _manifest(tmp_path, "nls")["status"] == "halted"


class TestKineticCompare:
    def test_rows_per_box_size(self, tmp_path):
        """Each box size contributes one row per snapshot time."""
        argv = ["kinetic-compare", "--box-sizes", "2,3", "--tau", "0.01", *SMALL_SIM, *SMALL_WKE]
        assert _run(tmp_path, *argv) == 0
        rows = pd.read_csv(tmp_path / "kinetic-compare" / "comparison.csv")
        assert sorted(set(rows["box_size"])) == [2.0, 3.0]
        assert len(rows) == 4
        assert (rows["status"] == "success").all()
        diagnostics = _manifest(tmp_path, "kinetic-compare")["diagnostics"]
        assert diagnostics["failed_box_sizes"] == []
        assert len(diagnostics["final_sup_errors"]) == 2


class TestDemoArrow:
    def test_small_boxes(self, tmp_path):
        """One row per box size, each against the same negative limit."""
        argv = ["demo-arrow", "--box-sizes", "2,4", "--dimension", "2"]
        assert _run(tmp_path, *argv) == 0
        rows = pd.read_csv(tmp_path / "demo-arrow" / "arrow.csv")
        assert rows["box_size"].tolist() == [2.0, 4.0]
        assert rows["limit"].nunique() == 1
        assert rows["limit"].iloc[0] < 0


class TestDiagramsVerify:
    def test_low_orders_pass(self, tmp_path):
        """Every structural check passes through order two."""
        assert _run(tmp_path, "diagrams-verify", "--max-order", "2") == 0
        reports = (tmp_path / "diagrams-verify" / "reports.jsonl").read_text().splitlines()
        assert len(reports) == 4
        assert all(json.loads(line)["violations"] == [] for line in reports)
