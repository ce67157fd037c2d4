"""Tests for CSV, JSON Lines, manifest and summary writers."""

import json

import jsonlines
import pandas as pd

from src.models.schemas import CensusRow, CollisionRow, RunManifest, RunStatus
from src.tools.export import (
    _flatten_dict,
    export_to_csv,
    export_to_jsonl,
    render_summary,
    write_manifest,
    write_summary,
)


def _manifest(**kwargs):
    return RunManifest(schema_version="1.0", command="wke", **kwargs)


class TestFlatten:
    def test_lists_become_indexed_columns(self):
        """Momenta and nested groups flatten to dotted keys."""
        flat = _flatten_dict({"k": [0.5, 0.0], "c": {"mass": 1.0}, "n": 3})
        assert flat == {"k.0": 0.5, "k.1": 0.0, "c.mass": 1.0, "n": 3}


class TestCsv:
    def test_models_to_rows(self, tmp_path):
        """One row per model, columns from the field names."""
        rows = [CensusRow(order=n, count=c, expected=c) for n, c in enumerate([1, 1, 3])]
        result = export_to_csv(rows, tmp_path / "counts.csv")
        assert result.records_exported == 3
        assert result.format == "csv"
        table = pd.read_csv(tmp_path / "counts.csv")
        assert table.columns.tolist() == ["order", "count", "expected"]
        assert table["count"].tolist() == [1, 1, 3]

    def test_momentum_columns(self, tmp_path):
        """Vector fields are spread over k.0, k.1, ... columns."""
        row = CollisionRow(k=[0.1, 0.2, 0.3], gain=1.0, k1=0.5, k2=0.2, k3=0.1, total=0.2)
        export_to_csv([row], tmp_path / "collision.csv")
        table = pd.read_csv(tmp_path / "collision.csv")
        assert table[["k.0", "k.1", "k.2"]].iloc[0].tolist() == [0.1, 0.2, 0.3]

    def test_creates_parent_directories(self, tmp_path):
        """Missing parent directories are created."""
        path = tmp_path / "a" / "b" / "rows.csv"
        export_to_csv([{"x": 1}], path)
        assert path.exists()


class TestJsonl:
    def test_one_record_per_line(self, tmp_path):
        """Dictionaries and models are both accepted."""
        path = tmp_path / "reports.jsonl"
        result = export_to_jsonl([{"check": "a"}, CensusRow(order=0, count=1)], path)
        assert result.records_exported == 2
        assert not result.errors
        with jsonlines.open(path) as reader:
            records = list(reader)
        assert records[0] == {"check": "a"}
        assert records[1]["count"] == 1


class TestManifest:
    def test_round_trip(self, tmp_path):
        """The written manifest parses back to the same model."""
        manifest = _manifest(
            parameters={"tau": 0.1},
            seeds={"master_seed": 7},
            diagnostics={"mass_drift": 1e-9},
            outputs=["snapshots.csv"],
        )
        write_manifest(manifest, tmp_path / "manifest.json")
        data = json.loads((tmp_path / "manifest.json").read_text())
        assert RunManifest.model_validate(data) == manifest
        assert data["status"] == "success"

    def test_stable_bytes(self, tmp_path):
        """Writing the same manifest twice gives identical files."""
        manifest = _manifest(parameters={"tau": 0.1})
        write_manifest(manifest, tmp_path / "a.json")
        write_manifest(manifest, tmp_path / "b.json")
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


class TestSummary:
    def test_sections(self):
        """Parameters, seeds, diagnostics and outputs are listed."""
        text = render_summary(
            _manifest(
                parameters={"tau": 0.1},
                seeds={"master_seed": 7},
                diagnostics={"mass_drift": 2.5e-9, "steps": 3},
                outputs=["final.csv"],
            )
        )
        assert text.startswith("Run summary: wke")
        assert "tau = 0.1" in text
        assert "master_seed = 7" in text
        assert "mass_drift = 2.500000e-09" in text
        assert "steps = 3" in text
        assert "final.csv" in text
        assert "Warnings" not in text

    def test_halted_run(self, tmp_path):
        """Errors and warnings of a halted run appear in the summary."""
        manifest = _manifest(
            status=RunStatus.HALTED, error="monitor ceiling", warnings=["negative values"]
        )
        write_summary(manifest, tmp_path / "summary.txt")
        text = (tmp_path / "summary.txt").read_text()
        assert "status: halted" in text
        assert "error: monitor ceiling" in text
        assert "  - negative values" in text
