"""Writers for run outputs: CSV tables, JSON Lines, manifests and text summaries.

Files carry no timestamps, so rerunning a command with the same
configuration and seed reproduces them byte for byte.
"""

import logging
import time
from pathlib import Path
from typing import Any, Iterable, Union

import jsonlines
import pandas as pd
from jinja2 import Template
from pydantic import BaseModel, Field

from ..models.schemas import RunManifest

logger = logging.getLogger(__name__)

Record = Union[BaseModel, dict[str, Any]]


class ExportResult(BaseModel):
    """Result of export operation."""

    output_path: str = Field(..., description="Path to the exported file")
    format: str = Field(..., description="Export format (csv, jsonl, json, txt)")
    records_exported: int = Field(..., description="Number of records successfully exported")
    file_size_bytes: int = Field(..., description="Size of the output file in bytes")
    duration_seconds: float = Field(..., description="Time taken to export")
    errors: list[str] = Field(default_factory=list, description="List of errors encountered")


def _as_dict(record: Record) -> dict[str, Any]:
    if isinstance(record, BaseModel):
        return record.model_dump(mode="json")
    return dict(record)


def _flatten_dict(d: dict, parent_key: str = "", sep: str = ".") -> dict:
    """Flatten nested dictionaries and expand lists into indexed columns.

    Example:
        >>> _flatten_dict({"k": [0.5, 0.0], "c": {"mass": 1.0}})
        {"k.0": 0.5, "k.1": 0.0, "c.mass": 1.0}
    """
    items = []
    for k, v in d.items():
        new_key = f"{parent_key}{sep}{k}" if parent_key else str(k)
        if isinstance(v, dict):
            items.extend(_flatten_dict(v, new_key, sep=sep).items())
        elif isinstance(v, (list, tuple)):
            items.extend(_flatten_dict(dict(enumerate(v)), new_key, sep=sep).items())
        else:
            items.append((new_key, v))
    return dict(items)


def _result(path: Path, fmt: str, count: int, start: float, errors=None) -> ExportResult:
    return ExportResult(
        output_path=str(path),
        format=fmt,
        records_exported=count,
        file_size_bytes=path.stat().st_size,
        duration_seconds=round(time.time() - start, 2),
        errors=errors or [],
    )


def export_to_csv(records: Iterable[Record], output_path: Union[str, Path]) -> ExportResult:
    """Write records as a CSV table, one flattened record per row.

    Example:
        >>> result = export_to_csv(rows, "runs/trees.csv")
        >>> print(f"Exported {result.records_exported} records")
    """
    start_time = time.time()
    path = Path(output_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [_flatten_dict(_as_dict(r)) for r in records]
    pd.DataFrame.from_records(rows).to_csv(path, index=False)
    logger.debug(f"Wrote {len(rows)} rows to {path}")
    return _result(path, "csv", len(rows), start_time)


def export_to_jsonl(records: Iterable[Record], output_path: Union[str, Path]) -> ExportResult:
    """Write records as JSON Lines."""
    start_time = time.time()
    path = Path(output_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    errors = []
    with jsonlines.open(path, mode="w") as writer:
        for i, record in enumerate(records):
            try:
                writer.write(_as_dict(record))
                count += 1
            except Exception as e:
                errors.append(f"Record {i}: {e}")
    return _result(path, "jsonl", count, start_time, errors)


def write_manifest(manifest: RunManifest, output_path: Union[str, Path]) -> ExportResult:
    """Write a run manifest as indented JSON."""
    start_time = time.time()
    path = Path(output_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.info(f"Manifest written to {path}")
    return _result(path, "json", 1, start_time)


SUMMARY_TEMPLATE = """Run summary: {{ manifest.command }}
status: {{ manifest.status.value }}
schema: {{ manifest.schema_version }}
{% if manifest.error %}error: {{ manifest.error }}
{% endif %}
Parameters
{% for key, value in manifest.parameters.items() %}  {{ key }} = {{ value }}
{% endfor %}
{% if manifest.seeds %}Seeds
{% for key, value in manifest.seeds.items() %}  {{ key }} = {{ value }}
{% endfor %}
{% endif %}{% if manifest.diagnostics %}Diagnostics
{% for key, value in manifest.diagnostics.items() %}  {{ key }} = {{ format_value(value) }}
{% endfor %}
{% endif %}{% if manifest.warnings %}Warnings
{% for w in manifest.warnings %}  - {{ w }}
{% endfor %}
{% endif %}Outputs
{% for out in manifest.outputs %}  {{ out }}
{% endfor %}"""


def _format_value(value) -> str:
    if isinstance(value, float):
        return f"{value:.6e}"
    return str(value)


def render_summary(manifest: RunManifest) -> str:
    """Plain-text summary of a run."""
    return Template(SUMMARY_TEMPLATE).render(manifest=manifest, format_value=_format_value)


def write_summary(manifest: RunManifest, output_path: Union[str, Path]) -> ExportResult:
    start_time = time.time()
    path = Path(output_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_summary(manifest), encoding="utf-8")
    return _result(path, "txt", 1, start_time)
