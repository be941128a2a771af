"""Dataset CSV format and JSON report writing.

CSV layout: optional ``#``-prefixed comment lines, then a header
``label,AP1,...,APN``, then one row per dataset with a label and N decimal
floats.  Floats are written with ``repr`` so identical data reproduces
byte-identical files.
"""

from __future__ import annotations

import json

import numpy as np

from ..errors import DatasetFormatError


def write_dataset_csv(path, labels, rows, comments=()) -> None:
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] != len(labels):
        raise ValueError("rows must be (M, N) with one label per row")
    n = rows.shape[1]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        fh.write("label," + ",".join(f"AP{i + 1}" for i in range(n)) + "\n")
        for label, row in zip(labels, rows):
            fh.write(str(label) + "," + ",".join(repr(float(v)) for v in row) + "\n")


def read_dataset_csv(path):
    """Parse a dataset CSV; returns (labels, rows).

    Raises ``DatasetFormatError`` naming the file line of the first
    malformed row.
    """
    labels = []
    rows = []
    n_cols = None
    with open(path, "r", encoding="utf-8") as fh:
        header_seen = False
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if not header_seen:
                if parts[0] != "label":
                    raise DatasetFormatError(
                        "header must start with 'label'", line=lineno)
                n_cols = len(parts) - 1
                if n_cols < 1:
                    raise DatasetFormatError("header has no AP columns", line=lineno)
                header_seen = True
                continue
            if len(parts) != n_cols + 1:
                raise DatasetFormatError(
                    f"expected {n_cols + 1} columns, got {len(parts)}", line=lineno)
            try:
                values = [float(v) for v in parts[1:]]
            except ValueError:
                raise DatasetFormatError(
                    f"non-numeric cell in row '{parts[0]}'", line=lineno)
            labels.append(parts[0])
            rows.append(values)
    if not header_seen:
        raise DatasetFormatError("file has no header")
    if not rows:
        raise DatasetFormatError("file has no data rows")
    return labels, np.asarray(rows)


def write_report_json(path, obj: dict) -> None:
    """Canonical JSON (sorted keys, 2-space indent, trailing newline)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
