"""Spatial (reference-AP) and temporal (baseline-period) normalization."""

from __future__ import annotations

import numpy as np

from ..acquisition import SessionRecord
from ..errors import DomainError


def normalize_spatial(row, ref_index: int = 0) -> np.ndarray:
    """Divide an AP vector by its entry at ``ref_index`` (default AP1)."""
    row = np.asarray(row, dtype=np.float64)
    if (row <= 0).any():
        raise DomainError("spatial normalization needs strictly positive entries")
    return row / row[ref_index]


def normalize_temporal(session: SessionRecord) -> np.ndarray:
    """Divide each period's AP vector by period I; returns a (4, N) array."""
    baseline = session.aesr[0]
    if (baseline <= 0).any():
        raise DomainError("temporal normalization needs a positive baseline period")
    return session.aesr / baseline[None, :]
