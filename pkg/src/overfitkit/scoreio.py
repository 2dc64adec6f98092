"""Reading and writing anomaly-score files.

Two on-disk layouts are understood:

* plain: one score per line, UTF-8, with ``#`` comment lines and blank
  lines ignored;
* labeled CSV: ``score,label`` rows where label 1 marks the anomalous
  class and 0 the normal class (an optional ``score,label`` header and
  ``#`` comments are tolerated).

Malformed or non-finite values are rejected with the offending file and
line number so shell pipelines fail loudly.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .metrics import ScoreSet

__all__ = ["read_scores", "read_labeled_scores", "write_scores"]


def _parse_score(token: str, path: Path, lineno: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ValueError(f"{path}:{lineno}: not a number: {token!r}") from None
    if not math.isfinite(value):
        raise ValueError(f"{path}:{lineno}: non-finite score: {token!r}")
    return value


def read_scores(path) -> np.ndarray:
    """Load a plain score file into a float array."""
    path = Path(path)
    values: list[float] = []
    with path.open("r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            values.append(_parse_score(line, path, lineno))
    if not values:
        raise ValueError(f"{path}: no scores found")
    return np.asarray(values, dtype=float)


def read_labeled_scores(path) -> ScoreSet:
    """Load a ``score,label`` CSV into a ScoreSet (label 1 = anomalous)."""
    path = Path(path)
    anomaly: list[float] = []
    normal: list[float] = []
    with path.open("r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if lineno == 1 and line.replace(" ", "") == "score,label":
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 2:
                raise ValueError(
                    f"{path}:{lineno}: expected 'score,label', got {line!r}"
                )
            value = _parse_score(parts[0], path, lineno)
            if parts[1] == "1":
                anomaly.append(value)
            elif parts[1] == "0":
                normal.append(value)
            else:
                raise ValueError(
                    f"{path}:{lineno}: label must be 0 or 1, got {parts[1]!r}"
                )
    if not anomaly and not normal:
        raise ValueError(f"{path}: no scores found")
    return ScoreSet(anomaly=np.asarray(anomaly), normal=np.asarray(normal))


def write_scores(path, values, *, comment: str | None = None) -> None:
    """Write a plain score file (one value per line, ``repr`` precision)."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        if comment:
            handle.write(f"# {comment}\n")
        for value in np.asarray(values, dtype=float):
            handle.write(f"{float(value)!r}\n")
