"""Post-processing of raw metrics rows into fixed-size buckets."""
from __future__ import annotations

from collections import Counter
from typing import Sequence

from .harness import write_metrics

NUMERIC = (
    "correct",
    "confidence",
    "recall_weight",
    "classification_weight",
    "steps_in_attempt",
    "distance",
    "reached_goal",
)


def bucket_rows(rows: Sequence[dict], size: int, index_key: str, columns: Sequence[str]) -> list[dict]:
    """Mean of every numeric column over consecutive groups of size rows,
    plus how many rows of each phase fell in the group."""
    if size <= 0:
        raise ValueError("bucket size must be positive")
    numeric = [c for c in columns if c in NUMERIC]
    out = []
    for start in range(0, len(rows), size):
        chunk = rows[start:start + size]
        phases = Counter(r["phase"] for r in chunk)
        row = {
            "first": chunk[0][index_key],
            "last": chunk[-1][index_key],
            "rows": len(chunk),
            "phases": ";".join(f"{k}={phases[k]}" for k in sorted(phases)),
        }
        for c in numeric:
            vals = [float(r[c]) for r in chunk if r.get(c) is not None]
            row[c] = sum(vals) / len(vals) if vals else None
        out.append(row)
    return out


def write_buckets(rows: Sequence[dict], path) -> None:
    columns = ["first", "last", "rows", "phases"] + [c for c in NUMERIC if rows and c in rows[0]]
    write_metrics(rows, path, columns)
