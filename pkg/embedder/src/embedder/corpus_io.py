"""File interfaces shared with the mining pipeline.

The embedder talks to the pipeline through three text formats only: the
deduplicated invariant JSONL (read), the contrastive pairs JSONL (read),
and the `n d` vector file (write).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

VIEW_SEPARATOR = " :: "
VIEWS = ("predicate", "message")


@dataclass(frozen=True)
class Invariant:
    invariant_id: str
    predicate: str
    message: str | None

    def view_text(self, view: str) -> str:
        if view not in VIEWS:
            raise ValueError(f"view must be one of {VIEWS}, got {view!r}")
        if view == "message" and self.message:
            return f"{self.predicate}{VIEW_SEPARATOR}{self.message}"
        return self.predicate


@dataclass(frozen=True)
class Pair:
    id_a: str
    id_b: str
    label: str  # "Positive" | "Negative"
    similarity: float


def read_invariants(path: str | Path) -> list[Invariant]:
    invariants = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            invariant_id = obj["id"]
            if invariant_id in seen:
                raise ValueError(f"duplicate invariant id {invariant_id}")
            seen.add(invariant_id)
            invariants.append(Invariant(invariant_id, obj["predicate"], obj.get("message")))
    return invariants


def read_pairs(path: str | Path) -> list[Pair]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            if "header" in obj:
                continue
            pairs.append(Pair(obj["id_a"], obj["id_b"], obj["label"], obj["similarity"]))
    return pairs


def write_vectors(ids: Sequence[str], vectors: np.ndarray, path: str | Path) -> None:
    """Write the `n d` vector format the pipeline loads."""
    if vectors.ndim != 2 or vectors.shape[0] != len(ids):
        raise ValueError("vectors must be 2-D with one row per id")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(ids)} {vectors.shape[1]}\n")
        for vec_id, row in zip(ids, vectors):
            fh.write(vec_id + " " + " ".join(repr(float(x)) for x in row) + "\n")
