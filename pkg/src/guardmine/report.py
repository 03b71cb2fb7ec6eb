"""Human-readable artifacts: 2-D PCA projections and per-cluster summaries."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .clustering import ClusterAssignment
from .embedding import EmbeddingMatrix
from .errors import DegenerateProjectionError
from .extract import InvariantRecord, InvariantView


@dataclass(frozen=True)
class Projection2D:
    """First two principal components of the embedding, per invariant."""

    ids: tuple[str, ...]
    coords: np.ndarray  # (n, 2)
    explained: tuple[float, float]


@dataclass(frozen=True)
class ClusterSummary:
    cluster_id: int
    size: int
    tx_count: int
    tx_percent: float  # of all invariant-reverted transactions
    tx_percent_clustered: float  # of transactions in clustered invariants
    representative: str
    members: tuple[str, ...]


def pca_2d(matrix: EmbeddingMatrix) -> Projection2D:
    """Project onto the top-2 right singular directions of centered data.

    Sign convention: each component's largest-magnitude coordinate is made
    positive, so plots are comparable across runs. Explained fractions are
    component variance over total variance.
    """
    vectors = matrix.vectors
    n, d = vectors.shape
    if n < 3 or d < 2:
        raise ValueError(f"pca_2d needs n >= 3 and d >= 2, got {n}x{d}")
    centered = vectors - vectors.mean(axis=0)
    _, singular, vt = np.linalg.svd(centered, full_matrices=False)
    total = float(np.sum(singular**2))
    if total <= 1e-24:
        raise DegenerateProjectionError("zero total variance: all rows identical")
    coords = centered @ vt[:2].T
    for j in range(2):
        pivot = int(np.argmax(np.abs(coords[:, j])))
        if coords[pivot, j] < 0:
            coords[:, j] = -coords[:, j]
    explained = (float(singular[0] ** 2 / total), float(singular[1] ** 2 / total))
    return Projection2D(matrix.ids, coords, explained)


def summarize_clusters(
    assignment: ClusterAssignment,
    records: Sequence[InvariantRecord],
    views: Sequence[InvariantView],
    matrix: EmbeddingMatrix,
) -> list[ClusterSummary]:
    """Per-cluster sizes, transaction weights, and representatives.

    The representative is the member closest to the cluster centroid (ties
    break toward higher support, then lexicographic text). tx_percent uses
    the total support over ALL invariant-reverted records as denominator;
    tx_percent_clustered uses only clustered records, matching the two
    denominators analysts ask for.
    """
    labels = assignment.labels
    if not (len(records) == len(views) == matrix.n == len(labels)):
        raise ValueError("records, views, matrix, and labels must align")
    total_support = sum(r.support for r in records)
    clustered_support = sum(r.support for r, lab in zip(records, labels) if lab >= 0)
    summaries = []
    for cid in range(assignment.n_clusters):
        member_idx = np.flatnonzero(labels == cid)
        member_vectors = matrix.vectors[member_idx]
        mean = member_vectors.mean(axis=0)
        norm = np.linalg.norm(mean)
        if norm > 1e-12:
            centroid = mean / norm
            dist = 1.0 - member_vectors @ centroid
        else:
            dist = np.zeros(len(member_idx))
        order = sorted(
            range(len(member_idx)),
            key=lambda i: (dist[i], -records[member_idx[i]].support, views[member_idx[i]].text),
        )
        best = member_idx[order[0]]
        tx_count = int(sum(records[i].support for i in member_idx))
        summaries.append(
            ClusterSummary(
                cluster_id=cid,
                size=len(member_idx),
                tx_count=tx_count,
                tx_percent=round(100.0 * tx_count / total_support, 2) if total_support else 0.0,
                tx_percent_clustered=(
                    round(100.0 * tx_count / clustered_support, 2) if clustered_support else 0.0
                ),
                representative=views[best].text,
                members=tuple(matrix.ids[i] for i in member_idx),
            )
        )
    return summaries


def write_pca_csv(
    projection: Projection2D, assignment: ClusterAssignment, path: str | Path
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "x", "y", "label"])
        for vec_id, (x, y), label in zip(
            projection.ids, projection.coords, assignment.labels.tolist()
        ):
            writer.writerow([vec_id, repr(float(x)), repr(float(y)), label])


def write_summary_csv(rows: Sequence[dict], path: str | Path) -> None:
    """Ranked results table, one row per evaluated configuration."""
    fields = [
        "rank",
        "embedding",
        "algorithm",
        "view",
        "silhouette",
        "s_dbw",
        "n_clusters",
        "coverage",
        "params",
        "admissible",
        "reason",
    ]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
