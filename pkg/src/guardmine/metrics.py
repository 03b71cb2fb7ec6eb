"""Intrinsic cluster validity: Silhouette, S_Dbw, coverage, admissibility.

All metrics run on cosine distance over unit-sphere embeddings. Noise
rows (label -1) are excluded from Silhouette and S_Dbw but count against
coverage. Both scores are pure functions of (matrix, labels) and are
invariant under cluster renumbering and row permutation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .clustering import ClusterAssignment
from .embedding import EmbeddingMatrix
from .errors import MetricUndefinedError

CRITERIA = ("C1", "C2", "C3")

MIN_CLUSTERS = 8
MAX_CLUSTERS = 100
COVERAGE_FLOOR = 50.0


@dataclass(frozen=True)
class MetricValues:
    """One evaluation run's raw metric values, pre-admissibility."""

    silhouette: float
    s_dbw: float
    coverage_percent: float
    n_clusters: int


@dataclass(frozen=True)
class MetricsReport:
    silhouette: float
    s_dbw: float
    coverage_percent: float
    n_clusters: int
    admissible: bool
    failed_criteria: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.admissible != (not self.failed_criteria):
            raise ValueError("admissible must mirror an empty failed_criteria set")

    def to_json(self) -> dict:
        return {
            "silhouette": self.silhouette,
            "s_dbw": self.s_dbw,
            "coverage_percent": self.coverage_percent,
            "n_clusters": self.n_clusters,
            "admissible": self.admissible,
            "failed_criteria": list(self.failed_criteria),
        }


def _clustered(matrix: EmbeddingMatrix, assignment: ClusterAssignment):
    labels = assignment.labels
    mask = labels >= 0
    clustered_labels = labels[mask]
    clusters = sorted(set(clustered_labels.tolist()))
    if len(clusters) < 2:
        raise MetricUndefinedError(
            f"metric needs >= 2 non-noise clusters, got {len(clusters)}"
        )
    return matrix.vectors[mask], clustered_labels


def silhouette(matrix: EmbeddingMatrix, assignment: ClusterAssignment) -> float:
    """Mean silhouette (b - a) / max(a, b) over clustered points.

    a(i) is the mean cosine distance to the other members of i's cluster,
    b(i) the minimum mean distance to any other cluster. Singletons score
    0 by convention, as do points where a = b = 0.
    """
    vectors, labels = _clustered(matrix, assignment)
    m = vectors.shape[0]
    distances = 1.0 - vectors @ vectors.T
    clusters = sorted(set(labels.tolist()))
    sizes = {c: int(np.sum(labels == c)) for c in clusters}
    # mean distance from every point to every cluster
    mean_to = np.empty((m, len(clusters)))
    for idx, c in enumerate(clusters):
        members = labels == c
        mean_to[:, idx] = distances[:, members].sum(axis=1) / sizes[c]
    scores = np.zeros(m)
    for i in range(m):
        own_idx = clusters.index(labels[i])
        own_size = sizes[labels[i]]
        if own_size == 1:
            continue  # Sil(i) = 0 for singletons
        a = (mean_to[i, own_idx] * own_size - distances[i, i]) / (own_size - 1)
        b = min(mean_to[i, idx] for idx in range(len(clusters)) if idx != own_idx)
        denom = max(a, b)
        scores[i] = (b - a) / denom if denom > 0 else 0.0
    return float(scores.mean())


def _normalized_mean(vectors: np.ndarray) -> np.ndarray:
    mean = vectors.mean(axis=0)
    norm = np.linalg.norm(mean)
    if norm <= 1e-12:
        raise MetricUndefinedError("degenerate centroid: member mean has zero norm")
    return mean / norm


def s_dbw(matrix: EmbeddingMatrix, assignment: ClusterAssignment) -> float:
    """S_Dbw validity index; lower is better.

    Term 1 averages within-cluster scatter relative to the global scatter;
    term 2 measures between-cluster overlap as the density at the
    renormalized centroid midpoint over the larger of the two centroid
    densities, with density balls of radius r = mean within-cluster
    scatter, candidate points drawn from the pair's union, and a pair term
    of 0 when the denominator vanishes. The pair sum runs over ordered
    pairs and is divided by k(k-1).
    """
    vectors, labels = _clustered(matrix, assignment)
    clusters = sorted(set(labels.tolist()))
    k = len(clusters)
    members = {c: vectors[labels == c] for c in clusters}
    centroids = {c: _normalized_mean(members[c]) for c in clusters}
    scatter = {c: float(np.mean(1.0 - members[c] @ centroids[c])) for c in clusters}
    global_centroid = _normalized_mean(vectors)
    global_scatter = float(np.mean(1.0 - vectors @ global_centroid))
    if global_scatter <= 1e-12:
        raise MetricUndefinedError("all clustered points coincide: scatter(D) = 0")
    term1 = sum(scatter[c] / global_scatter for c in clusters) / k
    radius = sum(scatter.values()) / k

    def dens(point: np.ndarray, pool: np.ndarray) -> int:
        return int(np.sum(1.0 - pool @ point <= radius))

    pair_total = 0.0
    for i in range(k):
        for j in range(i + 1, k):
            ci, cj = clusters[i], clusters[j]
            pool = np.vstack((members[ci], members[cj]))
            denom = max(dens(centroids[ci], pool), dens(centroids[cj], pool))
            if denom == 0:
                continue
            midpoint = centroids[ci] + centroids[cj]
            norm = np.linalg.norm(midpoint)
            if norm <= 1e-12:
                continue  # antipodal centroids: no midpoint on the sphere
            pair_total += 2.0 * dens(midpoint / norm, pool) / denom
    term2 = pair_total / (k * (k - 1))
    return term1 + term2


def coverage(labels: Sequence[int] | np.ndarray, n_unique_invariants: int) -> float:
    """Percentage of invariants in a non-noise cluster, to two decimals."""
    labels = np.asarray(labels)
    if n_unique_invariants <= 0:
        raise ValueError("n_unique_invariants must be positive")
    if len(labels) != n_unique_invariants:
        raise ValueError(
            f"label vector length {len(labels)} != n_unique_invariants {n_unique_invariants}"
        )
    return round(100.0 * float(np.sum(labels >= 0)) / n_unique_invariants, 2)


def admissibility(
    first: MetricValues, second: MetricValues
) -> tuple[bool, tuple[str, ...]]:
    """C1 granularity 8..100, C2 coverage >= 50%, C3 two-decimal stability.

    Both runs must come from the same configuration and seed; C3 compares
    silhouette, S_Dbw, and coverage rounded half-to-even at two decimals.
    """
    failed = []
    if not MIN_CLUSTERS <= first.n_clusters <= MAX_CLUSTERS:
        failed.append("C1")
    if first.coverage_percent < COVERAGE_FLOOR:
        failed.append("C2")
    stable = (
        round(first.silhouette, 2) == round(second.silhouette, 2)
        and round(first.s_dbw, 2) == round(second.s_dbw, 2)
        and round(first.coverage_percent, 2) == round(second.coverage_percent, 2)
    )
    if not stable:
        failed.append("C3")
    return not failed, tuple(failed)


def build_report(first: MetricValues, second: MetricValues) -> MetricsReport:
    admissible, failed = admissibility(first, second)
    return MetricsReport(
        silhouette=first.silhouette,
        s_dbw=first.s_dbw,
        coverage_percent=first.coverage_percent,
        n_clusters=first.n_clusters,
        admissible=admissible,
        failed_criteria=failed,
    )
