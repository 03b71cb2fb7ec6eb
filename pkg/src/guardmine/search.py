"""Admissibility-gated configuration grid search and best-config selection.

A configuration triple is (embedding source, invariant view, clustering
algorithm + hyperparameters). Every triple is clustered twice with the
same derived seed; the two metric evaluations feed the C1-C3 verdict.
Selection among admissible reports follows the priority chain: minimize
S_Dbw, then maximize Silhouette, then maximize coverage, then prefer
fewer clusters, with ties detected at two decimals (half-to-even).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .clustering import (
    ClusterParams,
    DbscanParams,
    HdbscanParams,
    KMeansParams,
    cluster,
)
from .embedding import EmbeddingMatrix
from .errors import EmptySelectionError, MetricUndefinedError
from .extract import ViewMode
from .metrics import MetricValues, MetricsReport, build_report, coverage, s_dbw, silhouette

# Default search ranges; step sizes are configurable flags.
DEFAULT_KMEANS_RANGE = (8, 100)
DEFAULT_DBSCAN_EPS_RANGE = (0.1, 5.0)
DEFAULT_DBSCAN_MIN_SAMPLES_RANGE = (10, 15)
DEFAULT_HDBSCAN_EPS_RANGE = (0.1, 1.0)
DEFAULT_HDBSCAN_MIN_CLUSTER_SIZE_RANGE = (10, 15)
DEFAULT_EPS_STEP = 0.02

HDBSCAN_EPS_NOTE = (
    "hdbscan eps range interpreted as the cluster-selection epsilon"
)


def float_lattice(lo: float, hi: float, step: float) -> list[float]:
    """Inclusive [lo, hi] lattice with rounding-stable grid values."""
    if step <= 0:
        raise ValueError("step must be positive")
    if hi < lo:
        raise ValueError("empty range")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 10) for i in range(count)]


@dataclass(frozen=True)
class GridSpec:
    """Hyperparameter ranges for the search; None disables an algorithm."""

    kmeans_k: tuple[int, int] | None = DEFAULT_KMEANS_RANGE
    kmeans_step: int = 1
    dbscan_eps: tuple[float, float] | None = DEFAULT_DBSCAN_EPS_RANGE
    dbscan_eps_step: float = DEFAULT_EPS_STEP
    dbscan_min_samples: tuple[int, int] = DEFAULT_DBSCAN_MIN_SAMPLES_RANGE
    hdbscan_min_cluster_size: tuple[int, int] | None = DEFAULT_HDBSCAN_MIN_CLUSTER_SIZE_RANGE
    hdbscan_eps: tuple[float, float] | None = DEFAULT_HDBSCAN_EPS_RANGE
    hdbscan_eps_step: float = DEFAULT_EPS_STEP
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("kmeans_k", "dbscan_eps", "dbscan_min_samples", "hdbscan_min_cluster_size", "hdbscan_eps"):
            value = getattr(self, name)
            if value is not None and value[1] < value[0]:
                raise ValueError(f"{name} range is empty: {value}")
        if self.kmeans_step < 1:
            raise ValueError("kmeans_step must be >= 1")

    @classmethod
    def from_json(cls, obj: Mapping) -> "GridSpec":
        def pair(value):
            return None if value is None else (value[0], value[1])

        kwargs = {}
        for name in (
            "kmeans_k",
            "dbscan_eps",
            "dbscan_min_samples",
            "hdbscan_min_cluster_size",
            "hdbscan_eps",
        ):
            if name in obj:
                kwargs[name] = pair(obj[name])
        for name in ("kmeans_step", "dbscan_eps_step", "hdbscan_eps_step", "seed"):
            if name in obj:
                kwargs[name] = obj[name]
        unknown = set(obj) - {
            "kmeans_k",
            "kmeans_step",
            "dbscan_eps",
            "dbscan_eps_step",
            "dbscan_min_samples",
            "hdbscan_min_cluster_size",
            "hdbscan_eps",
            "hdbscan_eps_step",
            "seed",
        }
        if unknown:
            raise ValueError(f"unknown grid fields: {sorted(unknown)}")
        return cls(**kwargs)

    def to_json(self) -> dict:
        return {
            "kmeans_k": list(self.kmeans_k) if self.kmeans_k else None,
            "kmeans_step": self.kmeans_step,
            "dbscan_eps": list(self.dbscan_eps) if self.dbscan_eps else None,
            "dbscan_eps_step": self.dbscan_eps_step,
            "dbscan_min_samples": list(self.dbscan_min_samples),
            "hdbscan_min_cluster_size": (
                list(self.hdbscan_min_cluster_size) if self.hdbscan_min_cluster_size else None
            ),
            "hdbscan_eps": list(self.hdbscan_eps) if self.hdbscan_eps else None,
            "hdbscan_eps_step": self.hdbscan_eps_step,
            "seed": self.seed,
        }

    def parameter_lattice(self) -> list[ClusterParams]:
        """Per-algorithm parameter points in deterministic ascending order."""
        points: list[ClusterParams] = []
        if self.kmeans_k is not None:
            lo, hi = self.kmeans_k
            for k in range(lo, hi + 1, self.kmeans_step):
                points.append(ClusterParams(KMeansParams(k)))
        if self.dbscan_eps is not None:
            lo, hi = self.dbscan_min_samples
            for eps in float_lattice(*self.dbscan_eps, self.dbscan_eps_step):
                for min_samples in range(lo, hi + 1):
                    points.append(ClusterParams(DbscanParams(eps, min_samples)))
        if self.hdbscan_min_cluster_size is not None:
            lo, hi = self.hdbscan_min_cluster_size
            eps_values: list[float | None]
            if self.hdbscan_eps is None:
                eps_values = [None]
            else:
                eps_values = list(float_lattice(*self.hdbscan_eps, self.hdbscan_eps_step))
            for mcs in range(lo, hi + 1):
                for eps in eps_values:
                    points.append(ClusterParams(HdbscanParams(mcs, eps)))
        return points


@dataclass(frozen=True)
class ConfigTriple:
    embedding_source: str
    view_mode: ViewMode
    params: ClusterParams

    def canonical(self) -> str:
        return f"{self.embedding_source}|{self.view_mode.value}|{self.params.canonical()}"

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode("utf-8")).hexdigest()[:16]

    def to_json(self) -> dict:
        return {
            "embedding": self.embedding_source,
            "view": self.view_mode.value,
            "algorithm": self.params.algorithm_name,
            "params": self.params.label(),
            "seed": self.params.seed,
        }


def derive_seed(global_seed: int, triple_digest: str) -> int:
    """Per-triple seed so concurrent evaluation order cannot matter."""
    payload = f"{global_seed}:{triple_digest}".encode("utf-8")
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "big")


def enumerate_grid(
    spec: GridSpec,
    embedding_sources: Sequence[str],
    views: Sequence[ViewMode],
) -> list[ConfigTriple]:
    """Cartesian product of sources x views x parameter lattice.

    Deterministic order: embedding, view, algorithm, ascending params.
    Each triple carries its derived per-triple seed.
    """
    triples = []
    lattice = spec.parameter_lattice()
    for source in embedding_sources:
        for view in views:
            for point in lattice:
                bare = ConfigTriple(source, view, point)
                seeded = ClusterParams(point.algorithm, derive_seed(spec.seed, bare.digest()))
                triples.append(ConfigTriple(source, view, seeded))
    return triples


@dataclass(frozen=True)
class ConfigReport:
    """One evaluated triple: metrics, digest, and inadmissibility reason."""

    triple: ConfigTriple
    metrics: MetricsReport | None
    assignment_digest: str
    reason: str | None = None

    @property
    def admissible(self) -> bool:
        return self.metrics is not None and self.metrics.admissible

    def to_json(self) -> dict:
        return {
            "triple": self.triple.to_json(),
            "metrics": self.metrics.to_json() if self.metrics else None,
            "assignment_digest": self.assignment_digest,
            "reason": self.reason,
        }


def evaluate(triple: ConfigTriple, matrix: EmbeddingMatrix) -> ConfigReport:
    """Cluster twice with the same seed, compute metrics twice, gate C1-C3.

    Undefined metrics or parameters invalid for this matrix produce an
    inadmissible report with a reason instead of an error.
    """
    if matrix.n == 0:
        return ConfigReport(triple, None, "", reason="empty matrix")
    runs = []
    try:
        for _ in range(2):
            assignment = cluster(matrix, triple.params)
            values = MetricValues(
                silhouette=silhouette(matrix, assignment),
                s_dbw=s_dbw(matrix, assignment),
                coverage_percent=coverage(assignment.labels, matrix.n),
                n_clusters=assignment.n_clusters,
            )
            runs.append((assignment, values))
    except MetricUndefinedError as exc:
        return ConfigReport(triple, None, "", reason=f"undefined metrics: {exc}")
    except ValueError as exc:
        return ConfigReport(triple, None, "", reason=f"invalid params: {exc}")
    (first_assignment, first_values), (_, second_values) = runs
    report = build_report(first_values, second_values)
    return ConfigReport(triple, report, first_assignment.digest())


class SearchRunner:
    """Evaluates triples against prebuilt matrices with digest caching."""

    def __init__(self, matrices: Mapping[tuple[str, ViewMode], EmbeddingMatrix]):
        self.matrices = dict(matrices)
        self._cache: dict[str, ConfigReport] = {}

    def evaluate(self, triple: ConfigTriple) -> ConfigReport:
        key = triple.digest()
        if key not in self._cache:
            matrix = self.matrices[(triple.embedding_source, triple.view_mode)]
            self._cache[key] = evaluate(triple, matrix)
        return self._cache[key]

    def run(self, triples: Iterable[ConfigTriple]) -> list[ConfigReport]:
        return [self.evaluate(t) for t in triples]


def _selection_key(report: ConfigReport):
    m = report.metrics
    assert m is not None
    return (
        round(m.s_dbw, 2),
        -round(m.silhouette, 2),
        -round(m.coverage_percent, 2),
        m.n_clusters,
        # Raw-value refinements and the triple itself make the order total,
        # so selection cannot depend on input permutation.
        m.s_dbw,
        -m.silhouette,
        -m.coverage_percent,
        report.triple.canonical(),
    )


def select_best(reports: Sequence[ConfigReport]) -> tuple[ConfigReport, list[ConfigReport]]:
    """Best admissible report plus the full admissible ranking."""
    admissible = [r for r in reports if r.admissible]
    if not admissible:
        raise EmptySelectionError(
            "no admissible configuration: widen the grid or lower the thresholds"
        )
    ranked = sorted(admissible, key=_selection_key)
    return ranked[0], ranked


def write_reports(reports: Sequence[ConfigReport], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for report in reports:
            fh.write(json.dumps(report.to_json(), sort_keys=True) + "\n")
