"""Clustering engines over unit-sphere embeddings with cosine distance.

Three engines share one assignment contract: integer labels per matrix
row, -1 for noise, non-noise labels densely renumbered 0..k-1. All three
are deterministic: identical (matrix, params, seed) produce bit-identical
labels, which the grid search's stability criterion relies on.

Neighborhood computation is exact (full pairwise distances); corpora here
are a few thousand rows at most.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .embedding import EmbeddingMatrix, pairwise_cosine_distance

_MAX_KMEANS_ITER = 300
_LAMBDA_CAP = 1e12  # 1/distance when merge distances underflow to ~0


@dataclass(frozen=True)
class KMeansParams:
    k: int

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")

    def label(self) -> str:
        return f"n_clusters:{self.k}"


@dataclass(frozen=True)
class DbscanParams:
    eps: float
    min_samples: int

    def __post_init__(self) -> None:
        if self.eps <= 0:
            raise ValueError("eps must be > 0")
        if self.min_samples < 1:
            raise ValueError("min_samples must be >= 1")

    def label(self) -> str:
        return f"eps:{self.eps},min_samples:{self.min_samples}"


@dataclass(frozen=True)
class HdbscanParams:
    min_cluster_size: int
    selection_eps: float | None = None

    def __post_init__(self) -> None:
        if self.min_cluster_size < 2:
            raise ValueError("min_cluster_size must be >= 2")
        if self.selection_eps is not None and self.selection_eps <= 0:
            raise ValueError("selection_eps must be > 0 when given")

    def label(self) -> str:
        if self.selection_eps is None:
            return f"min_cluster_size:{self.min_cluster_size}"
        return f"min_cluster_size:{self.min_cluster_size},eps:{self.selection_eps}"


AlgorithmParams = Union[KMeansParams, DbscanParams, HdbscanParams]

_ALGORITHM_NAMES = {KMeansParams: "kmeans", DbscanParams: "dbscan", HdbscanParams: "hdbscan"}


@dataclass(frozen=True)
class ClusterParams:
    algorithm: AlgorithmParams
    seed: int = 0

    @property
    def algorithm_name(self) -> str:
        return _ALGORITHM_NAMES[type(self.algorithm)]

    def label(self) -> str:
        return self.algorithm.label()

    def canonical(self) -> str:
        """Seed-independent canonical form used for digests and ordering."""
        return f"{self.algorithm_name}({self.algorithm.label()})"


@dataclass(frozen=True)
class ClusterAssignment:
    """Per-row labels (-1 noise) plus the params that produced them."""

    labels: np.ndarray
    params: ClusterParams
    n_clusters: int = field(default=-1)

    def __post_init__(self) -> None:
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "labels", labels)
        distinct = sorted(set(labels.tolist()) - {-1})
        if distinct != list(range(len(distinct))):
            raise ValueError("labels must be dense 0..k-1 with -1 for noise")
        if self.n_clusters == -1:
            object.__setattr__(self, "n_clusters", len(distinct))
        elif self.n_clusters != len(distinct):
            raise ValueError("n_clusters disagrees with the label vector")

    def digest(self) -> str:
        return hashlib.sha256(self.labels.tobytes()).hexdigest()[:16]


def _renumber(labels: np.ndarray) -> np.ndarray:
    """Densely renumber non-noise labels by first appearance in row order."""
    mapping: dict[int, int] = {}
    out = np.full(labels.shape, -1, dtype=np.int64)
    for i, lab in enumerate(labels.tolist()):
        if lab < 0:
            continue
        if lab not in mapping:
            mapping[lab] = len(mapping)
        out[i] = mapping[lab]
    return out


# --------------------------------------------------------------------------
# Spherical K-Means


def _kmeans_pp_init(vectors: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Standard k-means++ seeding with squared cosine distance weights."""
    n = vectors.shape[0]
    chosen = [int(rng.integers(n))]
    dist = np.maximum(1.0 - vectors @ vectors[chosen[0]], 0.0)
    weights = dist * dist
    for _ in range(k - 1):
        total = float(weights.sum())
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=weights / total))
        chosen.append(idx)
        new_dist = np.maximum(1.0 - vectors @ vectors[idx], 0.0)
        np.minimum(dist, new_dist, out=dist)
        weights = dist * dist
    return vectors[chosen].copy()


def kmeans_with_trace(
    matrix: EmbeddingMatrix, k: int, seed: int
) -> tuple[ClusterAssignment, tuple[float, ...]]:
    """Spherical k-means plus the per-iteration inertia trace.

    Max-dot assignment, renormalized-mean update. A centroid whose member
    mean collapses to zero (empty cluster or antipodal members) is
    re-seeded from the point currently farthest from its assigned
    centroid. Iterates to an assignment fixed point or 300 iterations;
    empty clusters are dropped and labels renumbered at the end. K-Means
    never emits noise labels.
    """
    vectors = matrix.vectors
    n = vectors.shape[0]
    if k > n:
        raise ValueError(f"k={k} exceeds the number of points n={n}")
    rng = np.random.default_rng(seed)
    centroids = _kmeans_pp_init(vectors, k, rng)
    labels = np.full(n, -1, dtype=np.int64)
    inertia_trace: list[float] = []
    for _ in range(_MAX_KMEANS_ITER):
        sims = vectors @ centroids.T
        new_labels = np.argmax(sims, axis=1).astype(np.int64)
        inertia_trace.append(float(np.sum(1.0 - sims[np.arange(n), new_labels])))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        assigned_dist = 1.0 - sims[np.arange(n), labels]
        farthest = np.argsort(-assigned_dist, kind="stable")
        reseed_cursor = 0
        for c in range(k):
            members = vectors[labels == c]
            mean = members.mean(axis=0) if members.size else np.zeros(vectors.shape[1])
            norm = np.linalg.norm(mean)
            if norm > 1e-12:
                centroids[c] = mean / norm
            else:
                centroids[c] = vectors[farthest[reseed_cursor]]
                reseed_cursor += 1
    assignment = ClusterAssignment(_renumber(labels), ClusterParams(KMeansParams(k), seed))
    return assignment, tuple(inertia_trace)


def kmeans(matrix: EmbeddingMatrix, k: int, seed: int) -> ClusterAssignment:
    return kmeans_with_trace(matrix, k, seed)[0]


def spherical_inertia(matrix: EmbeddingMatrix, assignment: ClusterAssignment) -> float:
    """Sum of cosine distances from each point to its cluster centroid."""
    total = 0.0
    for c in range(assignment.n_clusters):
        members = matrix.vectors[assignment.labels == c]
        mean = members.mean(axis=0)
        norm = np.linalg.norm(mean)
        if norm > 1e-12:
            centroid = mean / norm
            total += float(np.sum(1.0 - members @ centroid))
        else:
            total += float(len(members))
    return total


# --------------------------------------------------------------------------
# DBSCAN


def dbscan(matrix: EmbeddingMatrix, eps: float, min_samples: int) -> ClusterAssignment:
    """Classical density clustering over cosine distance.

    A point is core iff it has >= min_samples neighbors within distance
    <= eps (itself included). Clusters are connected components of core
    points; border points attach to the first cluster that reaches them,
    with cluster seeds and neighbor expansion visited in row order.
    """
    if eps <= 0:
        raise ValueError("eps must be > 0")
    vectors = matrix.vectors
    n = vectors.shape[0]
    distances = pairwise_cosine_distance(vectors)
    neighbor_lists = [np.flatnonzero(distances[i] <= eps) for i in range(n)]
    core = np.array([len(nb) >= min_samples for nb in neighbor_lists])
    labels = np.full(n, -1, dtype=np.int64)
    cluster_id = 0
    for seed_point in range(n):
        if not core[seed_point] or labels[seed_point] != -1:
            continue
        labels[seed_point] = cluster_id
        queue = [seed_point]
        head = 0
        while head < len(queue):
            point = queue[head]
            head += 1
            for neighbor in neighbor_lists[point].tolist():
                if labels[neighbor] == -1:
                    labels[neighbor] = cluster_id
                    if core[neighbor]:
                        queue.append(neighbor)
        cluster_id += 1
    return ClusterAssignment(labels, ClusterParams(DbscanParams(eps, min_samples)))


# --------------------------------------------------------------------------
# HDBSCAN (mutual reachability -> MST -> condensed tree -> excess of mass)


@dataclass
class _CondensedNode:
    parent: int | None
    birth_lambda: float
    points: list[tuple[int, float]] = field(default_factory=list)  # (row, departure lambda)
    children: list[int] = field(default_factory=list)  # child cluster ids
    child_lambda: float = 0.0
    size_at_birth: int = 0


def _mutual_reachability(distances: np.ndarray, k: int) -> np.ndarray:
    core = np.partition(distances, k - 1, axis=1)[:, k - 1]
    mr = np.maximum(distances, core[:, None])
    mr = np.maximum(mr, core[None, :])
    np.fill_diagonal(mr, 0.0)
    return mr


def _minimum_spanning_tree(weights: np.ndarray) -> list[tuple[float, int, int]]:
    """Prim's algorithm over a dense weight matrix; edges sorted ascending."""
    n = weights.shape[0]
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    best = weights[0].copy()
    best_from = np.zeros(n, dtype=np.int64)
    edges: list[tuple[float, int, int]] = []
    for _ in range(n - 1):
        candidates = np.where(in_tree, np.inf, best)
        nxt = int(np.argmin(candidates))
        edges.append((float(best[nxt]), int(best_from[nxt]), nxt))
        in_tree[nxt] = True
        closer = weights[nxt] < best
        best[closer] = weights[nxt][closer]
        best_from[closer] = nxt
    edges.sort(key=lambda e: (e[0], e[1], e[2]))
    return edges


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> None:
        self.parent[self.find(a)] = self.find(b)


def _single_linkage(edges: list[tuple[float, int, int]], n: int):
    """Build the dendrogram: returns (children, merge_distance, sizes).

    Internal node ids start at n; node n+i is created by the i-th merge.
    """
    uf = _UnionFind(2 * n - 1)
    current: dict[int, int] = {i: i for i in range(n)}
    children: dict[int, tuple[int, int]] = {}
    merge_distance: dict[int, float] = {}
    sizes: dict[int, int] = {i: 1 for i in range(n)}
    next_id = n
    for weight, a, b in edges:
        ra, rb = uf.find(a), uf.find(b)
        ca, cb = current[ra], current[rb]
        children[next_id] = (ca, cb)
        merge_distance[next_id] = weight
        sizes[next_id] = sizes[ca] + sizes[cb]
        uf.union(ra, rb)
        root = uf.find(ra)
        current[root] = next_id
        next_id += 1
    return children, merge_distance, sizes


def _condense_tree(
    children: dict[int, tuple[int, int]],
    merge_distance: dict[int, float],
    sizes: dict[int, int],
    n: int,
    min_cluster_size: int,
) -> dict[int, _CondensedNode]:
    """Collapse the dendrogram into clusters of >= min_cluster_size points.

    Walking top-down, a split into two big-enough sides births two new
    clusters; otherwise small sides fall out of the current cluster as
    points at lambda = 1/distance.
    """
    root = 2 * n - 2
    nodes: dict[int, _CondensedNode] = {0: _CondensedNode(parent=None, birth_lambda=0.0)}
    nodes[0].size_at_birth = n
    next_cluster = 1
    # stack holds (hierarchy node, condensed cluster id)
    stack = [(root, 0)]
    while stack:
        node, cluster = stack.pop()
        if node < n:
            nodes[cluster].points.append((node, _LAMBDA_CAP))
            continue
        left, right = children[node]
        distance = merge_distance[node]
        lam = min(1.0 / distance, _LAMBDA_CAP) if distance > 0 else _LAMBDA_CAP
        big_left = sizes[left] >= min_cluster_size
        big_right = sizes[right] >= min_cluster_size
        if big_left and big_right:
            for side in (left, right):
                child_id = next_cluster
                next_cluster += 1
                nodes[child_id] = _CondensedNode(parent=cluster, birth_lambda=lam)
                nodes[child_id].size_at_birth = sizes[side]
                nodes[cluster].children.append(child_id)
                stack.append((side, child_id))
        else:
            for side, big in ((left, big_left), (right, big_right)):
                if big:
                    stack.append((side, cluster))
                else:
                    for point in _collect_points(children, side, n):
                        nodes[cluster].points.append((point, lam))
    return nodes


def _collect_points(children: dict[int, tuple[int, int]], node: int, n: int) -> list[int]:
    out: list[int] = []
    stack = [node]
    while stack:
        current = stack.pop()
        if current < n:
            out.append(current)
        else:
            stack.extend(children[current])
    return out


def _stability(nodes: dict[int, _CondensedNode]) -> dict[int, float]:
    scores: dict[int, float] = {}
    for cid, node in nodes.items():
        total = 0.0
        for _, lam in node.points:
            total += lam - node.birth_lambda
        for child in node.children:
            total += (nodes[child].birth_lambda - node.birth_lambda) * nodes[child].size_at_birth
        scores[cid] = total
    return scores


def _excess_of_mass(nodes: dict[int, _CondensedNode], stability: dict[int, float]) -> set[int]:
    """Select the cluster set maximizing total stability; root excluded."""
    selected: set[int] = set()
    subtree_score: dict[int, float] = {}
    for cid in sorted(nodes, reverse=True):  # children have larger ids than parents
        node = nodes[cid]
        if not node.children:
            subtree_score[cid] = stability[cid]
            if cid != 0:
                selected.add(cid)
            continue
        child_total = sum(subtree_score[c] for c in node.children)
        if cid == 0:
            subtree_score[cid] = child_total
            continue
        if stability[cid] >= child_total:
            subtree_score[cid] = stability[cid]
            _unselect_descendants(nodes, cid, selected)
            selected.add(cid)
        else:
            subtree_score[cid] = child_total
    return selected


def _unselect_descendants(nodes: dict[int, _CondensedNode], cid: int, selected: set[int]) -> None:
    stack = list(nodes[cid].children)
    while stack:
        current = stack.pop()
        selected.discard(current)
        stack.extend(nodes[current].children)


def _apply_selection_eps(
    nodes: dict[int, _CondensedNode], selected: set[int], selection_eps: float
) -> set[int]:
    """Merge selected clusters born below `selection_eps` into ancestors."""
    result: set[int] = set()
    for cid in sorted(selected):
        birth_distance = 1.0 / nodes[cid].birth_lambda if nodes[cid].birth_lambda > 0 else np.inf
        current = cid
        while birth_distance < selection_eps:
            parent = nodes[current].parent
            if parent is None or parent == 0:
                break
            current = parent
            lam = nodes[current].birth_lambda
            birth_distance = 1.0 / lam if lam > 0 else np.inf
        result.add(current)
    # Keep the antichain property: drop anything with a selected ancestor.
    final: set[int] = set()
    for cid in result:
        ancestor = nodes[cid].parent
        has_selected_ancestor = False
        while ancestor is not None:
            if ancestor in result:
                has_selected_ancestor = True
                break
            ancestor = nodes[ancestor].parent
        if not has_selected_ancestor:
            final.add(cid)
    return final


def hdbscan(
    matrix: EmbeddingMatrix, min_cluster_size: int, selection_eps: float | None = None
) -> ClusterAssignment:
    """Hierarchical density clustering with excess-of-mass extraction.

    Core distances use k = min_cluster_size neighbors (self included);
    the condensed tree keeps only clusters of >= min_cluster_size points;
    `selection_eps` optionally merges clusters born below that distance
    into their ancestors. Points outside every selected cluster are noise.
    """
    if min_cluster_size < 2:
        raise ValueError("min_cluster_size must be >= 2")
    params = ClusterParams(HdbscanParams(min_cluster_size, selection_eps))
    n = matrix.n
    if n < min_cluster_size:
        return ClusterAssignment(np.full(n, -1, dtype=np.int64), params)
    distances = pairwise_cosine_distance(matrix.vectors)
    np.fill_diagonal(distances, 0.0)
    mr = _mutual_reachability(distances, min_cluster_size)
    edges = _minimum_spanning_tree(mr)
    children, merge_distance, sizes = _single_linkage(edges, n)
    nodes = _condense_tree(children, merge_distance, sizes, n, min_cluster_size)
    selected = _excess_of_mass(nodes, _stability(nodes))
    if selection_eps is not None:
        selected = _apply_selection_eps(nodes, selected, selection_eps)
    labels = np.full(n, -1, dtype=np.int64)
    for cid in sorted(selected):
        stack = [cid]
        while stack:
            current = stack.pop()
            for point, _ in nodes[current].points:
                labels[point] = cid
            stack.extend(nodes[current].children)
    return ClusterAssignment(_renumber(labels), params)


# --------------------------------------------------------------------------
# Dispatch and export


def cluster(matrix: EmbeddingMatrix, params: ClusterParams) -> ClusterAssignment:
    algo = params.algorithm
    if isinstance(algo, KMeansParams):
        assignment = kmeans(matrix, algo.k, params.seed)
    elif isinstance(algo, DbscanParams):
        assignment = dbscan(matrix, algo.eps, algo.min_samples)
    else:
        assignment = hdbscan(matrix, algo.min_cluster_size, algo.selection_eps)
    return ClusterAssignment(assignment.labels, params, assignment.n_clusters)


def write_assignment(
    assignment: ClusterAssignment, ids: Sequence[str], path
) -> None:
    """Export: one JSON header line, then `<invariant id> <label>` lines."""
    header = {
        "algorithm": assignment.params.algorithm_name,
        "params": assignment.params.label(),
        "seed": assignment.params.seed,
        "n_clusters": assignment.n_clusters,
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for vec_id, label in zip(ids, assignment.labels.tolist()):
            fh.write(f"{vec_id} {label}\n")
