"""Unit-vector embeddings of invariant views and contrastive pair seeding.

Two embedding routes exist: a native TF-IDF vectorizer over predicate
tokens, and externally produced vectors loaded from the ``n d`` text
format. Every matrix row lives on the unit sphere so that cosine distance
1 - <u, v> is the pipeline metric everywhere downstream.
"""

from __future__ import annotations

import json
import math
import warnings
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DegenerateDocumentError, VectorFormatError
from .extract import InvariantView

UNIT_NORM_TOL = 1e-9

SOURCE_TFIDF = "tfidf"


def external_source(name: str) -> str:
    return f"external:{name}"


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Row-per-invariant unit vectors with a declared source."""

    ids: tuple[str, ...]
    vectors: np.ndarray
    source: str

    def __post_init__(self) -> None:
        if len(self.ids) != len(set(self.ids)):
            raise ValueError("ids must be unique")
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.ids):
            raise ValueError("vectors must be a 2-D array with one row per id")
        if not np.all(np.isfinite(self.vectors)):
            raise ValueError("vectors must be finite")
        norms = np.linalg.norm(self.vectors, axis=1)
        if norms.size and np.max(np.abs(norms - 1.0)) > UNIT_NORM_TOL:
            raise ValueError("every row must have unit Euclidean norm")

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def row(self, invariant_id: str) -> np.ndarray:
        return self.vectors[self.ids.index(invariant_id)]


class PairLabel(Enum):
    POSITIVE = "Positive"
    NEGATIVE = "Negative"


@dataclass(frozen=True)
class ContrastivePair:
    """Two invariants pseudo-labeled by thresholded cosine similarity."""

    id_a: str
    id_b: str
    label: PairLabel
    similarity: float

    def __post_init__(self) -> None:
        if self.id_a >= self.id_b:
            raise ValueError("pairs are unordered with canonical id_a < id_b")


# --------------------------------------------------------------------------
# Tokenization

_BRACKETS = set("()[]{}")
_SINGLE = _BRACKETS | {",", "."}
_OPERATOR_CHARS = set("+-*/%<>=!&|^~?:")


def tokenize(text: str) -> list[str]:
    """Split a normalized view text into tokens.

    Identifiers and number literals are single tokens, each bracket,
    comma, and dot stands alone, maximal runs of operator characters
    group together, and a string literal (quotes included) is one token.
    Rejoining with single spaces and re-tokenizing reproduces the list.
    """
    tokens: list[str] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "\"'":
            j = i + 1
            while j < n:
                if text[j] == "\\" and j + 1 < n:
                    j += 2
                    continue
                if text[j] == ch:
                    break
                j += 1
            j = min(j, n - 1)
            tokens.append(text[i : j + 1])
            i = j + 1
            continue
        if ch.isalpha() or ch == "_":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(text[i:j])
            i = j
            continue
        if ch.isdigit():
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(text[i:j])
            i = j
            continue
        if ch in _SINGLE:
            tokens.append(ch)
            i += 1
            continue
        if ch in _OPERATOR_CHARS:
            j = i + 1
            while j < n and text[j] in _OPERATOR_CHARS:
                j += 1
            tokens.append(text[i:j])
            i = j
            continue
        tokens.append(ch)
        i += 1
    return tokens


# --------------------------------------------------------------------------
# TF-IDF embedding


def tfidf_embed(views: Sequence[InvariantView]) -> EmbeddingMatrix:
    """Embed view texts with smoothed TF-IDF and L2-normalize the rows.

    tf is the raw in-document count; idf(t) = ln((1 + n) / (1 + df(t))) + 1
    over the n-view corpus; the vocabulary is sorted lexicographically.
    """
    if len(views) < 2:
        raise ValueError("tfidf_embed needs at least 2 views")
    token_lists = []
    for view in views:
        tokens = tokenize(view.text)
        if not tokens:
            raise DegenerateDocumentError(f"view {view.invariant_id} tokenizes to nothing")
        token_lists.append(tokens)
    vocabulary = sorted({t for tokens in token_lists for t in tokens})
    index = {t: i for i, t in enumerate(vocabulary)}
    n = len(views)
    df = Counter()
    for tokens in token_lists:
        df.update(set(tokens))
    idf = np.array([math.log((1 + n) / (1 + df[t])) + 1.0 for t in vocabulary])
    matrix = np.zeros((n, len(vocabulary)))
    for row, tokens in enumerate(token_lists):
        for token, count in Counter(tokens).items():
            matrix[row, index[token]] = count
    matrix *= idf
    matrix /= np.linalg.norm(matrix, axis=1, keepdims=True)
    return EmbeddingMatrix(tuple(v.invariant_id for v in views), matrix, SOURCE_TFIDF)


# --------------------------------------------------------------------------
# External vector files: first line "n d", then "<id> <f_1> ... <f_d>"


def load_external_vectors(path: str | Path, ids: Sequence[str]) -> EmbeddingMatrix:
    """Load externally produced vectors, re-normalize, align to `ids`.

    The file must cover the invariant set exactly; missing, duplicate, or
    unknown ids, dimension mismatches, and non-finite values raise
    VectorFormatError naming the offender.
    """
    path = Path(path)
    wanted = set(ids)
    rows: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise VectorFormatError(f"{path.name}: header must be 'n d'")
        try:
            n, dim = int(header[0]), int(header[1])
        except ValueError as exc:
            raise VectorFormatError(f"{path.name}: header must be 'n d'") from exc
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.split()
            vec_id = parts[0]
            if vec_id in rows:
                raise VectorFormatError(f"{path.name}:{lineno}: duplicate id {vec_id}")
            if vec_id not in wanted:
                raise VectorFormatError(f"{path.name}:{lineno}: unknown id {vec_id}")
            if len(parts) - 1 != dim:
                raise VectorFormatError(
                    f"{path.name}:{lineno}: expected {dim} components, got {len(parts) - 1}"
                )
            try:
                vector = np.array([float(x) for x in parts[1:]])
            except ValueError as exc:
                raise VectorFormatError(f"{path.name}:{lineno}: non-numeric component") from exc
            if not np.all(np.isfinite(vector)):
                raise VectorFormatError(f"{path.name}:{lineno}: non-finite value for {vec_id}")
            norm = np.linalg.norm(vector)
            if norm == 0.0:
                raise VectorFormatError(f"{path.name}:{lineno}: zero vector for {vec_id}")
            rows[vec_id] = vector / norm
    if len(rows) != n:
        raise VectorFormatError(f"{path.name}: header claims {n} rows, found {len(rows)}")
    missing = wanted - set(rows)
    if missing:
        raise VectorFormatError(f"{path.name}: missing ids {sorted(missing)[:5]}")
    matrix = np.stack([rows[i] for i in ids])
    return EmbeddingMatrix(tuple(ids), matrix, external_source(path.stem))


def write_vector_file(matrix: EmbeddingMatrix, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{matrix.n} {matrix.dim}\n")
        for vec_id, row in zip(matrix.ids, matrix.vectors):
            fh.write(vec_id + " " + " ".join(repr(float(x)) for x in row) + "\n")


# --------------------------------------------------------------------------
# Cosine metric and contrastive pairs


def cosine_distance(u: np.ndarray, v: np.ndarray) -> float:
    """1 - <u, v> for unit vectors; rejects non-unit inputs."""
    for name, vec in (("u", u), ("v", v)):
        if abs(np.linalg.norm(vec) - 1.0) > 1e-6:
            raise ValueError(f"{name} is not unit-norm")
    return 1.0 - float(np.dot(u, v))


def pairwise_cosine_distance(vectors: np.ndarray) -> np.ndarray:
    return 1.0 - vectors @ vectors.T


def generate_contrastive_pairs(
    matrix: EmbeddingMatrix,
    pos_threshold: float = 0.8,
    neg_threshold: float = 0.3,
    cap: int = 100_000,
    seed: int = 0,
) -> list[ContrastivePair]:
    """Pseudo-label unordered row pairs by thresholded cosine similarity.

    Pairs with similarity >= pos_threshold are Positive, <= neg_threshold
    Negative; the band between is discarded. Classes are balanced by
    seeded downsampling of the larger one, then truncated to `cap` while
    keeping the balance. Output sorts by (label, id_a, id_b) and is
    bit-reproducible for a fixed seed.
    """
    if pos_threshold <= neg_threshold:
        raise ValueError("pos_threshold must exceed neg_threshold")
    if cap < 1:
        raise ValueError("cap must be positive")
    if matrix.n < 2:
        raise ValueError("need at least 2 rows to form pairs")
    sims = matrix.vectors @ matrix.vectors.T
    positives: list[ContrastivePair] = []
    negatives: list[ContrastivePair] = []
    for i in range(matrix.n):
        for j in range(i + 1, matrix.n):
            similarity = float(sims[i, j])
            id_a, id_b = sorted((matrix.ids[i], matrix.ids[j]))
            if similarity >= pos_threshold:
                positives.append(ContrastivePair(id_a, id_b, PairLabel.POSITIVE, similarity))
            elif similarity <= neg_threshold:
                negatives.append(ContrastivePair(id_a, id_b, PairLabel.NEGATIVE, similarity))
    if not positives or not negatives:
        warnings.warn(
            "contrastive pair generation found an empty class "
            f"({len(positives)} positive, {len(negatives)} negative)",
            stacklevel=2,
        )
        return []
    keep = min(len(positives), len(negatives), cap // 2)
    rng = np.random.default_rng(seed)
    selected: list[ContrastivePair] = []
    for pool in (positives, negatives):
        pool = sorted(pool, key=lambda p: (p.id_a, p.id_b))
        if len(pool) > keep:
            chosen = rng.choice(len(pool), size=keep, replace=False)
            pool = [pool[k] for k in sorted(chosen)]
        selected.extend(pool)
    selected.sort(key=lambda p: (p.label.value, p.id_a, p.id_b))
    return selected


def write_pairs(
    pairs: Sequence[ContrastivePair],
    path: str | Path,
    source: str,
    pos_threshold: float,
    neg_threshold: float,
    seed: int,
) -> None:
    """Write pairs as JSONL with a leading header line naming the source."""
    with open(path, "w", encoding="utf-8") as fh:
        header = {
            "header": {
                "source": source,
                "pos_threshold": pos_threshold,
                "neg_threshold": neg_threshold,
                "seed": seed,
            }
        }
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for pair in pairs:
            obj = {
                "id_a": pair.id_a,
                "id_b": pair.id_b,
                "label": pair.label.value,
                "similarity": pair.similarity,
            }
            fh.write(json.dumps(obj, sort_keys=True) + "\n")


def read_pairs(path: str | Path) -> tuple[dict, list[ContrastivePair]]:
    header: dict = {}
    pairs: list[ContrastivePair] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            if "header" in obj:
                header = obj["header"]
                continue
            pairs.append(
                ContrastivePair(obj["id_a"], obj["id_b"], PairLabel(obj["label"]), obj["similarity"])
            )
    return header, pairs
