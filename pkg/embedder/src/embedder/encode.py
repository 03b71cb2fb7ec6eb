"""Encoding invariant view texts into unit vectors."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
from transformers import AutoModel, AutoTokenizer

from .corpus_io import Invariant, read_invariants, write_vectors
from .model import MAX_LENGTH


@dataclass(frozen=True)
class EmbedJob:
    """One encoding run: dedup input file to vector output file."""

    input: str | Path
    model_id: str | Path
    output: str | Path
    view: str = "predicate"
    fine_tune_pairs: str | Path | None = None
    epochs: int = 1
    seed: int = 0
    batch_size: int = 16


def load_encoder(model_id: str | Path):
    tokenizer = AutoTokenizer.from_pretrained(str(model_id))
    model = AutoModel.from_pretrained(str(model_id))
    model.eval()
    return tokenizer, model


def mean_pooled(model, tokenizer, texts: Sequence[str], batch_size: int = 16) -> torch.Tensor:
    """Mean-pool final hidden states over real (unpadded) tokens."""
    pooled = []
    max_length = min(getattr(model.config, "max_position_embeddings", MAX_LENGTH), 512)
    with torch.no_grad():
        for start in range(0, len(texts), batch_size):
            batch = list(texts[start : start + batch_size])
            encoded = tokenizer(
                batch,
                return_tensors="pt",
                padding=True,
                truncation=True,
                max_length=max_length,
            )
            hidden = model(**encoded).last_hidden_state
            mask = encoded["attention_mask"].unsqueeze(-1).to(hidden.dtype)
            pooled.append((hidden * mask).sum(dim=1) / mask.sum(dim=1))
    return torch.cat(pooled, dim=0)


def encode_texts(
    model, tokenizer, texts: Sequence[str], batch_size: int = 16
) -> np.ndarray:
    """Unit-norm embeddings, identical for identical texts.

    Unique texts are encoded once in sorted order, so results do not
    depend on input order or on duplicate placement across batches.
    """
    unique = sorted(set(texts))
    max_length = min(getattr(model.config, "max_position_embeddings", MAX_LENGTH), 512)
    too_long = [t for t in unique if len(tokenizer(t).input_ids) > max_length]
    if too_long:
        warnings.warn(
            f"{len(too_long)} text(s) exceed the encoder length {max_length} and were truncated",
            stacklevel=2,
        )
    pooled = mean_pooled(model, tokenizer, unique, batch_size).numpy().astype(np.float64)
    norms = np.linalg.norm(pooled, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        raise ValueError("encoder produced a zero vector")
    pooled /= norms
    index = {text: i for i, text in enumerate(unique)}
    return np.stack([pooled[index[t]] for t in texts])


def encode(job: EmbedJob) -> Path:
    """Run an EmbedJob end to end and write the `n d` vector file."""
    invariants = read_invariants(job.input)
    if not invariants:
        raise ValueError(f"no invariants in {job.input}")
    torch.manual_seed(job.seed)
    if job.fine_tune_pairs is not None:
        from .train import fine_tune_in_memory

        tokenizer, model = fine_tune_in_memory(
            job.model_id, invariants, job.fine_tune_pairs, job.view, job.epochs, job.seed
        )
    else:
        tokenizer, model = load_encoder(job.model_id)
    texts = [inv.view_text(job.view) for inv in invariants]
    vectors = encode_texts(model, tokenizer, texts, job.batch_size)
    write_vectors([inv.invariant_id for inv in invariants], vectors, job.output)
    return Path(job.output)


def similarity_margin(
    model, tokenizer, invariants: Sequence[Invariant], pairs, view: str, batch_size: int = 16
) -> float:
    """Mean positive-pair cosine similarity minus mean negative-pair one."""
    by_id = {inv.invariant_id: inv.view_text(view) for inv in invariants}
    texts = sorted({by_id[p.id_a] for p in pairs} | {by_id[p.id_b] for p in pairs})
    vectors = encode_texts(model, tokenizer, texts, batch_size)
    index = {text: i for i, text in enumerate(texts)}
    sims = {"Positive": [], "Negative": []}
    for pair in pairs:
        a = vectors[index[by_id[pair.id_a]]]
        b = vectors[index[by_id[pair.id_b]]]
        sims[pair.label].append(float(np.dot(a, b)))
    if not sims["Positive"] or not sims["Negative"]:
        raise ValueError("margin needs both positive and negative pairs")
    return float(np.mean(sims["Positive"]) - np.mean(sims["Negative"]))
