"""Contrastive fine-tuning on pseudo-labeled invariant pairs.

Cosine-embedding loss pulls Positive pairs together and pushes Negative
pairs below a 0.5 margin, directly shaping the similarity structure the
clustering stage consumes. The masked-token pretraining route is
deliberately not implemented.
"""

from __future__ import annotations

import random
from pathlib import Path
from typing import Sequence

import torch

from .corpus_io import Invariant, Pair, read_invariants, read_pairs
from .encode import load_encoder

NEGATIVE_MARGIN = 0.5


def split_pairs(
    pairs: Sequence[Pair], holdout_fraction: float, seed: int
) -> tuple[list[Pair], list[Pair]]:
    """Per-class split into (train, held-out), seeded and deterministic."""
    rng = random.Random(f"split/{seed}")
    train: list[Pair] = []
    held: list[Pair] = []
    for label in ("Positive", "Negative"):
        bucket = sorted(
            (p for p in pairs if p.label == label), key=lambda p: (p.id_a, p.id_b)
        )
        rng.shuffle(bucket)
        cut = max(1, int(len(bucket) * holdout_fraction)) if bucket else 0
        held.extend(bucket[:cut])
        train.extend(bucket[cut:])
    return train, held


def _pair_batches(
    pairs: Sequence[Pair], batch_size: int, rng: random.Random
) -> list[list[Pair]]:
    shuffled = sorted(pairs, key=lambda p: (p.label, p.id_a, p.id_b))
    rng.shuffle(shuffled)
    return [shuffled[i : i + batch_size] for i in range(0, len(shuffled), batch_size)]


def train_contrastive(
    model,
    tokenizer,
    invariants: Sequence[Invariant],
    pairs: Sequence[Pair],
    view: str,
    epochs: int,
    seed: int,
    lr: float = 1e-3,
    batch_size: int = 16,
) -> None:
    """Train the encoder in place; epochs = 0 leaves it untouched."""
    positives = [p for p in pairs if p.label == "Positive"]
    negatives = [p for p in pairs if p.label == "Negative"]
    if not positives or not negatives:
        raise ValueError(
            f"refusing to train with an empty pair class "
            f"({len(positives)} positive, {len(negatives)} negative)"
        )
    if epochs == 0:
        return
    by_id = {inv.invariant_id: inv.view_text(view) for inv in invariants}
    missing = ({p.id_a for p in pairs} | {p.id_b for p in pairs}) - set(by_id)
    if missing:
        raise ValueError(f"pairs reference unknown invariant ids: {sorted(missing)[:5]}")
    torch.manual_seed(seed)
    rng = random.Random(f"train/{seed}")
    criterion = torch.nn.CosineEmbeddingLoss(margin=NEGATIVE_MARGIN)
    optimizer = torch.optim.AdamW(model.parameters(), lr=lr)
    max_length = min(model.config.max_position_embeddings, 512)
    model.train()
    for _ in range(epochs):
        for batch in _pair_batches(pairs, batch_size, rng):
            texts_a = [by_id[p.id_a] for p in batch]
            texts_b = [by_id[p.id_b] for p in batch]
            targets = torch.tensor(
                [1.0 if p.label == "Positive" else -1.0 for p in batch]
            )
            optimizer.zero_grad()
            pooled = []
            for texts in (texts_a, texts_b):
                encoded = tokenizer(
                    texts,
                    return_tensors="pt",
                    padding=True,
                    truncation=True,
                    max_length=max_length,
                )
                hidden = model(**encoded).last_hidden_state
                mask = encoded["attention_mask"].unsqueeze(-1).to(hidden.dtype)
                pooled.append((hidden * mask).sum(dim=1) / mask.sum(dim=1))
            loss = criterion(pooled[0], pooled[1], targets)
            loss.backward()
            optimizer.step()
    model.eval()


def fine_tune_in_memory(
    model_id: str | Path,
    invariants: Sequence[Invariant],
    pairs_path: str | Path,
    view: str,
    epochs: int,
    seed: int,
    lr: float = 1e-3,
):
    tokenizer, model = load_encoder(model_id)
    pairs = read_pairs(pairs_path)
    train_contrastive(model, tokenizer, invariants, pairs, view, epochs, seed, lr=lr)
    return tokenizer, model


def fine_tune(
    model_id: str | Path,
    invariants_path: str | Path,
    pairs_path: str | Path,
    out_dir: str | Path,
    view: str = "predicate",
    epochs: int = 1,
    seed: int = 0,
    lr: float = 1e-3,
) -> Path:
    """Fine-tune a saved encoder and write the tuned model directory."""
    invariants = read_invariants(invariants_path)
    tokenizer, model = fine_tune_in_memory(
        model_id, invariants, pairs_path, view, epochs, seed, lr=lr
    )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out_dir)
    tokenizer.save_pretrained(out_dir)
    return out_dir
