import itertools
import json
import random
from pathlib import Path

import pytest

from embedder.model import init_model

IDENTIFIER_POOL = [
    "amount", "value", "qty", "limit", "total", "balance", "shares", "cap",
    "price", "fee", "stake", "bonus",
]

TEMPLATES = [
    ("balanceof({0}) >= {1}", 2),
    ("allowance[{0}][{1}] >= {2}", 3),
    ("block.timestamp > deadline[{0}]", 1),
    ("!blacklisted[{0}]", 1),
    ("merkleproof.verify({0}, {1}, {2})", 3),
    ("totalsupply() + {0} <= {1}", 2),
    ("{0} * {1} == msg.value", 2),
    ("cooldown[{0}] < lasttrade[{1}]", 2),
]


def family_texts(per_family: int = 6) -> tuple[list[str], list[int]]:
    texts, families = [], []
    for family, (template, arity) in enumerate(TEMPLATES):
        combos = itertools.islice(itertools.permutations(IDENTIFIER_POOL, arity), per_family)
        for combo in combos:
            texts.append(template.format(*combo))
            families.append(family)
    return texts, families


def write_invariants(path: Path, texts, messages=None) -> list[str]:
    messages = messages or [None] * len(texts)
    ids = [f"inv{i:04d}" for i in range(len(texts))]
    with open(path, "w", encoding="utf-8") as fh:
        for invariant_id, text, message in zip(ids, texts, messages):
            fh.write(
                json.dumps(
                    {
                        "id": invariant_id,
                        "predicate": text,
                        "message": message,
                        "statement_kind": "Require",
                        "support": 1,
                        "provenance": [],
                    }
                )
                + "\n"
            )
    return ids


def write_family_pairs(path: Path, ids, families, per_class: int = 100, seed: int = 99):
    """Positive pairs inside a family, negative across; id_a < id_b."""
    rng = random.Random(seed)
    positives, negatives = [], []
    for i in range(len(ids)):
        for j in range(i + 1, len(ids)):
            a, b = sorted((ids[i], ids[j]))
            (positives if families[i] == families[j] else negatives).append((a, b))
    rng.shuffle(positives)
    rng.shuffle(negatives)
    with open(path, "w", encoding="utf-8") as fh:
        for a, b in positives[:per_class]:
            fh.write(json.dumps({"id_a": a, "id_b": b, "label": "Positive", "similarity": 0.9}) + "\n")
        for a, b in negatives[:per_class]:
            fh.write(json.dumps({"id_a": a, "id_b": b, "label": "Negative", "similarity": 0.1}) + "\n")
    return min(len(positives), per_class), min(len(negatives), per_class)


@pytest.fixture(scope="session")
def family_corpus(tmp_path_factory):
    base = tmp_path_factory.mktemp("corpus")
    texts, families = family_texts()
    ids = write_invariants(base / "invariants.jsonl", texts)
    n_pos, n_neg = write_family_pairs(base / "pairs.jsonl", ids, families)
    assert n_pos == n_neg == 100
    model_dir = init_model(texts, base / "model", seed=7)
    return {
        "dir": base,
        "invariants": base / "invariants.jsonl",
        "pairs": base / "pairs.jsonl",
        "model": model_dir,
        "texts": texts,
        "families": families,
        "ids": ids,
    }
