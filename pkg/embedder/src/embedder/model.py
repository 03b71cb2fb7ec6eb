"""Local BERT-family encoder construction.

No model hub is assumed reachable: `init_model` builds a miniature
encoder with a corpus-derived WordPiece vocabulary and saves it as a
regular transformers directory, so any local model directory (this one
or a real pretrained checkpoint) satisfies the encoder contract.
"""

from __future__ import annotations

import re
import string
from pathlib import Path
from typing import Iterable

import torch
from transformers import BertConfig, BertModel, BertTokenizerFast

SPECIAL_TOKENS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]")
MAX_LENGTH = 128

_WORD_RE = re.compile(r"\w+|[^\w\s]")


def build_vocabulary(texts: Iterable[str]) -> dict[str, int]:
    """Special tokens, corpus word pieces, and a full character fallback."""
    words = set()
    for text in texts:
        words.update(_WORD_RE.findall(text.lower()))
    chars = set(string.ascii_lowercase + string.digits + string.punctuation)
    for word in list(words):
        chars.update(word)
    pieces = sorted(words | chars | {f"##{c}" for c in chars})
    vocab = {token: i for i, token in enumerate(SPECIAL_TOKENS)}
    for piece in pieces:
        if piece not in vocab:
            vocab[piece] = len(vocab)
    return vocab


def init_model(
    texts: Iterable[str],
    out_dir: str | Path,
    hidden_size: int = 64,
    num_layers: int = 2,
    num_heads: int = 2,
    seed: int = 0,
) -> Path:
    """Create and save a deterministic miniature encoder for the corpus."""
    out_dir = Path(out_dir)
    vocab = build_vocabulary(texts)
    tokenizer = BertTokenizerFast(vocab=vocab, do_lower_case=True)
    torch.manual_seed(seed)
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=hidden_size,
        num_hidden_layers=num_layers,
        num_attention_heads=num_heads,
        intermediate_size=hidden_size * 4,
        max_position_embeddings=MAX_LENGTH,
    )
    model = BertModel(config)
    out_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out_dir)
    tokenizer.save_pretrained(out_dir)
    return out_dir
