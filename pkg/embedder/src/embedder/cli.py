"""Command-line interface mirroring the EmbedJob fields."""

from __future__ import annotations

import argparse
import sys

import transformers

from .corpus_io import read_invariants, read_pairs
from .encode import EmbedJob, encode, load_encoder, similarity_margin
from .model import init_model
from .train import fine_tune

transformers.logging.set_verbosity_error()
transformers.logging.disable_progress_bar()


def _cmd_init_model(args) -> int:
    invariants = read_invariants(args.invariants)
    texts = [inv.view_text(args.view) for inv in invariants]
    out = init_model(
        texts,
        args.out,
        hidden_size=args.hidden_size,
        num_layers=args.layers,
        num_heads=args.heads,
        seed=args.seed,
    )
    print(f"encoder saved to {out}")
    return 0


def _cmd_encode(args) -> int:
    job = EmbedJob(
        input=args.invariants,
        model_id=args.model,
        output=args.out,
        view=args.view,
        fine_tune_pairs=args.fine_tune_pairs,
        epochs=args.epochs,
        seed=args.seed,
        batch_size=args.batch_size,
    )
    out = encode(job)
    print(f"vectors written to {out}")
    return 0


def _cmd_finetune(args) -> int:
    out = fine_tune(
        args.model,
        args.invariants,
        args.pairs,
        args.out,
        view=args.view,
        epochs=args.epochs,
        seed=args.seed,
        lr=args.lr,
    )
    print(f"tuned encoder saved to {out}")
    return 0


def _cmd_margin(args) -> int:
    invariants = read_invariants(args.invariants)
    pairs = read_pairs(args.pairs)
    tokenizer, model = load_encoder(args.model)
    margin = similarity_margin(model, tokenizer, invariants, pairs, args.view)
    print(f"{margin:.6f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embedder",
        description="Encode invariant views with a local transformer encoder",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init-model", help="build a miniature local encoder for a corpus")
    p.add_argument("--invariants", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--view", choices=["predicate", "message"], default="predicate")
    p.add_argument("--hidden-size", type=int, default=64)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--heads", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_init_model)

    p = sub.add_parser("encode", help="write unit vectors in the n d format")
    p.add_argument("--invariants", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--view", choices=["predicate", "message"], default="predicate")
    p.add_argument("--fine-tune-pairs", default=None)
    p.add_argument("--epochs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--batch-size", type=int, default=16)
    p.set_defaults(func=_cmd_encode)

    p = sub.add_parser("finetune", help="contrastively fine-tune a saved encoder")
    p.add_argument("--invariants", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--view", choices=["predicate", "message"], default="predicate")
    p.add_argument("--epochs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lr", type=float, default=1e-3)
    p.set_defaults(func=_cmd_finetune)

    p = sub.add_parser("margin", help="positive-minus-negative mean similarity")
    p.add_argument("--invariants", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--view", choices=["predicate", "message"], default="predicate")
    p.set_defaults(func=_cmd_margin)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
