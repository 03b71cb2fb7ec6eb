"""Command-line interface.

Subcommands cover each pipeline stage plus the end-to-end `mine` run, the
fuzzing oracle, and the Cochran sample-size helper. Exit codes: 0 on
success, 1 on input errors, 2 when a search finds no admissible
configuration.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import clustering, fuzz
from .corpus import cochran_sample_size
from .embedding import (
    generate_contrastive_pairs,
    load_external_vectors,
    tfidf_embed,
    write_pairs,
    write_vector_file,
)
from .errors import EmptySelectionError, PipelineError
from .extract import (
    ViewMode,
    build_views,
    deduplicate,
    invariant_id,
    read_invariants,
    write_invariants,
)
from .pipeline import (
    EXIT_EMPTY_SELECTION,
    EXIT_INPUT_ERROR,
    EXIT_OK,
    PipelineOptions,
    build_matrices,
    ingest_and_extract,
    parse_views,
    run_pipeline,
)
from .search import GridSpec


def _load_grid(path: str | None, seed: int | None) -> GridSpec:
    if path is None:
        spec = GridSpec()
    else:
        with open(path, encoding="utf-8") as fh:
            spec = GridSpec.from_json(json.load(fh))
    if seed is not None:
        spec = dataclasses.replace(spec, seed=seed)
    return spec


def _parse_externals(values: list[str]) -> dict[str, str]:
    externals = {}
    for value in values or []:
        if "=" not in value:
            raise PipelineError(f"--external expects NAME=PATH, got {value!r}")
        name, _, path = value.partition("=")
        externals[name] = path
    return externals


def _cmd_ingest(args) -> int:
    result = ingest_and_extract(args.corpus, args.sources)
    stats = result.statistics_json()
    text = json.dumps(stats, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_OK


def _cmd_extract(args) -> int:
    result = ingest_and_extract(args.corpus, args.sources)
    invariants = deduplicate(result.extracted)
    write_invariants(invariants, args.out)
    print(f"wrote {len(invariants)} unique invariants to {args.out}")
    return EXIT_OK


def _cmd_embed(args) -> int:
    records = read_invariants(args.invariants)
    views = build_views(records, ViewMode(args.view))
    matrix = tfidf_embed(views)
    write_vector_file(matrix, args.out)
    print(f"wrote {matrix.n}x{matrix.dim} tf-idf vectors to {args.out}")
    return EXIT_OK


def _cmd_pairs(args) -> int:
    records = read_invariants(args.invariants)
    ids = [invariant_id(r.predicate) for r in records]
    matrix = load_external_vectors(args.vectors, ids)
    pairs = generate_contrastive_pairs(
        matrix,
        pos_threshold=args.pos_threshold,
        neg_threshold=args.neg_threshold,
        cap=args.cap,
        seed=args.seed,
    )
    write_pairs(pairs, args.out, matrix.source, args.pos_threshold, args.neg_threshold, args.seed)
    print(f"wrote {len(pairs)} pairs to {args.out}")
    return EXIT_OK


def _cmd_cluster(args) -> int:
    records = read_invariants(args.invariants)
    ids = [invariant_id(r.predicate) for r in records]
    matrix = load_external_vectors(args.vectors, ids)
    if args.algorithm == "kmeans":
        params = clustering.KMeansParams(args.k)
    elif args.algorithm == "dbscan":
        params = clustering.DbscanParams(args.eps, args.min_samples)
    else:
        params = clustering.HdbscanParams(args.min_cluster_size, args.selection_eps)
    assignment = clustering.cluster(matrix, clustering.ClusterParams(params, args.seed))
    clustering.write_assignment(assignment, matrix.ids, args.out)
    print(f"{assignment.n_clusters} clusters -> {args.out}")
    return EXIT_OK


def _run_search(args, out: Path) -> int:
    grid = _load_grid(args.grid, args.seed)
    views = parse_views(args.views)
    records = read_invariants(args.invariants)
    options = PipelineOptions(
        corpus="", sources=None, grid=grid, out_dir=out, views=views,
        externals=_parse_externals(args.external),
    )
    # Search over a prebuilt invariant file rather than a corpus.
    from .search import SearchRunner, enumerate_grid, select_best, write_reports

    matrices = build_matrices(records, views, options.externals)
    sources = sorted({source for source, _ in matrices})
    triples = enumerate_grid(grid, sources, views)
    reports = SearchRunner(matrices).run(triples)
    out.mkdir(parents=True, exist_ok=True)
    write_reports(reports, out / "reports.jsonl")
    from .pipeline import summary_rows
    from .report import write_summary_csv

    try:
        best, ranked = select_best(reports)
    except EmptySelectionError as exc:
        write_summary_csv(summary_rows([], list(reports)), out / "summary.csv")
        (out / "selection.json").write_text(
            json.dumps({"selected": None, "reason": str(exc)}, sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
        )
        print(str(exc), file=sys.stderr)
        return EXIT_EMPTY_SELECTION
    ranked_digests = {r.triple.digest() for r in ranked}
    others = [r for r in reports if r.triple.digest() not in ranked_digests]
    write_summary_csv(summary_rows(ranked, others), out / "summary.csv")
    (out / "selection.json").write_text(
        json.dumps({"selected": best.to_json()}, sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    print(f"best: {best.triple.canonical()}")
    return EXIT_OK


def _cmd_search(args) -> int:
    return _run_search(args, Path(args.out))


def _cmd_report(args) -> int:
    from .clustering import ClusterParams, DbscanParams, HdbscanParams, KMeansParams
    from .report import pca_2d, summarize_clusters, write_pca_csv

    records = read_invariants(args.invariants)
    selection = json.loads(Path(args.selection).read_text(encoding="utf-8"))
    if not selection.get("selected"):
        raise PipelineError("selection file holds no selected configuration")
    chosen = selection["selected"]["triple"]
    view = ViewMode(chosen["view"])
    matrices = build_matrices(records, [view], _parse_externals(args.external))
    matrix = matrices[(chosen["embedding"], view)]
    params_text = chosen["params"]
    fields = dict(part.split(":") for part in params_text.split(","))
    if chosen["algorithm"] == "kmeans":
        algo = KMeansParams(int(fields["n_clusters"]))
    elif chosen["algorithm"] == "dbscan":
        algo = DbscanParams(float(fields["eps"]), int(fields["min_samples"]))
    else:
        algo = HdbscanParams(
            int(fields["min_cluster_size"]),
            float(fields["eps"]) if "eps" in fields else None,
        )
    assignment = clustering.cluster(matrix, ClusterParams(algo, chosen["seed"]))
    views = build_views(records, view)
    summaries = summarize_clusters(assignment, records, views, matrix)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "clusters.json").write_text(
        json.dumps(
            [
                {
                    "cluster_id": s.cluster_id,
                    "size": s.size,
                    "tx_count": s.tx_count,
                    "tx_percent": s.tx_percent,
                    "tx_percent_clustered": s.tx_percent_clustered,
                    "representative": s.representative,
                    "members": list(s.members),
                }
                for s in summaries
            ],
            sort_keys=True,
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    write_pca_csv(pca_2d(matrix), assignment, out / "pca.csv")
    print(f"wrote clusters.json and pca.csv to {out}")
    return EXIT_OK


def _cmd_mine(args) -> int:
    grid = _load_grid(args.grid, args.seed)
    options = PipelineOptions(
        corpus=args.corpus,
        sources=args.sources,
        grid=grid,
        out_dir=args.out,
        views=parse_views(args.views),
        externals=_parse_externals(args.external),
    )
    code = run_pipeline(options)
    if code == EXIT_EMPTY_SELECTION:
        print("no admissible configuration found; widen the grid", file=sys.stderr)
    else:
        print(f"artifacts written to {args.out}")
    return code


def _cmd_fuzz(args) -> int:
    result = fuzz.fuzz_campaign(args.seed, args.runs, args.max_len, patched=args.patched)
    payload = result.to_json()
    if args.exhaustive:
        holds, witness = fuzz.exhaustive_check(args.exhaustive, patched=args.patched)
        payload["exhaustive"] = {
            "max_len": args.exhaustive,
            "holds": holds,
            "witness": None if witness is None else [type(a).__name__ for a in witness],
        }
    text = json.dumps(payload, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_OK


def _cmd_sample_size(args) -> int:
    size = cochran_sample_size(args.confidence, args.margin, args.p)
    print(size)
    if args.check is not None:
        adequate = args.check >= size
        print(f"sample {args.check} {'meets' if adequate else 'fails'} the minimum {size}")
        return EXIT_OK if adequate else EXIT_INPUT_ERROR
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="guardmine",
        description="Mine and cluster the guard predicates behind reverted transactions",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="classify a corpus and print failure statistics")
    p.add_argument("--corpus", required=True)
    p.add_argument("--sources")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("extract", help="extract and deduplicate guard invariants")
    p.add_argument("--corpus", required=True)
    p.add_argument("--sources", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("embed", help="write tf-idf vectors in the n d format")
    p.add_argument("--invariants", required=True)
    p.add_argument("--view", choices=["predicate", "message"], default="predicate")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_embed)

    p = sub.add_parser("pairs", help="generate contrastive pairs from a vector file")
    p.add_argument("--invariants", required=True)
    p.add_argument("--vectors", required=True)
    p.add_argument("--pos-threshold", type=float, default=0.8)
    p.add_argument("--neg-threshold", type=float, default=0.3)
    p.add_argument("--cap", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_pairs)

    p = sub.add_parser("cluster", help="run one clustering configuration")
    p.add_argument("--invariants", required=True)
    p.add_argument("--vectors", required=True)
    p.add_argument("--algorithm", choices=["kmeans", "dbscan", "hdbscan"], required=True)
    p.add_argument("--k", type=int, default=8)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--min-samples", type=int, default=10)
    p.add_argument("--min-cluster-size", type=int, default=10)
    p.add_argument("--selection-eps", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_cluster)

    p = sub.add_parser("search", help="grid-search configurations over an invariant file")
    p.add_argument("--invariants", required=True)
    p.add_argument("--grid")
    p.add_argument("--external", action="append", metavar="NAME=PATH")
    p.add_argument("--views", choices=["predicate", "message", "both"], default="predicate")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_search)

    p = sub.add_parser("report", help="cluster summaries and PCA for a selected config")
    p.add_argument("--invariants", required=True)
    p.add_argument("--selection", required=True)
    p.add_argument("--external", action="append", metavar="NAME=PATH")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("mine", help="run the full pipeline end to end")
    p.add_argument("--corpus", required=True)
    p.add_argument("--sources", required=True)
    p.add_argument("--grid")
    p.add_argument("--external", action="append", metavar="NAME=PATH")
    p.add_argument("--views", choices=["predicate", "message", "both"], default="predicate")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_mine)

    p = sub.add_parser("fuzz", help="run the bridge-upgrade fuzzing oracle")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--runs", type=int, default=256)
    p.add_argument("--max-len", type=int, default=10)
    p.add_argument("--patched", action="store_true")
    p.add_argument("--exhaustive", type=int, default=None, metavar="LEN")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_fuzz)

    p = sub.add_parser("sample-size", help="Cochran minimum sample size")
    p.add_argument("--confidence", type=float, default=0.95)
    p.add_argument("--margin", type=float, default=0.01)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--check", type=int, default=None)
    p.set_defaults(func=_cmd_sample_size)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EmptySelectionError as exc:
        print(exc.tagged(), file=sys.stderr)
        return EXIT_EMPTY_SELECTION
    except PipelineError as exc:
        print(exc.tagged(), file=sys.stderr)
        return EXIT_INPUT_ERROR
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"[input] {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
