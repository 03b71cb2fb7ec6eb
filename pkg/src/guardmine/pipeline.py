"""End-to-end orchestration: ingest -> extract -> embed -> search -> report.

All artifacts are byte-identical across re-runs with the same inputs and
seed: no timestamps, sorted JSON keys, repr-formatted floats, and
deterministic stage ordering throughout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .clustering import cluster
from .corpus import (
    INVARIANT_CLASSES,
    FailureClass,
    TransactionRecord,
    classify_failure,
    corpus_statistics,
    load_corpus,
    out_of_gas_match,
)
from .embedding import (
    SOURCE_TFIDF,
    EmbeddingMatrix,
    load_external_vectors,
    tfidf_embed,
)
from .errors import (
    DegeneratePredicateError,
    EmptySelectionError,
    PipelineError,
    SourceParseError,
)
from .extract import (
    ExtractedInvariant,
    GuardStatement,
    InvariantRecord,
    Provenance,
    SourceBundle,
    SourceRepository,
    ViewMode,
    build_views,
    deduplicate,
    invariant_id,
    normalize,
    normalize_message,
    scan_guards,
    write_invariants,
)
from .metrics import MetricsReport
from .report import (
    pca_2d,
    summarize_clusters,
    write_pca_csv,
    write_summary_csv,
)
from .search import (
    HDBSCAN_EPS_NOTE,
    ConfigReport,
    GridSpec,
    SearchRunner,
    enumerate_grid,
    select_best,
    write_reports,
)

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_EMPTY_SELECTION = 2


def match_guard(bundle: SourceBundle, file: str, invariant_text: str) -> GuardStatement | None:
    """Locate the guard whose normalized predicate matches the record's.

    Trace records carry no line numbers, so the pipeline scans the failing
    file and matches on the normalized predicate text.
    """
    try:
        target = normalize(invariant_text)
    except DegeneratePredicateError:
        return None
    try:
        guards = scan_guards(bundle.files[file], bundle.language)
    except SourceParseError:
        return None
    for guard in guards:
        try:
            if normalize(guard.predicate) == target:
                return guard
        except DegeneratePredicateError:
            continue
    return None


@dataclass
class IngestResult:
    records: list[TransactionRecord]
    classes: list[FailureClass]
    extracted: list[ExtractedInvariant]
    relaxed_out_of_gas: int

    def statistics_json(self) -> dict:
        stats = corpus_statistics(self.classes)
        return {
            "total_records": len(self.records),
            "classes": {
                cls.value: {"count": stat.count, "percent": stat.percent}
                for cls, stat in stats.items()
            },
            "out_of_gas_relaxed_matches": self.relaxed_out_of_gas,
        }


def ingest_and_extract(corpus_path: str | Path, sources_root: str | Path | None) -> IngestResult:
    """Classify every record and extract guard invariants where possible."""
    records = load_corpus(corpus_path)
    repo = SourceRepository(sources_root) if sources_root else None
    classes: list[FailureClass] = []
    extracted: list[ExtractedInvariant] = []
    relaxed = 0
    for record in records:
        if out_of_gas_match(record) == "relaxed":
            relaxed += 1
        has_source = repo.has(record.to_address) if repo else False
        guard = None
        if has_source and record.failure_invariant and record.failure_file:
            bundle = repo.get(record.failure_contract or record.to_address)
            if bundle is not None and record.failure_file in bundle.files:
                guard = match_guard(bundle, record.failure_file, record.failure_invariant)
        kind = guard.kind if guard else None
        cls = classify_failure(record, has_source=has_source, statement_kind=kind)
        classes.append(cls)
        if cls in INVARIANT_CLASSES and guard is not None:
            extracted.append(
                ExtractedInvariant(
                    predicate=normalize(guard.predicate),
                    message=normalize_message(guard.message),
                    statement_kind=guard.kind,
                    provenance=Provenance(
                        tx_hash=record.hash,
                        contract=record.failure_contract or record.to_address,
                        function=record.failure_function or "",
                        file=record.failure_file or "",
                        line=guard.start_line,
                    ),
                )
            )
    return IngestResult(records, classes, extracted, relaxed)


def parse_views(value: str) -> list[ViewMode]:
    mapping = {
        "predicate": [ViewMode.PREDICATE_ONLY],
        "message": [ViewMode.PREDICATE_WITH_MESSAGE],
        "both": [ViewMode.PREDICATE_ONLY, ViewMode.PREDICATE_WITH_MESSAGE],
    }
    if value not in mapping:
        raise PipelineError(f"unknown view selection {value!r} (predicate|message|both)")
    return mapping[value]


def build_matrices(
    invariants: Sequence[InvariantRecord],
    views: Sequence[ViewMode],
    externals: Mapping[str, str | Path],
) -> dict[tuple[str, ViewMode], EmbeddingMatrix]:
    """TF-IDF matrices per view plus external files aligned to the ids.

    External vector files are view-independent: the same matrix backs
    every searched view for that source.
    """
    if len(invariants) < 2:
        raise PipelineError(
            f"need at least 2 unique invariants to embed, got {len(invariants)}"
        )
    ids = [invariant_id(r.predicate) for r in invariants]
    matrices: dict[tuple[str, ViewMode], EmbeddingMatrix] = {}
    for view in views:
        matrices[(SOURCE_TFIDF, view)] = tfidf_embed(build_views(invariants, view))
    for name in sorted(externals):
        matrix = load_external_vectors(externals[name], ids)
        for view in views:
            matrices[(matrix.source, view)] = matrix
    return matrices


def summary_rows(ranked: Sequence[ConfigReport], others: Sequence[ConfigReport]) -> list[dict]:
    rows = []

    def row(rank, report: ConfigReport) -> dict:
        metrics: MetricsReport | None = report.metrics
        return {
            "rank": rank,
            "embedding": report.triple.embedding_source,
            "algorithm": report.triple.params.algorithm_name,
            "view": report.triple.view_mode.value,
            "silhouette": "" if metrics is None else repr(round(metrics.silhouette, 4)),
            "s_dbw": "" if metrics is None else repr(round(metrics.s_dbw, 4)),
            "n_clusters": "" if metrics is None else metrics.n_clusters,
            "coverage": "" if metrics is None else repr(metrics.coverage_percent),
            "params": report.triple.params.label(),
            "admissible": "yes" if report.admissible else "no",
            "reason": report.reason or (
                "" if report.admissible or metrics is None
                else "failed " + ",".join(metrics.failed_criteria)
            ),
        }

    for i, report in enumerate(ranked, start=1):
        rows.append(row(i, report))
    for report in others:
        rows.append(row("", report))
    return rows


@dataclass
class PipelineOptions:
    corpus: str | Path
    sources: str | Path | None
    grid: GridSpec
    out_dir: str | Path
    views: list[ViewMode] = field(default_factory=lambda: [ViewMode.PREDICATE_ONLY])
    externals: dict[str, str] = field(default_factory=dict)


def run_pipeline(options: PipelineOptions) -> int:
    """Execute the full pipeline; returns the process exit code.

    0 on success, 2 when no admissible configuration exists (artifacts are
    still written), 1 on input errors (raised as PipelineError upstream).
    """
    out = Path(options.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    ingest = ingest_and_extract(options.corpus, options.sources)
    (out / "stats.json").write_text(
        json.dumps(ingest.statistics_json(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    invariants = deduplicate(ingest.extracted)
    write_invariants(invariants, out / "invariants.jsonl")

    matrices = build_matrices(invariants, options.views, options.externals)
    sources = sorted({source for source, _ in matrices})
    triples = enumerate_grid(options.grid, sources, options.views)
    runner = SearchRunner(matrices)
    reports = runner.run(triples)
    write_reports(reports, out / "reports.jsonl")

    manifest = {
        "grid": options.grid.to_json(),
        "embeddings": sources,
        "views": [v.value for v in options.views],
        "seed": options.grid.seed,
        "n_invariants": len(invariants),
        "n_triples": len(triples),
        "notes": [HDBSCAN_EPS_NOTE],
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )

    try:
        best, ranked = select_best(reports)
    except EmptySelectionError as exc:
        others = list(reports)
        write_summary_csv(summary_rows([], others), out / "summary.csv")
        (out / "selection.json").write_text(
            json.dumps({"selected": None, "reason": str(exc)}, sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
        )
        return EXIT_EMPTY_SELECTION

    ranked_digests = {r.triple.digest() for r in ranked}
    others = [r for r in reports if r.triple.digest() not in ranked_digests]
    write_summary_csv(summary_rows(ranked, others), out / "summary.csv")
    (out / "selection.json").write_text(
        json.dumps({"selected": best.to_json(), "notes": [HDBSCAN_EPS_NOTE]},
                   sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )

    matrix = matrices[(best.triple.embedding_source, best.triple.view_mode)]
    assignment = cluster(matrix, best.triple.params)
    views = build_views(invariants, best.triple.view_mode)
    summaries = summarize_clusters(assignment, invariants, views, matrix)
    clusters_json = [
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
    ]
    (out / "clusters.json").write_text(
        json.dumps(clusters_json, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    write_pca_csv(pca_2d(matrix), assignment, out / "pca.csv")
    return EXIT_OK
