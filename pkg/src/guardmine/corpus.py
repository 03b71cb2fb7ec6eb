"""Failed-transaction corpus: loading, failure taxonomy, and sampling math.

A corpus is a newline-delimited UTF-8 file, one JSON object per line, with
exactly the seventeen record fields below (snake_case). Records arrive with
their failure attributes already populated by an upstream trace stage; this
module never re-executes transactions.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable

from .errors import CorpusError, RecordParseError

_HASH_RE = re.compile(r"0x[0-9a-fA-F]{64}$")
_ADDRESS_RE = re.compile(r"0x[0-9a-fA-F]{40}$")
_HEX_RE = re.compile(r"0x[0-9a-fA-F]*$")

RECORD_FIELDS = (
    "hash",
    "failure_reason",
    "block_number",
    "from_address",
    "to_address",
    "tx_input",
    "gas",
    "gas_price",
    "gas_limit",
    "value",
    "tx_index",
    "failure_message",
    "failure_invariant",
    "failure_file",
    "failure_function",
    "failure_contract",
    "timestamp",
)

_INT_FIELDS = ("block_number", "gas", "gas_price", "gas_limit", "value", "tx_index", "timestamp")
_OPTIONAL_FIELDS = (
    "failure_message",
    "failure_invariant",
    "failure_file",
    "failure_function",
    "failure_contract",
)


class FailureClass(Enum):
    OUT_OF_GAS = "OutOfGas"
    ARITHMETIC = "Arithmetic"
    NO_SOURCE_CODE = "NoSourceCode"
    EXTRACTION_FAILURE = "ExtractionFailure"
    INVARIANT_REQUIRE = "InvariantRequire"
    INVARIANT_ASSERT = "InvariantAssert"
    INVARIANT_IF_REVERT = "InvariantIfRevert"


INVARIANT_CLASSES = frozenset(
    {
        FailureClass.INVARIANT_REQUIRE,
        FailureClass.INVARIANT_ASSERT,
        FailureClass.INVARIANT_IF_REVERT,
    }
)


@dataclass(frozen=True)
class TransactionRecord:
    """One failed transaction with execution context and failure attributes."""

    hash: str
    failure_reason: str
    block_number: int
    from_address: str
    to_address: str
    tx_input: str
    gas: int
    gas_price: int
    gas_limit: int
    value: int
    tx_index: int
    failure_message: str | None
    failure_invariant: str | None
    failure_file: str | None
    failure_function: str | None
    failure_contract: str | None
    timestamp: int

    def __post_init__(self) -> None:
        if not _HASH_RE.match(self.hash):
            raise ValueError(f"hash is not a 0x-prefixed 32-byte hex string: {self.hash!r}")
        for name in ("from_address", "to_address"):
            if not _ADDRESS_RE.match(getattr(self, name)):
                raise ValueError(f"{name} is not a 0x-prefixed 20-byte hex string")
        if not _HEX_RE.match(self.tx_input):
            raise ValueError("tx_input is not a 0x-prefixed hex string")
        for name in ("block_number", "gas", "gas_price", "gas_limit", "value", "tx_index"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.gas > self.gas_limit:
            raise ValueError(f"gas {self.gas} exceeds gas_limit {self.gas_limit}")
        if self.failure_invariant:
            for name in ("failure_file", "failure_function", "failure_contract"):
                if not getattr(self, name):
                    raise ValueError(f"failure_invariant present but {name} is empty")
            if not _ADDRESS_RE.match(self.failure_contract or ""):
                raise ValueError("failure_contract is not a 0x-prefixed 20-byte hex string")


def _record_from_json(obj: object) -> TransactionRecord:
    if not isinstance(obj, dict):
        raise ValueError("record is not a JSON object")
    got = set(obj)
    expected = set(RECORD_FIELDS)
    if got - expected:
        raise ValueError(f"unknown fields: {sorted(got - expected)}")
    if expected - got:
        raise ValueError(f"missing fields: {sorted(expected - got)}")
    kwargs = {}
    for name in RECORD_FIELDS:
        value = obj[name]
        if name in _INT_FIELDS:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ValueError(f"{name} must be an integer")
        elif name in _OPTIONAL_FIELDS:
            if value is not None and not isinstance(value, str):
                raise ValueError(f"{name} must be a string or null")
        else:
            if not isinstance(value, str):
                raise ValueError(f"{name} must be a string")
        kwargs[name] = value
    return TransactionRecord(**kwargs)


def load_corpus(path: str | Path) -> list[TransactionRecord]:
    """Load all records in file order, rejecting duplicate hashes.

    Raises RecordParseError (with the 1-based line number) for malformed
    lines and CorpusError naming the hash for duplicates.
    """
    records: list[TransactionRecord] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                record = _record_from_json(obj)
            except (json.JSONDecodeError, ValueError) as exc:
                raise RecordParseError(str(exc), line=lineno) from exc
            if record.hash in seen:
                raise CorpusError(f"duplicate transaction hash {record.hash}")
            seen.add(record.hash)
            records.append(record)
    return records


# Failure-reason matching. The out-of-gas marker is matched both in its
# exact capitalized form and case-insensitively; `out_of_gas_match` lets
# callers flag records that only matched the relaxed variant.
_OUT_OF_GAS_EXACT = "Out of gas"
_ARITHMETIC_MARKERS = (
    "overflow",
    "underflow",
    "division by zero",
    "divide by zero",
    "panic code 0x11",
    "panic code 0x12",
)


def _failure_text(record: TransactionRecord) -> str:
    parts = [record.failure_reason]
    if record.failure_message:
        parts.append(record.failure_message)
    return " | ".join(parts)


def out_of_gas_match(record: TransactionRecord) -> str | None:
    """Return "exact", "relaxed", or None for the out-of-gas marker."""
    text = _failure_text(record)
    if _OUT_OF_GAS_EXACT in text:
        return "exact"
    if _OUT_OF_GAS_EXACT.lower() in text.lower():
        return "relaxed"
    return None


def _is_arithmetic(record: TransactionRecord) -> bool:
    text = _failure_text(record).lower()
    return any(marker in text for marker in _ARITHMETIC_MARKERS)


def classify_failure(
    record: TransactionRecord,
    *,
    has_source: bool = False,
    statement_kind: "StatementKind | None" = None,
) -> FailureClass:
    """Classify one record into the failure taxonomy.

    `has_source` states whether verified source exists for ``to_address``;
    `statement_kind` is the guard kind recovered by the extraction stage
    (None when extraction did not produce an invariant). Total and
    deterministic over valid records.
    """
    if out_of_gas_match(record) is not None:
        return FailureClass.OUT_OF_GAS
    if _is_arithmetic(record):
        return FailureClass.ARITHMETIC
    if not has_source:
        return FailureClass.NO_SOURCE_CODE
    if not record.failure_invariant or statement_kind is None:
        return FailureClass.EXTRACTION_FAILURE
    from .extract import StatementKind

    return {
        StatementKind.REQUIRE: FailureClass.INVARIANT_REQUIRE,
        StatementKind.ASSERT: FailureClass.INVARIANT_ASSERT,
        StatementKind.IF_REVERT: FailureClass.INVARIANT_IF_REVERT,
    }[statement_kind]


@dataclass(frozen=True)
class ClassStat:
    count: int
    percent: float | None  # None when the corpus is empty


def corpus_statistics(classes: Iterable[FailureClass]) -> dict[FailureClass, ClassStat]:
    """Per-class counts and one-decimal percentages over classified records.

    Counts always sum to the corpus size; on an empty corpus every
    percentage is None (undefined).
    """
    counts = {cls: 0 for cls in FailureClass}
    total = 0
    for cls in classes:
        counts[cls] += 1
        total += 1
    stats = {}
    for cls in FailureClass:
        percent = round(100.0 * counts[cls] / total, 1) if total else None
        stats[cls] = ClassStat(counts[cls], percent)
    return stats


_Z_VALUES = {0.90: 1.645, 0.95: 1.96, 0.99: 2.576}


def cochran_sample_size(confidence: float, margin: float, p: float) -> int:
    """Minimum sample size ceil(z^2 * p * (1-p) / margin^2).

    `confidence` must be one of 0.90, 0.95, 0.99; `margin` and `p` are
    fractions strictly inside (0, 1).
    """
    z = None
    for level, value in _Z_VALUES.items():
        if abs(confidence - level) < 1e-9:
            z = value
            break
    if z is None:
        raise ValueError(f"confidence must be one of {sorted(_Z_VALUES)}, got {confidence}")
    if not 0.0 < margin < 1.0:
        raise ValueError(f"margin must be in (0, 1), got {margin}")
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0, 1), got {p}")
    value = z * z * p * (1.0 - p) / (margin * margin)
    nearest = round(value)
    # Snap to the exact integer when the closed form is integral but the
    # float computation drifted by an ulp.
    if abs(value - nearest) < 1e-9:
        return int(nearest)
    return int(math.ceil(value))


def sample_adequate(sample_size: int, confidence: float, margin: float, p: float) -> bool:
    return sample_size >= cochran_sample_size(confidence, margin, p)
