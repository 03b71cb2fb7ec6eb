"""Guard-predicate extraction from verified contract source.

Recognizes the three revert-guard statement forms::

    require(P);  require(P, "M");
    assert(P);                      # plus Vyper's  assert P, "M"
    if (P) revert ...;  if (P) throw;  if (P) { revert ...; }

No full-grammar parsing happens here: the scanner is comment- and
string-literal-aware, tracks bracket nesting, and otherwise treats the
source as text. Statements may span multiple physical lines; a reported
line anywhere inside the statement resolves to it.
"""

from __future__ import annotations

import hashlib
import json
import re
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import (
    DegeneratePredicateError,
    ExtractionFailure,
    SourceParseError,
)


class StatementKind(Enum):
    REQUIRE = "Require"
    ASSERT = "Assert"
    IF_REVERT = "IfRevert"


class Language(Enum):
    SOLIDITY = "Solidity"
    VYPER = "Vyper"


class ViewMode(Enum):
    PREDICATE_ONLY = "predicate"
    PREDICATE_WITH_MESSAGE = "message"


VIEW_SEPARATOR = " :: "


@dataclass(frozen=True)
class SourceBundle:
    """Verified source files for one contract address."""

    contract_address: str
    files: Mapping[str, str]
    language: Language = Language.SOLIDITY


@dataclass(frozen=True)
class GuardStatement:
    """One recognized guard in a source file (offsets into cleaned text)."""

    kind: StatementKind
    predicate: str
    message: str | None
    start_line: int
    end_line: int
    start: int
    end: int


@dataclass(frozen=True)
class Provenance:
    tx_hash: str
    contract: str
    function: str
    file: str
    line: int


@dataclass(frozen=True)
class ExtractedInvariant:
    """One (normalized predicate, tx) pair produced by extraction."""

    predicate: str
    message: str | None
    statement_kind: StatementKind
    provenance: Provenance


@dataclass(frozen=True)
class InvariantRecord:
    """A deduplicated guard predicate with merged provenance."""

    predicate: str
    message: str | None
    statement_kind: StatementKind
    provenance: frozenset[Provenance]
    support: int


@dataclass(frozen=True)
class InvariantView:
    """The text form fed to embedding for one invariant."""

    invariant_id: str
    mode: ViewMode
    text: str


def invariant_id(predicate: str) -> str:
    """Stable identifier derived from the normalized predicate."""
    return "inv" + hashlib.sha256(predicate.encode("utf-8")).hexdigest()[:12]


# --------------------------------------------------------------------------
# Source scanning


def _scan_source(text: str, language: Language = Language.SOLIDITY) -> tuple[str, list[bool]]:
    """Blank comments out of `text` (newlines kept) and mark string literals.

    Returns the cleaned text and a per-character mask that is True inside
    string literals (quotes included). Raises SourceParseError for
    unterminated block comments or string literals.
    """
    chars = list(text)
    mask = [False] * len(text)
    i, n = 0, len(text)
    line = 1
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            i += 1
            continue
        if language is Language.SOLIDITY and text.startswith("//", i):
            while i < n and text[i] != "\n":
                chars[i] = " "
                i += 1
            continue
        if language is Language.SOLIDITY and text.startswith("/*", i):
            end = text.find("*/", i + 2)
            if end < 0:
                raise SourceParseError(f"unterminated block comment at line {line}")
            for j in range(i, end + 2):
                if chars[j] != "\n":
                    chars[j] = " "
                else:
                    line += 1
            i = end + 2
            continue
        if language is Language.VYPER and ch == "#":
            while i < n and text[i] != "\n":
                chars[i] = " "
                i += 1
            continue
        if language is Language.VYPER and (text.startswith('"""', i) or text.startswith("'''", i)):
            quote = text[i : i + 3]
            end = text.find(quote, i + 3)
            if end < 0:
                raise SourceParseError(f"unterminated docstring at line {line}")
            for j in range(i, end + 3):
                mask[j] = True
            line += text.count("\n", i, end + 3)
            i = end + 3
            continue
        if ch in "\"'":
            start_line = line
            mask[i] = True
            j = i + 1
            while j < n:
                if text[j] == "\\" and j + 1 < n:
                    mask[j] = mask[j + 1] = True
                    j += 2
                    continue
                if text[j] == ch:
                    mask[j] = True
                    break
                if text[j] == "\n":
                    raise SourceParseError(f"unterminated string literal at line {start_line}")
                mask[j] = True
                j += 1
            else:
                raise SourceParseError(f"unterminated string literal at line {start_line}")
            i = j + 1
            continue
        i += 1
    return "".join(chars), mask


def _line_index(text: str) -> list[int]:
    lines = [1] * len(text)
    current = 1
    for i, ch in enumerate(text):
        lines[i] = current
        if ch == "\n":
            current += 1
    return lines


def _skip_ws(text: str, i: int) -> int:
    n = len(text)
    while i < n and text[i].isspace():
        i += 1
    return i


_OPEN = {"(": ")", "[": "]", "{": "}"}
_CLOSE = {")": "(", "]": "[", "}": "{"}


@dataclass(frozen=True)
class _ParenGroup:
    args: list[str]
    open_pos: int
    close_pos: int
    inner: str


def _parse_paren_group(clean: str, mask: Sequence[bool], i: int) -> _ParenGroup | None:
    """Parse a balanced `(...)` starting at the first non-space character.

    Returns the top-level comma-separated argument texts plus offsets, or
    None when no paren group starts there. Commas and brackets inside
    string literals are ignored.
    """
    i = _skip_ws(clean, i)
    if i >= len(clean) or clean[i] != "(":
        return None
    stack: list[str] = []
    args: list[str] = []
    arg_start = i + 1
    j = i
    n = len(clean)
    while j < n:
        ch = clean[j]
        if not mask[j]:
            if ch in _OPEN:
                stack.append(ch)
            elif ch in _CLOSE:
                if not stack or stack[-1] != _CLOSE[ch]:
                    raise SourceParseError(f"unbalanced '{ch}' in guard statement")
                stack.pop()
                if not stack:
                    args.append(clean[arg_start:j].strip())
                    return _ParenGroup(args, i, j, clean[i + 1 : j].strip())
            elif ch == "," and len(stack) == 1:
                args.append(clean[arg_start:j].strip())
                arg_start = j + 1
        j += 1
    raise SourceParseError("unbalanced parentheses in guard statement")


_UNQUOTE_RE = re.compile(r"\\([\"'\\])")


def _literal_message(arg: str) -> str | None:
    """Unquote a string-literal argument; None when it is not a literal."""
    arg = arg.strip()
    if len(arg) >= 2 and arg[0] in "\"'" and arg[-1] == arg[0]:
        inner = arg[1:-1]
        # Reject `"a" + x + "b"`-style expressions misdetected as literals.
        _, inner_mask = _scan_source(arg)
        if all(inner_mask):
            return _UNQUOTE_RE.sub(r"\1", inner)
    return None


def _message_from_arg(arg: str) -> str | None:
    literal = _literal_message(arg)
    if literal is not None:
        return literal
    arg = arg.strip()
    return arg or None


_IDENT_RE = re.compile(r"[A-Za-z_][\w.]*")


def _parse_revert_tail(
    clean: str, mask: Sequence[bool], i: int, keyword: str
) -> tuple[str | None, int]:
    """Parse what follows a `revert`/`throw` keyword; returns (message, end).

    `end` is the offset of the terminating semicolon.
    """
    i = _skip_ws(clean, i)
    n = len(clean)
    message: str | None = None
    if keyword == "revert" and i < n:
        if clean[i] == "(":
            group = _parse_paren_group(clean, mask, i)
            assert group is not None
            if group.args and group.args[0]:
                message = _message_from_arg(group.args[0])
            i = group.close_pos + 1
        else:
            ident = _IDENT_RE.match(clean, i)
            if ident:
                message = ident.group(0)
                i = ident.end()
                group = _parse_paren_group(clean, mask, i)
                if group is not None:
                    i = group.close_pos + 1
    i = _skip_ws(clean, i)
    if i >= n or clean[i] != ";":
        raise SourceParseError(f"missing ';' after {keyword}")
    return message, i


_KEYWORD_RE = re.compile(r"\b(require|assert|if)\b")


def _vyper_statement_end(clean: str, mask: Sequence[bool], i: int) -> int:
    """End offset (exclusive) of a Vyper logical line starting at `i`."""
    depth = 0
    n = len(clean)
    j = i
    while j < n:
        ch = clean[j]
        if not mask[j]:
            if ch in _OPEN:
                depth += 1
            elif ch in _CLOSE:
                depth -= 1
                if depth < 0:
                    raise SourceParseError("unbalanced bracket in assert statement")
            elif ch == "\n" and depth == 0:
                return j
        j += 1
    if depth != 0:
        raise SourceParseError("unbalanced bracket in assert statement")
    return n


def _split_top_level(clean: str, mask: Sequence[bool], start: int, end: int) -> list[str]:
    parts: list[str] = []
    depth = 0
    piece_start = start
    for j in range(start, end):
        ch = clean[j]
        if mask[j]:
            continue
        if ch in _OPEN:
            depth += 1
        elif ch in _CLOSE:
            depth -= 1
        elif ch == "," and depth == 0:
            parts.append(clean[piece_start:j].strip())
            piece_start = j + 1
    parts.append(clean[piece_start:end].strip())
    return parts


def scan_guards(text: str, language: Language = Language.SOLIDITY) -> list[GuardStatement]:
    """Find every guard statement in a source file, in source order."""
    clean, mask = _scan_source(text, language)
    lines = _line_index(clean)
    guards: list[GuardStatement] = []
    for match in _KEYWORD_RE.finditer(clean):
        start = match.start()
        if mask[start]:
            continue
        before = clean[:start].rstrip()
        if before.endswith("."):  # member access, not the builtin
            continue
        keyword = match.group(1)
        after = match.end()
        if keyword in ("require", "assert"):
            if language is Language.VYPER and keyword == "assert":
                stmt_end = _vyper_statement_end(clean, mask, after)
                parts = _split_top_level(clean, mask, after, stmt_end)
                predicate = parts[0]
                message = _message_from_arg(parts[1]) if len(parts) > 1 else None
                if not predicate:
                    continue
                end_line = lines[stmt_end] if stmt_end < len(clean) else lines[-1]
                guards.append(
                    GuardStatement(
                        StatementKind.ASSERT,
                        predicate,
                        message,
                        lines[start],
                        end_line,
                        start,
                        stmt_end,
                    )
                )
                continue
            group = _parse_paren_group(clean, mask, after)
            if group is None:
                continue
            end = _skip_ws(clean, group.close_pos + 1)
            if end < len(clean) and clean[end] == ";":
                stmt_end = end
            else:
                stmt_end = group.close_pos
            predicate = group.args[0]
            if not predicate:
                continue
            message = _message_from_arg(group.args[1]) if len(group.args) > 1 else None
            kind = StatementKind.REQUIRE if keyword == "require" else StatementKind.ASSERT
            guards.append(
                GuardStatement(kind, predicate, message, lines[start], lines[stmt_end], start, stmt_end)
            )
        else:  # if-revert forms
            group = _parse_paren_group(clean, mask, after)
            if group is None:
                continue
            predicate = group.inner
            if not predicate:
                continue
            body = _skip_ws(clean, group.close_pos + 1)
            if body >= len(clean):
                continue
            if clean[body] == "{":
                inner = _skip_ws(clean, body + 1)
                word = _IDENT_RE.match(clean, inner)
                if not word or word.group(0) not in ("revert", "throw"):
                    continue
                message, stmt_end = _parse_revert_tail(clean, mask, word.end(), word.group(0))
            else:
                word = _IDENT_RE.match(clean, body)
                if not word or word.group(0) not in ("revert", "throw"):
                    continue
                message, stmt_end = _parse_revert_tail(clean, mask, word.end(), word.group(0))
            guards.append(
                GuardStatement(
                    StatementKind.IF_REVERT,
                    predicate,
                    message,
                    lines[start],
                    lines[stmt_end],
                    start,
                    stmt_end,
                )
            )
    return guards


def extract_predicate(
    bundle: SourceBundle, file: str, line: int
) -> tuple[str, str | None, StatementKind]:
    """Extract the guard at (file, line): (raw predicate, message, kind).

    The predicate is returned verbatim apart from comment stripping;
    normalize() produces the canonical form. Raises ExtractionFailure when
    the location holds no recognizable guard statement.
    """
    if file not in bundle.files:
        raise SourceParseError(f"file {file!r} not in bundle for {bundle.contract_address}")
    text = bundle.files[file]
    n_lines = text.count("\n") + 1
    if not 1 <= line <= n_lines:
        raise ValueError(f"line {line} outside {file} (1..{n_lines})")
    for guard in scan_guards(text, bundle.language):
        if guard.start_line <= line <= guard.end_line:
            return guard.predicate, guard.message, guard.kind
    raise ExtractionFailure(f"no guard statement at {file}:{line}")


# --------------------------------------------------------------------------
# Normalization


def _literal_mask(text: str) -> list[bool]:
    mask = [False] * len(text)
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch in "\"'":
            mask[i] = True
            j = i + 1
            while j < n:
                if text[j] == "\\" and j + 1 < n:
                    mask[j] = mask[j + 1] = True
                    j += 2
                    continue
                mask[j] = True
                if text[j] == ch:
                    break
                j += 1
            i = j + 1
            continue
        i += 1
    return mask


def _strip_redundant_parens(s: str) -> str:
    while len(s) >= 2 and s[0] == "(" and s[-1] == ")":
        mask = _literal_mask(s)
        depth = 0
        redundant = True
        for i, ch in enumerate(s):
            if mask[i]:
                continue
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
                if depth < 0 or (depth == 0 and i != len(s) - 1):
                    redundant = False
                    break
        if depth != 0 or not redundant:
            break
        s = s[1:-1].strip()
    return s


def normalize(predicate: str) -> str:
    """Canonical predicate form: lowercase, comment-free, single-spaced.

    Spaces inside string literals survive; redundant outer parentheses are
    stripped until none remain. No semantic rewriting happens (no polarity
    flips, no operand reordering). Raises DegeneratePredicateError when
    nothing is left.
    """
    clean, mask = _scan_source(predicate)
    out: list[str] = []
    pending_space = False
    for i, ch in enumerate(clean):
        if mask[i]:
            if pending_space:
                out.append(" ")
                pending_space = False
            out.append(ch.lower())
            continue
        if ch.isspace():
            if out:
                pending_space = True
            continue
        if pending_space:
            out.append(" ")
            pending_space = False
        out.append(ch.lower())
    s = _strip_redundant_parens("".join(out).strip())
    if not s:
        raise DegeneratePredicateError(f"predicate {predicate!r} normalizes to nothing")
    return s


def normalize_message(message: str | None) -> str | None:
    """Lowercase and space-collapse a revert message; empty becomes None."""
    if message is None:
        return None
    collapsed = " ".join(message.lower().split())
    return collapsed or None


# --------------------------------------------------------------------------
# Deduplication and views

_KIND_ORDER = {
    StatementKind.REQUIRE: 0,
    StatementKind.ASSERT: 1,
    StatementKind.IF_REVERT: 2,
}


def deduplicate(items: Iterable[ExtractedInvariant]) -> list[InvariantRecord]:
    """Merge extractions by exact normalized predicate.

    The most frequent message wins (ties break lexicographically); the
    statement kind is the most frequent one; support counts distinct
    transaction hashes. Output is sorted by descending support, then
    predicate. Order-insensitive in its input.
    """
    groups: dict[str, list[ExtractedInvariant]] = {}
    for item in items:
        groups.setdefault(item.predicate, []).append(item)
    records = []
    for predicate, members in groups.items():
        provenance = frozenset(m.provenance for m in members)
        support = len({p.tx_hash for p in provenance})
        message_counts = Counter(m.message for m in members if m.message is not None)
        message = None
        if message_counts:
            message = sorted(message_counts.items(), key=lambda kv: (-kv[1], kv[0]))[0][0]
        kind_counts = Counter(m.statement_kind for m in members)
        kind = sorted(kind_counts.items(), key=lambda kv: (-kv[1], _KIND_ORDER[kv[0]]))[0][0]
        records.append(InvariantRecord(predicate, message, kind, provenance, support))
    records.sort(key=lambda r: (-r.support, r.predicate))
    return records


def build_views(records: Sequence[InvariantRecord], mode: ViewMode) -> list[InvariantView]:
    """One clustering-input view per record, order preserved."""
    views = []
    for record in records:
        if mode is ViewMode.PREDICATE_WITH_MESSAGE and record.message:
            text = f"{record.predicate}{VIEW_SEPARATOR}{record.message}"
        else:
            text = record.predicate
        views.append(InvariantView(invariant_id(record.predicate), mode, text))
    return views


# --------------------------------------------------------------------------
# Serialization and the source-bundle directory layout


def write_invariants(records: Sequence[InvariantRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            provenance = sorted(
                record.provenance, key=lambda p: (p.tx_hash, p.file, p.line, p.function)
            )
            obj = {
                "id": invariant_id(record.predicate),
                "predicate": record.predicate,
                "message": record.message,
                "statement_kind": record.statement_kind.value,
                "support": record.support,
                "provenance": [
                    {
                        "tx_hash": p.tx_hash,
                        "contract": p.contract,
                        "function": p.function,
                        "file": p.file,
                        "line": p.line,
                    }
                    for p in provenance
                ],
            }
            fh.write(json.dumps(obj, sort_keys=True) + "\n")


def read_invariants(path: str | Path) -> list[InvariantRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            provenance = frozenset(
                Provenance(p["tx_hash"], p["contract"], p["function"], p["file"], p["line"])
                for p in obj["provenance"]
            )
            records.append(
                InvariantRecord(
                    obj["predicate"],
                    obj["message"],
                    StatementKind(obj["statement_kind"]),
                    provenance,
                    obj["support"],
                )
            )
    return records


def load_source_bundle(root: str | Path, address: str) -> SourceBundle:
    """Load `<root>/<address>/meta.json` and the files it lists."""
    base = Path(root) / address.lower()
    meta_path = base / "meta.json"
    with open(meta_path, encoding="utf-8") as fh:
        meta = json.load(fh)
    language = Language(meta.get("language", "Solidity"))
    files = {}
    for rel in meta["files"]:
        files[rel] = (base / rel).read_text(encoding="utf-8")
    return SourceBundle(address.lower(), files, language)


class SourceRepository:
    """Directory of per-contract source bundles, loaded lazily."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._cache: dict[str, SourceBundle | None] = {}
        self._addresses = set()
        if self.root.is_dir():
            for child in self.root.iterdir():
                if child.is_dir() and (child / "meta.json").exists():
                    self._addresses.add(child.name.lower())

    def has(self, address: str) -> bool:
        return address.lower() in self._addresses

    def get(self, address: str) -> SourceBundle | None:
        key = address.lower()
        if key not in self._cache:
            self._cache[key] = load_source_bundle(self.root, key) if self.has(key) else None
        return self._cache[key]
