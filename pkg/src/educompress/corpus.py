"""JSONL corpus records: one document (optionally with a gold tree) per line."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

from .errors import UsageError
from .segmenter import SourceDocument
from .tree import StructureTree, has_errors, parse_augmented_markdown, tree_from_dict, validate


@dataclass(frozen=True)
class CorpusRecord:
    doc_id: str
    text: str
    format_hint: str = "markdown"
    language_hint: str | None = None
    # Augmented-markdown string or a nested {title, level, span, children} object.
    gold_tree: str | dict | None = None

    def document(self) -> SourceDocument:
        return SourceDocument(
            doc_id=self.doc_id,
            text=self.text,
            format_hint=self.format_hint,  # type: ignore[arg-type]
            language_hint=self.language_hint,  # type: ignore[arg-type]
        )


def read_corpus(path: str | Path) -> list[CorpusRecord]:
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read corpus {path}: {exc}") from exc
    records: list[CorpusRecord] = []
    for lineno, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        if not isinstance(data, dict) or "doc_id" not in data or "text" not in data:
            raise UsageError(f"{path}:{lineno}: record needs doc_id and text fields")
        records.append(
            CorpusRecord(
                doc_id=str(data["doc_id"]),
                text=str(data["text"]),
                format_hint=str(data.get("format_hint", "markdown")),
                language_hint=data.get("language_hint"),
                gold_tree=data.get("gold_tree"),
            )
        )
    return records


def write_corpus(path: str | Path, records: list[CorpusRecord]) -> None:
    lines = [
        json.dumps(asdict(record), ensure_ascii=False, sort_keys=True)
        for record in records
    ]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def resolve_gold(record: CorpusRecord, n_edus: int) -> StructureTree:
    """Parse a record's gold tree strictly against its segmented document."""
    if record.gold_tree is None:
        raise ValueError(f"{record.doc_id}: record has no gold tree")
    if isinstance(record.gold_tree, str):
        gold, diagnostics = parse_augmented_markdown(
            record.gold_tree, n_edus, mode="strict", doc_id=record.doc_id
        )
        if gold is None:
            summary = "; ".join(
                f"{d.code}@{d.line}" for d in diagnostics if d.severity == "error"
            )
            raise ValueError(f"{record.doc_id}: gold tree failed strict parse: {summary}")
        return gold
    gold = tree_from_dict(dict(record.gold_tree, doc_id=record.doc_id, n_edus=n_edus))
    findings = validate(gold, n_edus)
    if has_errors(findings):
        summary = "; ".join(d.code for d in findings if d.severity == "error")
        raise ValueError(f"{record.doc_id}: gold tree invalid: {summary}")
    return gold
