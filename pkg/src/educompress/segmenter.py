"""Deterministic segmentation of documents into addressable discourse units.

Every unit (EDU) records the exact character span it came from, so any
downstream structure can point back into the source by id instead of
regenerating text. Segmentation never drops content: characters between
consecutive units are always whitespace.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Literal

from .errors import SpanRangeError

FormatHint = Literal["plain", "markdown", "html-derived"]
LanguageHint = Literal["en", "zh", "other"]

_FENCE_RE = re.compile(r"^\s{0,3}(`{3,}|~{3,})")
_HEADING_RE = re.compile(r"^\s{0,3}#{1,6}(?:\s|$)")
_LIST_RE = re.compile(r"^\s*(?:[-*+]|\d{1,3}[.)])\s+\S")
_TABLE_RE = re.compile(r"^\s*\|")


@dataclass(frozen=True)
class SourceDocument:
    """A raw input document; ``text`` is treated as an immutable character sequence."""

    doc_id: str
    text: str
    format_hint: FormatHint = "markdown"
    language_hint: LanguageHint | None = None


@dataclass(frozen=True)
class SegmentationRules:
    """Tunable splitting rules; the defaults give clause/sentence granularity.

    Structural markdown lines (headings, list items, table rows) become one
    unit each, fenced code blocks one unit, prose is split at sentence
    terminators and blank lines, and any unit longer than ``max_edu_chars``
    is force-split at the last whitespace before the cap.
    """

    max_edu_chars: int = 500
    sentence_terminators: str = ".!?。！？；"
    # Terminators only split when followed by whitespace or end of block;
    # set False for CJK text written without inter-sentence spacing.
    require_whitespace_after_terminator: bool = True
    # None: respect markdown unless the document's format_hint is "plain".
    respect_markdown: bool | None = None


@dataclass(frozen=True)
class EDU:
    """One discourse unit: 1-based ``id``, verbatim ``text``, and its source span."""

    id: int
    text: str
    start: int
    end: int


@dataclass(frozen=True)
class EDUSequence:
    """The ordered, gap-checked unit sequence for one document."""

    doc_id: str
    units: tuple[EDU, ...] = field(default=())

    @property
    def n(self) -> int:
        return len(self.units)

    def unit(self, edu_id: int) -> EDU:
        if not 1 <= edu_id <= self.n:
            raise SpanRangeError(edu_id, edu_id, self.n)
        return self.units[edu_id - 1]


def _line_spans(text: str) -> list[tuple[int, int]]:
    """Spans of each line, end exclusive of the newline character."""
    spans = []
    pos = 0
    n = len(text)
    while pos < n:
        nl = text.find("\n", pos)
        if nl == -1:
            spans.append((pos, n))
            break
        spans.append((pos, nl))
        pos = nl + 1
    return spans


def _trim(text: str, a: int, b: int) -> tuple[int, int]:
    while a < b and text[a].isspace():
        a += 1
    while b > a and text[b - 1].isspace():
        b -= 1
    return a, b


def _append_capped(out: list[tuple[int, int]], text: str, a: int, b: int, cap: int) -> None:
    """Append span [a, b) trimmed, force-splitting pieces longer than ``cap``."""
    a, b = _trim(text, a, b)
    if a >= b:
        return
    while b - a > cap:
        window = text[a : a + cap]
        cut_rel = -1
        for i in range(len(window) - 1, -1, -1):
            if window[i].isspace():
                cut_rel = i
                break
        cut = a + cap if cut_rel <= 0 else a + cut_rel
        la, lb = _trim(text, a, cut)
        if la < lb:
            out.append((la, lb))
        a = cut
        while a < b and text[a].isspace():
            a += 1
    if a < b:
        out.append((a, b))


def _split_sentences(
    text: str, a: int, b: int, rules: SegmentationRules
) -> Iterable[tuple[int, int]]:
    terminators = set(rules.sentence_terminators)
    start = a
    i = a
    while i < b:
        if text[i] in terminators:
            nxt = i + 1
            at_boundary = (
                nxt >= b
                or text[nxt].isspace()
                or not rules.require_whitespace_after_terminator
            )
            # A terminator run ("...") only splits after its last character.
            if at_boundary and not (nxt < b and text[nxt] in terminators):
                yield start, nxt
                start = nxt
                i = nxt
                continue
        i += 1
    if start < b:
        yield start, b


def segment(doc: SourceDocument, rules: SegmentationRules | None = None) -> EDUSequence:
    """Split ``doc`` into an EDUSequence; pure in (doc, rules).

    An empty document yields an empty sequence. All spans index Unicode
    code points of ``doc.text`` and every inter-unit gap is whitespace.
    """
    rules = rules or SegmentationRules()
    text = doc.text
    use_md = (
        rules.respect_markdown
        if rules.respect_markdown is not None
        else doc.format_hint != "plain"
    )
    lines = _line_spans(text)
    spans: list[tuple[int, int]] = []
    prose_open: int | None = None

    def close_prose(end: int) -> None:
        nonlocal prose_open
        if prose_open is None:
            return
        for sa, sb in _split_sentences(text, prose_open, end, rules):
            _append_capped(spans, text, sa, sb, rules.max_edu_chars)
        prose_open = None

    k = 0
    while k < len(lines):
        ls, le = lines[k]
        line = text[ls:le]
        if not line.strip():
            close_prose(ls)
            k += 1
            continue
        if use_md:
            fence = _FENCE_RE.match(line)
            if fence:
                close_prose(ls)
                marker_char = fence.group(1)[0]
                open_len = len(fence.group(1))
                closing = re.compile(r"^\s{0,3}%s{%d,}\s*$" % (re.escape(marker_char), open_len))
                close_k = None
                for j in range(k + 1, len(lines)):
                    if closing.match(text[lines[j][0] : lines[j][1]]):
                        close_k = j
                        break
                block_end = lines[close_k][1] if close_k is not None else lines[-1][1]
                _append_capped(spans, text, ls, block_end, rules.max_edu_chars)
                k = close_k + 1 if close_k is not None else len(lines)
                continue
            if _HEADING_RE.match(line) or _LIST_RE.match(line) or _TABLE_RE.match(line):
                close_prose(ls)
                _append_capped(spans, text, ls, le, rules.max_edu_chars)
                k += 1
                continue
        if prose_open is None:
            prose_open = ls
        k += 1
    close_prose(len(text))

    units = tuple(
        EDU(id=i + 1, text=text[a:b], start=a, end=b) for i, (a, b) in enumerate(spans)
    )
    seq = EDUSequence(doc_id=doc.doc_id, units=units)
    _check_sequence(seq, text)
    return seq


def _check_sequence(seq: EDUSequence, text: str) -> None:
    prev_end = 0
    for edu in seq.units:
        if not (0 <= edu.start < edu.end <= len(text)):
            raise AssertionError(f"unit {edu.id} span outside document bounds")
        if text[edu.start : edu.end] != edu.text:
            raise AssertionError(f"unit {edu.id} text does not match its span")
        if edu.start < prev_end:
            raise AssertionError(f"unit {edu.id} overlaps the previous unit")
        if text[prev_end : edu.start].strip():
            raise AssertionError(f"non-whitespace content lost before unit {edu.id}")
        prev_end = edu.end
    if text[prev_end:].strip():
        raise AssertionError("non-whitespace content lost after the last unit")


def render_indexed(seq: EDUSequence) -> str:
    """One "[id] text" line per unit, internal newlines flattened to spaces."""
    lines = []
    for edu in seq.units:
        flat = re.sub(r"\r\n|\r|\n", " ", edu.text)
        lines.append(f"[{edu.id}] {flat}")
    return "\n".join(lines)


def retrieve(seq: EDUSequence, span) -> str:
    """Verbatim text of units ``id_start..id_end`` joined by single newlines.

    ``span`` is anything with ``id_start``/``id_end`` attributes or a
    ``(id_start, id_end)`` pair. Raises SpanRangeError outside [1, N].
    """
    if hasattr(span, "id_start"):
        id_start, id_end = span.id_start, span.id_end
    else:
        id_start, id_end = span
    if not (1 <= id_start <= id_end <= seq.n):
        raise SpanRangeError(id_start, id_end, seq.n)
    return "\n".join(seq.units[i].text for i in range(id_start - 1, id_end))


def dump_edus(seq: EDUSequence) -> str:
    """Tab-separated debug dump: ``id<TAB>start<TAB>end<TAB>text-escaped``."""
    rows = []
    for edu in seq.units:
        escaped = (
            edu.text.replace("\\", "\\\\")
            .replace("\t", "\\t")
            .replace("\n", "\\n")
            .replace("\r", "\\r")
        )
        rows.append(f"{edu.id}\t{edu.start}\t{edu.end}\t{escaped}")
    return "\n".join(rows)
