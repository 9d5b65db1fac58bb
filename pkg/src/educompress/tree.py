"""Span-anchored structure trees and their augmented-markdown schema.

Each line of the schema is ``#{1..6} [a--b] title``: heading level, a
closed interval of EDU ids, and a short abstract. Parsing enforces
referential integrity against the unit count the tree is bound to, either
by rejecting (strict) or by repairing with recorded warnings (lenient).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Literal, Sequence

Severity = Literal["error", "warning"]
DiagnosticCode = Literal[
    "bad-syntax",
    "span-out-of-range",
    "span-inverted",
    "overlap",
    "non-nested",
    "level-jump",
    "empty-title",
]
ParseMode = Literal["strict", "lenient"]

_HEADING_LINE = re.compile(
    r"^\s*(#{1,6})\s+\[\s*(\d+)\s*(?:--|–|-)\s*(\d+)\s*\]\s*(.*?)\s*$"
)


@dataclass(frozen=True)
class SpanRef:
    """Closed interval of EDU ids; ``id_start <= id_end`` once bound."""

    id_start: int
    id_end: int


@dataclass
class StructureNode:
    """A node of the structure tree: abstract title, depth, and source anchor."""

    title: str
    level: int
    span: SpanRef
    children: list[StructureNode] = field(default_factory=list)

    def walk(self) -> Iterable[StructureNode]:
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass
class StructureTree:
    doc_id: str
    roots: list[StructureNode] = field(default_factory=list)
    n_edus: int = 0

    def walk(self) -> Iterable[StructureNode]:
        for root in self.roots:
            yield from root.walk()

    @property
    def size(self) -> int:
        return sum(1 for _ in self.walk())


@dataclass(frozen=True)
class Diagnostic:
    """One schema or integrity finding; ``line`` is 0 when not tied to input text."""

    severity: Severity
    code: DiagnosticCode
    line: int
    message: str


def has_errors(diagnostics: Iterable[Diagnostic]) -> bool:
    return any(d.severity == "error" for d in diagnostics)


@dataclass(frozen=True)
class FlatHeading:
    level: int
    span: SpanRef
    title: str
    line: int = 0


def _as_flat(item) -> FlatHeading:
    if isinstance(item, FlatHeading):
        return item
    level, span, title = item[0], item[1], item[2]
    line = item[3] if len(item) > 3 else 0
    if not isinstance(span, SpanRef):
        span = SpanRef(int(span[0]), int(span[1]))
    return FlatHeading(int(level), span, str(title), int(line))


def parse_augmented_markdown(
    text: str, n_edus: int, mode: ParseMode = "lenient", doc_id: str = ""
) -> tuple[StructureTree | None, list[Diagnostic]]:
    """Parse schema text into a tree bound to ``n_edus`` units.

    Strict mode returns ``(None, diagnostics)`` on any error-severity
    violation; lenient mode always returns a tree whose spans have been
    repaired into validity, with every repair recorded as a warning.
    Never raises on arbitrary input.
    """
    diagnostics: list[Diagnostic] = []
    flat: list[FlatHeading] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        m = _HEADING_LINE.match(line)
        if m is None:
            severity: Severity = "error" if mode == "strict" else "warning"
            diagnostics.append(
                Diagnostic(
                    severity,
                    "bad-syntax",
                    lineno,
                    f"expected '#.. [a--b] title', got: {line.strip()[:80]!r}",
                )
            )
            continue
        flat.append(
            FlatHeading(
                level=len(m.group(1)),
                span=SpanRef(int(m.group(2)), int(m.group(3))),
                title=m.group(4),
                line=lineno,
            )
        )
    tree, more = realize_tree(flat, n_edus, mode=mode, doc_id=doc_id)
    diagnostics.extend(more)
    if mode == "strict" and has_errors(diagnostics):
        return None, diagnostics
    return tree, diagnostics


def realize_tree(
    flat: Sequence, n_edus: int, mode: ParseMode = "lenient", doc_id: str = ""
) -> tuple[StructureTree, list[Diagnostic]]:
    """Assemble flat headings into a hierarchy with a level stack.

    A heading of level L becomes a child of the nearest preceding heading
    of shallower level, else a root. In lenient mode spans are repaired
    (swap inverted ends, clamp into [1, N], trim or drop overlaps); in
    strict mode the same conditions are reported as errors.
    """
    headings = [_as_flat(item) for item in flat]
    diagnostics: list[Diagnostic] = []
    lenient = mode == "lenient"

    prepared: list[FlatHeading] = []
    for h in headings:
        a, b = h.span.id_start, h.span.id_end
        if a > b:
            if lenient:
                a, b = b, a
                diagnostics.append(
                    Diagnostic(
                        "warning", "span-inverted", h.line,
                        f"swapped inverted span [{h.span.id_start}--{h.span.id_end}]",
                    )
                )
            else:
                diagnostics.append(
                    Diagnostic(
                        "error", "span-inverted", h.line,
                        f"span [{a}--{b}] has id_start > id_end",
                    )
                )
        if a < 1 or b > n_edus:
            if lenient:
                if n_edus == 0:
                    diagnostics.append(
                        Diagnostic(
                            "warning", "span-out-of-range", h.line,
                            f"dropped heading; no units exist to anchor [{a}--{b}]",
                        )
                    )
                    continue
                ca = min(max(a, 1), n_edus)
                cb = min(max(b, 1), n_edus)
                diagnostics.append(
                    Diagnostic(
                        "warning", "span-out-of-range", h.line,
                        f"clamped span [{a}--{b}] to [{ca}--{cb}] (N={n_edus})",
                    )
                )
                a, b = ca, cb
            else:
                diagnostics.append(
                    Diagnostic(
                        "error", "span-out-of-range", h.line,
                        f"span [{a}--{b}] outside [1, {n_edus}]",
                    )
                )
        if not h.title:
            diagnostics.append(
                Diagnostic("warning", "empty-title", h.line, "heading has no title")
            )
        prepared.append(replace(h, span=SpanRef(a, b)))

    roots: list[StructureNode] = []
    root_headings: list[FlatHeading] = []
    stack: list[tuple[StructureNode, FlatHeading]] = []
    for h in prepared:
        node = StructureNode(title=h.title, level=h.level, span=h.span)
        while stack and stack[-1][0].level >= h.level:
            stack.pop()
        if stack:
            parent = stack[-1][0]
            parent.children.append(node)
            if h.level > parent.level + 1:
                diagnostics.append(
                    Diagnostic(
                        "warning", "level-jump", h.line,
                        f"level {h.level} under level {parent.level}",
                    )
                )
        else:
            roots.append(node)
            root_headings.append(h)
        stack.append((node, h))

    # A deep root is only a jump when a shallower root follows it; documents
    # that simply start at a deeper level are left alone.
    for idx, h in enumerate(root_headings):
        if any(later.level < h.level for later in root_headings[idx + 1 :]):
            diagnostics.append(
                Diagnostic(
                    "warning", "level-jump", h.line,
                    f"top-level heading at level {h.level} precedes a shallower one",
                )
            )

    if lenient:
        roots = _repair_siblings(roots, 1, n_edus, diagnostics)
    else:
        _check_siblings(roots, None, diagnostics)
    return StructureTree(doc_id=doc_id, roots=roots, n_edus=n_edus), diagnostics


def _repair_siblings(
    nodes: list[StructureNode], bound_a: int, bound_b: int, diagnostics: list[Diagnostic]
) -> list[StructureNode]:
    kept: list[StructureNode] = []
    prev_end: int | None = None
    for node in nodes:
        a, b = node.span.id_start, node.span.id_end
        na, nb = max(a, bound_a), min(b, bound_b)
        if na > nb:
            diagnostics.append(
                Diagnostic(
                    "warning", "non-nested", 0,
                    f"dropped {node.title!r}: span [{a}--{b}] outside parent [{bound_a}--{bound_b}]",
                )
            )
            continue
        if (na, nb) != (a, b):
            diagnostics.append(
                Diagnostic(
                    "warning", "non-nested", 0,
                    f"clamped {node.title!r} span [{a}--{b}] into parent [{bound_a}--{bound_b}]",
                )
            )
        if prev_end is not None and na <= prev_end:
            if prev_end + 1 > nb:
                diagnostics.append(
                    Diagnostic(
                        "warning", "overlap", 0,
                        f"dropped {node.title!r}: span [{na}--{nb}] inside preceding sibling",
                    )
                )
                continue
            diagnostics.append(
                Diagnostic(
                    "warning", "overlap", 0,
                    f"trimmed {node.title!r} span start {na} to {prev_end + 1}",
                )
            )
            na = prev_end + 1
        node.span = SpanRef(na, nb)
        node.children = _repair_siblings(node.children, na, nb, diagnostics)
        kept.append(node)
        prev_end = nb
    return kept


def _check_siblings(
    nodes: list[StructureNode], parent: StructureNode | None, diagnostics: list[Diagnostic]
) -> None:
    prev: StructureNode | None = None
    for node in nodes:
        if parent is not None and not (
            parent.span.id_start <= node.span.id_start
            and node.span.id_end <= parent.span.id_end
        ):
            diagnostics.append(
                Diagnostic(
                    "error", "non-nested", 0,
                    f"{node.title!r} span not contained in parent {parent.title!r}",
                )
            )
        if prev is not None:
            if node.span.id_start <= prev.span.id_start:
                diagnostics.append(
                    Diagnostic(
                        "error", "overlap", 0,
                        f"sibling {node.title!r} does not start after {prev.title!r}",
                    )
                )
            elif node.span.id_start <= prev.span.id_end:
                diagnostics.append(
                    Diagnostic(
                        "error", "overlap", 0,
                        f"sibling {node.title!r} overlaps {prev.title!r}",
                    )
                )
        _check_siblings(node.children, node, diagnostics)
        prev = node


def validate(tree: StructureTree, n_edus: int | None = None) -> list[Diagnostic]:
    """All bound, nesting, overlap, and monotonicity findings; empty iff valid."""
    n = tree.n_edus if n_edus is None else n_edus
    diagnostics: list[Diagnostic] = []
    for node in tree.walk():
        a, b = node.span.id_start, node.span.id_end
        if a > b:
            diagnostics.append(
                Diagnostic("error", "span-inverted", 0, f"{node.title!r}: [{a}--{b}]")
            )
        elif a < 1 or b > n:
            diagnostics.append(
                Diagnostic(
                    "error", "span-out-of-range", 0,
                    f"{node.title!r}: [{a}--{b}] outside [1, {n}]",
                )
            )
        if not node.title:
            diagnostics.append(Diagnostic("warning", "empty-title", 0, "node has no title"))
    _check_siblings(tree.roots, None, diagnostics)
    for node in tree.walk():
        for child in node.children:
            if child.level <= node.level:
                diagnostics.append(
                    Diagnostic(
                        "error", "level-jump", 0,
                        f"child {child.title!r} level {child.level} not deeper than parent level {node.level}",
                    )
                )
            elif child.level > node.level + 1:
                diagnostics.append(
                    Diagnostic(
                        "warning", "level-jump", 0,
                        f"child {child.title!r} skips from level {node.level} to {child.level}",
                    )
                )
    for idx, root in enumerate(tree.roots):
        if any(later.level < root.level for later in tree.roots[idx + 1 :]):
            diagnostics.append(
                Diagnostic(
                    "warning", "level-jump", 0,
                    f"root {root.title!r} at level {root.level} precedes a shallower root",
                )
            )
    return diagnostics


def serialize(tree: StructureTree) -> str:
    """Canonical schema text: pre-order, ``--`` separators, one heading per line."""
    lines: list[str] = []
    for node in tree.walk():
        head = f"{'#' * node.level} [{node.span.id_start}--{node.span.id_end}]"
        lines.append(f"{head} {node.title}" if node.title else head)
    return "\n".join(lines)


def backbone(tree: StructureTree) -> StructureTree:
    """The top-level hierarchy: roots and their immediate children only."""
    roots = [
        StructureNode(
            title=root.title,
            level=root.level,
            span=root.span,
            children=[
                StructureNode(title=c.title, level=c.level, span=c.span)
                for c in root.children
            ],
        )
        for root in tree.roots
    ]
    return StructureTree(doc_id=tree.doc_id, roots=roots, n_edus=tree.n_edus)


def coverage(tree: StructureTree, n_edus: int | None = None) -> float:
    """Fraction of unit ids covered by at least one node span (1.0 when N=0)."""
    n = tree.n_edus if n_edus is None else n_edus
    if n <= 0:
        return 1.0
    covered: set[int] = set()
    for node in tree.walk():
        covered.update(range(node.span.id_start, node.span.id_end + 1))
    covered &= set(range(1, n + 1))
    return len(covered) / n


def _node_to_dict(node: StructureNode) -> dict:
    return {
        "title": node.title,
        "level": node.level,
        "span": [node.span.id_start, node.span.id_end],
        "children": [_node_to_dict(c) for c in node.children],
    }


def tree_to_dict(tree: StructureTree) -> dict:
    return {
        "doc_id": tree.doc_id,
        "n_edus": tree.n_edus,
        "roots": [_node_to_dict(r) for r in tree.roots],
    }


def _node_from_dict(data: dict) -> StructureNode:
    span = data["span"]
    return StructureNode(
        title=str(data.get("title", "")),
        level=int(data["level"]),
        span=SpanRef(int(span[0]), int(span[1])),
        children=[_node_from_dict(c) for c in data.get("children", [])],
    )


def tree_from_dict(data: dict) -> StructureTree:
    try:
        return StructureTree(
            doc_id=str(data.get("doc_id", "")),
            roots=[_node_from_dict(r) for r in data.get("roots", [])],
            n_edus=int(data.get("n_edus", 0)),
        )
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed tree dump: {exc}") from exc


def tree_to_json(tree: StructureTree) -> str:
    return json.dumps(tree_to_dict(tree), ensure_ascii=False, sort_keys=True)


def tree_from_json(text: str) -> StructureTree:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed tree dump: {exc}") from exc
    if not isinstance(data, dict):
        raise ValueError("malformed tree dump: expected a JSON object")
    return tree_from_dict(data)
