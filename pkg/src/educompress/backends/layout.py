"""Deterministic decomposer that reads explicit markdown layout cues."""

from __future__ import annotations

import re

from ..segmenter import EDUSequence, SourceDocument
from ..tree import FlatHeading, SpanRef, StructureTree, realize_tree

_ATX = re.compile(r"^\s{0,3}(#{1,6})(?:\s+(.*))?$")


def layout_extract(doc: SourceDocument, seq: EDUSequence) -> StructureTree:
    """Build a tree from ATX heading units alone; pure function of its inputs.

    A heading unit opens a node at its own id; the node's span runs to the
    unit before the next heading of equal or shallower level (or to N).
    Documents without headings yield an empty tree.
    """
    headings: list[tuple[int, int, str]] = []  # (edu_id, level, title)
    for edu in seq.units:
        m = _ATX.match(edu.text)
        if m and "\n" not in edu.text:
            headings.append((edu.id, len(m.group(1)), (m.group(2) or "").strip()))

    flat: list[FlatHeading] = []
    for idx, (edu_id, level, title) in enumerate(headings):
        end = seq.n
        for next_id, next_level, _ in headings[idx + 1 :]:
            if next_level <= level:
                end = next_id - 1
                break
        flat.append(FlatHeading(level=level, span=SpanRef(edu_id, end), title=title))

    tree, _ = realize_tree(flat, seq.n, mode="lenient", doc_id=seq.doc_id)
    return tree
