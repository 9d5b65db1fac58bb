"""Test-side oracles and random generators, independent of the library internals."""

from __future__ import annotations

import random
from itertools import product

from educompress.metrics import EditCosts, LabeledOrderedTree
from educompress.segmenter import SourceDocument
from educompress.tree import SpanRef, StructureNode, StructureTree


# --- brute-force tree edit distance -------------------------------------
#
# Minimum-cost node mapping that preserves ancestry and left-to-right
# order; unmapped source nodes are deleted, unmapped target nodes are
# inserted. Searched directly by branch and bound, so it shares nothing
# with the production dynamic program.


def _preorder(root: LabeledOrderedTree) -> list[tuple[str, int]]:
    nodes: list[tuple[str, int]] = []

    def walk(node: LabeledOrderedTree, parent: int) -> None:
        index = len(nodes)
        nodes.append((node.label, parent))
        for child in node.children:
            walk(child, index)

    walk(root, -1)
    return nodes


def _ancestors(nodes: list[tuple[str, int]]) -> list[list[bool]]:
    n = len(nodes)
    anc = [[False] * n for _ in range(n)]
    for i in range(n):
        p = nodes[i][1]
        while p != -1:
            anc[p][i] = True
            p = nodes[p][1]
    return anc


def oracle_ted(
    a: LabeledOrderedTree, b: LabeledOrderedTree, costs: EditCosts | None = None
) -> float:
    costs = costs or EditCosts()
    na = _preorder(a)
    nb = _preorder(b)
    anc_a = _ancestors(na)
    anc_b = _ancestors(nb)
    n, m = len(na), len(nb)
    best = costs.delete * n + costs.insert * m
    gain = costs.delete + costs.insert
    mapping: list[tuple[int, int]] = []

    def consistent(i: int, j: int) -> bool:
        for pi, pj in mapping:
            if anc_a[pi][i] != anc_b[pj][j] or anc_a[i][pi] != anc_b[j][pj]:
                return False
            if (pi < i) != (pj < j):
                return False
        return True

    def search(i: int, used: int, cost: float) -> None:
        nonlocal best
        free_b = m - bin(used).count("1")
        if cost - gain * min(n - i, free_b) >= best:
            return
        if i == n:
            best = min(best, cost)
            return
        for j in range(m):
            if used >> j & 1 or not consistent(i, j):
                continue
            relabel = 0.0 if na[i][0] == nb[j][0] else costs.relabel
            mapping.append((i, j))
            search(i + 1, used | (1 << j), cost - gain + relabel)
            mapping.pop()
        search(i + 1, used, cost)

    search(0, 0, float(best))
    return best


# --- exhaustive small trees ----------------------------------------------

_SHAPES_CACHE: dict[int, list[tuple]] = {}


def tree_shapes(n: int) -> list[tuple]:
    """All ordered rooted tree shapes with exactly n nodes, as nested tuples."""
    if n in _SHAPES_CACHE:
        return _SHAPES_CACHE[n]
    if n == 1:
        shapes = [()]
    else:
        shapes = []
        for split in _compositions(n - 1):
            child_options = [tree_shapes(part) for part in split]
            for kids in product(*child_options):
                shapes.append(tuple(kids))
    _SHAPES_CACHE[n] = shapes
    return shapes


def _compositions(total: int) -> list[tuple[int, ...]]:
    if total == 0:
        return [()]
    out = []
    for first in range(1, total + 1):
        for rest in _compositions(total - first):
            out.append((first,) + rest)
    return out


def _shape_size(shape: tuple) -> int:
    return 1 + sum(_shape_size(child) for child in shape)


def labeled_trees_upto(max_nodes: int, labels: str = "ab") -> list[LabeledOrderedTree]:
    """Every ordered tree with <= max_nodes nodes and labels from ``labels``."""
    trees: list[LabeledOrderedTree] = []
    for n in range(1, max_nodes + 1):
        for shape in tree_shapes(n):
            size = _shape_size(shape)
            for assignment in product(labels, repeat=size):
                it = iter(assignment)

                def build(s: tuple) -> LabeledOrderedTree:
                    label = next(it)
                    return LabeledOrderedTree(label, [build(c) for c in s])

                trees.append(build(shape))
    return trees


def random_labeled_tree(
    rng: random.Random, max_nodes: int, labels: str = "abc"
) -> LabeledOrderedTree:
    count = rng.randint(1, max_nodes)
    root = LabeledOrderedTree(rng.choice(labels))
    nodes = [root]
    for _ in range(count - 1):
        child = LabeledOrderedTree(rng.choice(labels))
        rng.choice(nodes).children.append(child)
        nodes.append(child)
    return root


# --- independent greedy selection simulation ------------------------------


def greedy_reference(
    entries: list[tuple[float, int, int, int]],
    unit_lengths: list[int],
    b_max: int,
    mode: str = "skip",
) -> list[int]:
    """Simulate the documented greedy rule over (score, id_start, id_end, level).

    Returns the indexes of accepted entries in acceptance order. Written
    with plain loops and id sets on purpose.
    """
    order = sorted(
        range(len(entries)),
        key=lambda idx: (-entries[idx][0], entries[idx][1], entries[idx][3]),
    )
    taken: list[int] = []
    covered_ids: set[int] = set()
    spent = 0
    for idx in order:
        _, a, b, _ = entries[idx]
        price = 0
        for unit_id in range(a, b + 1):
            if unit_id not in covered_ids:
                price += unit_lengths[unit_id - 1]
        if spent + price <= b_max:
            taken.append(idx)
            spent += price
            for unit_id in range(a, b + 1):
                covered_ids.add(unit_id)
        elif mode == "stop":
            break
    return taken


# --- structure tree generators --------------------------------------------

_TITLE_WORDS = [
    "intro", "budget", "methods", "results", "notes", "appendix",
    "scaling", "setup", "review", "outlook", "data", "model",
]


def random_title(rng: random.Random) -> str:
    return " ".join(rng.choice(_TITLE_WORDS) for _ in range(rng.randint(1, 3))).title()


def random_structure_tree(
    rng: random.Random,
    doc_id: str = "doc",
    n_edus: int | None = None,
    max_children: int = 3,
    max_depth: int = 4,
) -> StructureTree:
    """A schema-valid tree: +1 level steps, nested ordered spans, real titles."""
    n = n_edus if n_edus is not None else rng.randint(1, 40)

    def make_children(lo: int, hi: int, level: int, depth: int) -> list[StructureNode]:
        if depth <= 0 or lo > hi or level > 6:
            return []
        children: list[StructureNode] = []
        cursor = lo
        for _ in range(rng.randint(0, max_children)):
            if cursor > hi:
                break
            a = rng.randint(cursor, hi)
            b = rng.randint(a, hi)
            node = StructureNode(
                title=random_title(rng), level=level, span=SpanRef(a, b)
            )
            node.children = make_children(a, b, level + 1, depth - 1)
            children.append(node)
            cursor = b + 1
        return children

    roots = make_children(1, n, 1, max_depth)
    if not roots:
        roots = [StructureNode(title=random_title(rng), level=1, span=SpanRef(1, n))]
    return StructureTree(doc_id=doc_id, roots=roots, n_edus=n)


def adversarial_flat_headings(rng: random.Random, n_edus: int) -> list[tuple]:
    """Flat headings with out-of-range, inverted, and overlapping spans."""
    out = []
    for _ in range(rng.randint(1, 12)):
        a = rng.randint(-3, n_edus + 5)
        b = rng.randint(-3, n_edus + 5)
        out.append((rng.randint(1, 6), (a, b), rng.choice(["T", "", "Node x", "Deep"])))
    return out


# --- document generators ---------------------------------------------------

_VOCAB = [
    "alpha", "beta", "gamma", "delta", "signal", "budget", "window",
    "tree", "anchor", "query", "detail", "context", "结构", "文档",
]


def random_document(rng: random.Random, doc_id: str = "doc") -> SourceDocument:
    blocks: list[str] = []
    for _ in range(rng.randint(1, 8)):
        roll = rng.random()
        if roll < 0.3:
            blocks.append(
                "#" * rng.randint(1, 3)
                + " "
                + " ".join(rng.choice(_VOCAB) for _ in range(2)).title()
            )
        elif roll < 0.4:
            blocks.append("- " + " ".join(rng.choice(_VOCAB) for _ in range(3)))
        else:
            sentences = []
            for _ in range(rng.randint(1, 4)):
                words = " ".join(rng.choice(_VOCAB) for _ in range(rng.randint(3, 9)))
                sentences.append(words + rng.choice([".", "!", "?"]))
            blocks.append(" ".join(sentences))
    return SourceDocument(doc_id=doc_id, text="\n\n".join(blocks) + "\n")


# --- small builders ---------------------------------------------------------


def seq_from_texts(doc_id: str, texts: list[str]):
    """A synthetic unit sequence over newline-joined texts."""
    from educompress.segmenter import EDU, EDUSequence

    units = []
    pos = 0
    for i, text in enumerate(texts):
        units.append(EDU(id=i + 1, text=text, start=pos, end=pos + len(text)))
        pos += len(text) + 1
    return EDUSequence(doc_id=doc_id, units=tuple(units))


def node(title: str, level: int, a: int, b: int, *children: StructureNode) -> StructureNode:
    return StructureNode(title=title, level=level, span=SpanRef(a, b), children=list(children))


def struct_tree(doc_id: str, n_edus: int, *roots: StructureNode) -> StructureTree:
    return StructureTree(doc_id=doc_id, roots=list(roots), n_edus=n_edus)


def labeled(label: str, *children: LabeledOrderedTree) -> LabeledOrderedTree:
    return LabeledOrderedTree(label, list(children))
