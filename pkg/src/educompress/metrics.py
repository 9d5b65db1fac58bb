"""Structural fidelity metrics, compression statistics, and cost accounting.

Tree edit distance is computed exactly for ordered labeled trees with the
classic keyroot/forest dynamic program over postorder numberings. Document
level accuracy is the fraction of prediction/gold pairs whose normalized
backbones match exactly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

from .backends.base import TokenUsage
from .tree import StructureTree

_WS_RE = re.compile(r"\s+")
# Leading enumeration markers: "1.", "1.2.3", "(a)", "b)", "iv.", "第三章".
_ENUM_RE = re.compile(
    r"^(?:"
    r"\(?\d+(?:[.．]\d+)*[.．)）]?"
    r"|\(?[a-z][.)）]"
    r"|[ivxlc]+[.)）]"
    r"|第[\d零一二三四五六七八九十百千万]+[章节篇部条款]"
    r")\s+"
)


@dataclass(frozen=True)
class TitleNormalization:
    lowercase: bool = True
    collapse_whitespace: bool = True
    strip_enumeration: bool = True
    # False compares topology only: every label is treated as equal.
    compare_titles: bool = True


def normalize_title(title: str, norm: TitleNormalization | None = None) -> str:
    norm = norm or TitleNormalization()
    text = title.strip()
    if norm.lowercase:
        text = text.lower()
    if norm.collapse_whitespace:
        text = _WS_RE.sub(" ", text)
    if norm.strip_enumeration:
        while True:
            stripped = _ENUM_RE.sub("", text, count=1)
            if stripped == text or not stripped:
                break
            text = stripped
    if not norm.compare_titles:
        return ""
    return text


@dataclass
class LabeledOrderedTree:
    """Plain ordered tree with normalized labels; the TED/DLA operand."""

    label: str
    children: list[LabeledOrderedTree] = field(default_factory=list)

    @property
    def size(self) -> int:
        return 1 + sum(c.size for c in self.children)


@dataclass(frozen=True)
class EditCosts:
    insert: float = 1.0
    delete: float = 1.0
    relabel: float = 1.0

    def __post_init__(self):
        if min(self.insert, self.delete, self.relabel) < 0:
            raise ValueError("edit costs must be >= 0")


ROOT_LABEL = "<doc>"


def to_labeled_tree(
    tree: StructureTree,
    normalization: TitleNormalization | None = None,
    synthetic_root: bool = True,
) -> LabeledOrderedTree:
    """Adapter to the metric operand: titles normalized, spans discarded.

    A synthetic root is placed above the document roots so multi-rooted
    structures compare as single trees.
    """
    norm = normalization or TitleNormalization()

    def convert(node) -> LabeledOrderedTree:
        return LabeledOrderedTree(
            label=normalize_title(node.title, norm),
            children=[convert(c) for c in node.children],
        )

    roots = [convert(r) for r in tree.roots]
    if synthetic_root:
        return LabeledOrderedTree(label=ROOT_LABEL, children=roots)
    if len(roots) == 1:
        return roots[0]
    return LabeledOrderedTree(label=ROOT_LABEL, children=roots)


class _PostOrder:
    """Postorder arrays for the distance recurrence."""

    def __init__(self, root: LabeledOrderedTree):
        self.labels: list[str] = []
        self.lmld: list[int] = []  # leftmost leaf descendant, postorder index
        self._walk(root)
        last_for_lmld: dict[int, int] = {}
        for i, lm in enumerate(self.lmld):
            last_for_lmld[lm] = i
        self.keyroots = sorted(last_for_lmld.values())

    def _walk(self, node: LabeledOrderedTree) -> int:
        first_leaf = None
        for child in node.children:
            child_lm = self._walk(child)
            if first_leaf is None:
                first_leaf = child_lm
        index = len(self.labels)
        self.labels.append(node.label)
        self.lmld.append(index if first_leaf is None else first_leaf)
        return self.lmld[index]


def ted(
    a: LabeledOrderedTree, b: LabeledOrderedTree, costs: EditCosts | None = None
) -> float:
    """Exact minimum-cost edit distance between two ordered labeled trees."""
    costs = costs or EditCosts()
    ta, tb = _PostOrder(a), _PostOrder(b)
    na, nb = len(ta.labels), len(tb.labels)
    dist = [[0.0] * nb for _ in range(na)]

    def relabel(i: int, j: int) -> float:
        return 0.0 if ta.labels[i] == tb.labels[j] else costs.relabel

    for i in ta.keyroots:
        for j in tb.keyroots:
            _forest_dist(i, j, ta, tb, dist, costs, relabel)
    return dist[na - 1][nb - 1]


def _forest_dist(i, j, ta, tb, dist, costs, relabel) -> None:
    ioff = ta.lmld[i] - 1
    joff = tb.lmld[j] - 1
    m = i - ioff + 1
    n = j - joff + 1
    fd = [[0.0] * n for _ in range(m)]
    for x in range(1, m):
        fd[x][0] = fd[x - 1][0] + costs.delete
    for y in range(1, n):
        fd[0][y] = fd[0][y - 1] + costs.insert
    for x in range(1, m):
        for y in range(1, n):
            if ta.lmld[i] == ta.lmld[x + ioff] and tb.lmld[j] == tb.lmld[y + joff]:
                fd[x][y] = min(
                    fd[x - 1][y] + costs.delete,
                    fd[x][y - 1] + costs.insert,
                    fd[x - 1][y - 1] + relabel(x + ioff, y + joff),
                )
                dist[x + ioff][y + joff] = fd[x][y]
            else:
                p = ta.lmld[x + ioff] - 1 - ioff
                q = tb.lmld[y + joff] - 1 - joff
                fd[x][y] = min(
                    fd[x - 1][y] + costs.delete,
                    fd[x][y - 1] + costs.insert,
                    fd[p][q] + dist[x + ioff][y + joff],
                )


def dla(pairs: Sequence[tuple[LabeledOrderedTree, LabeledOrderedTree]]) -> float:
    """Fraction of pairs whose trees are exactly equal; strict macro metric."""
    if not pairs:
        raise ValueError("dla requires at least one (predicted, gold) pair")
    matched = sum(1 for predicted, gold in pairs if predicted == gold)
    return matched / len(pairs)


def backbone_match(
    predicted: StructureTree,
    gold: StructureTree,
    normalization: TitleNormalization | None = None,
) -> bool:
    from .tree import backbone

    return to_labeled_tree(backbone(predicted), normalization) == to_labeled_tree(
        backbone(gold), normalization
    )


def compression_stats(result) -> float:
    """Compression rate 1 - compressed/original; undefined for empty input."""
    if result.original_length <= 0:
        raise ValueError("compression rate is undefined for zero original length")
    return 1.0 - result.compressed_length / result.original_length


@dataclass(frozen=True)
class CostModel:
    """Dollar rates per one million input and output tokens."""

    input_rate: float
    output_rate: float

    def __post_init__(self):
        if self.input_rate < 0 or self.output_rate < 0:
            raise ValueError("rates must be >= 0")


def cost_estimate(usage: TokenUsage, model: CostModel) -> float:
    """Exact dollar cost; callers round to cents for display."""
    return (
        usage.prompt_tokens * model.input_rate / 1e6
        + usage.completion_tokens * model.output_rate / 1e6
    )


def format_dollars(amount: float) -> str:
    return f"${amount:.2f}"


@dataclass(frozen=True)
class EvalRecord:
    doc_id: str
    doc_token_length: int
    ted: float
    backbone_match: bool
    compression_rate: float = 0.0
    token_usage: TokenUsage = TokenUsage()


@dataclass(frozen=True)
class BinStat:
    count: int
    mean_ted: float | None
    min_length: int | None = None
    max_length: int | None = None


def bin_by_length(records: Sequence[EvalRecord], n_bins: int = 10) -> list[BinStat]:
    """Equal-frequency bins by document token length.

    Records are ordered by (length, doc_id); the first ``len % n_bins``
    bins take one extra record, so counts always sum to the record count.
    """
    if not records:
        raise ValueError("bin_by_length requires at least one record")
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    ordered = sorted(records, key=lambda r: (r.doc_token_length, r.doc_id))
    base, extra = divmod(len(ordered), n_bins)
    bins: list[BinStat] = []
    cursor = 0
    for b in range(n_bins):
        size = base + (1 if b < extra else 0)
        chunk = ordered[cursor : cursor + size]
        cursor += size
        if chunk:
            bins.append(
                BinStat(
                    count=len(chunk),
                    mean_ted=sum(r.ted for r in chunk) / len(chunk),
                    min_length=chunk[0].doc_token_length,
                    max_length=chunk[-1].doc_token_length,
                )
            )
        else:
            bins.append(BinStat(count=0, mean_ted=None))
    return bins


@dataclass(frozen=True)
class EvalReport:
    records: tuple[EvalRecord, ...]
    mean_ted: float
    dla: float
    bins: tuple[BinStat, ...]
    usage: TokenUsage
    cost_usd: float
    excluded: tuple[str, ...] = ()
    warning_count: int = 0
    header: dict = field(default_factory=dict)
