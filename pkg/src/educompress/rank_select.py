"""Query-aware node scoring, budgeted sub-tree selection, and linearization.

Selection accounts length by contribution: a node only pays for the unit
ids not already covered by earlier accepted nodes, and the final output
merges all chosen spans so each unit appears once, in source order.
"""

from __future__ import annotations

import math
import random
import re
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Literal, Sequence

from .backends.base import TokenUsage
from .errors import StageError
from .segmenter import EDUSequence, SegmentationRules, SourceDocument, retrieve, segment
from .tree import Diagnostic, SpanRef, StructureNode, StructureTree

LengthUnit = Literal["characters", "whitespace-tokens", "model-tokens-via-callback"]
OverflowRule = Literal["skip", "stop"]
ScoreFn = Callable[[str, Sequence[str]], Sequence[float]]

# Ideographs, kana, and hangul count one token per character.
_CJK = r"\u3040-\u30ff\u3400-\u4dbf\u4e00-\u9fff\uac00-\ud7af\uf900-\ufaff"
_LEN_TOKEN_RE = re.compile(rf"[{_CJK}]|[^\s{_CJK}]+")
_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)
_CJK_SPLIT_RE = re.compile(rf"[{_CJK}]|[^{_CJK}]+")


def whitespace_token_count(text: str) -> int:
    """Whitespace-delimited tokens, with CJK characters counted individually."""
    return len(_LEN_TOKEN_RE.findall(text))


@dataclass(frozen=True)
class Query:
    text: str
    doc_ids: tuple[str, ...] | None = None


@dataclass(frozen=True)
class SelectionBudget:
    """Maximum content length of the output, in a configurable unit."""

    b_max: int
    length_unit: LengthUnit = "whitespace-tokens"
    length_fn: Callable[[str], int] | None = None

    def __post_init__(self):
        if self.b_max < 0:
            raise ValueError("b_max must be >= 0")
        if self.length_unit == "model-tokens-via-callback" and self.length_fn is None:
            raise ValueError("model-tokens-via-callback requires length_fn")

    def measure(self, text: str) -> int:
        if self.length_unit == "characters":
            return len(text)
        if self.length_unit == "model-tokens-via-callback":
            return self.length_fn(text)  # type: ignore[misc]
        return whitespace_token_count(text)


@dataclass(frozen=True)
class ScoredNode:
    node: StructureNode
    score: float
    candidate_text: str

    def __post_init__(self):
        if not math.isfinite(self.score):
            raise ValueError(f"non-finite score for {self.node.title!r}")


@dataclass(frozen=True)
class CompressionResult:
    """Outcome of one selection: chosen nodes, ordered output, and statistics.

    Lengths count unit content only; the separators inserted between
    intervals are excluded by definition. ``original_length`` measures the
    full unit sequence in the same unit as ``compressed_length``.
    """

    chosen: tuple[ScoredNode, ...]
    linearized: str
    original_length: int
    compressed_length: int
    compression_rate: float
    per_node_scores: tuple[ScoredNode, ...]
    intervals: tuple[SpanRef, ...] = ()
    usage: TokenUsage = TokenUsage()


@dataclass(frozen=True)
class TRepPolicy:
    """How the representative snippet for scoring is drawn from a span."""

    policy: Literal["first-edu", "head-tail", "full-span"] = "first-edu"
    cap: int = 120


def _truncate_at_whitespace(text: str, cap: int) -> str:
    if len(text) <= cap:
        return text
    window = text[:cap]
    cut = -1
    for i in range(len(window) - 1, -1, -1):
        if window[i].isspace():
            cut = i
            break
    return (window[:cut] if cut > 0 else window).rstrip()


def build_candidate_text(
    node: StructureNode, seq: EDUSequence, t_rep: TRepPolicy | None = None
) -> str:
    """Title plus a representative snippet; the scored proxy for a node."""
    t_rep = t_rep or TRepPolicy()
    span = node.span
    if t_rep.policy == "full-span":
        snippet = retrieve(seq, span).replace("\n", " ")
    elif t_rep.policy == "head-tail" and span.id_end > span.id_start:
        half = max(1, t_rep.cap // 2)
        head = _truncate_at_whitespace(seq.unit(span.id_start).text, half)
        tail = _truncate_at_whitespace(seq.unit(span.id_end).text, half)
        snippet = f"{head} … {tail}"
    else:
        snippet = seq.unit(span.id_start).text
    snippet = _truncate_at_whitespace(snippet, t_rep.cap)
    if not node.title:
        return snippet
    return f"{node.title} :: {snippet}"


def bm25_tokenize(text: str) -> list[str]:
    """Lowercase, split on non-alphanumerics, CJK runs one token per character."""
    tokens: list[str] = []
    for word in _WORD_RE.findall(text.lower()):
        # The pattern yields single CJK characters and maximal non-CJK runs.
        tokens.extend(_CJK_SPLIT_RE.findall(word))
    return tokens


def bm25_score(
    query: str, candidates: Sequence[str], k1: float = 1.2, b: float = 0.75
) -> list[float]:
    """Okapi BM25 over the candidate set itself as the corpus.

    idf uses the non-negative variant ln(1 + (N - df + 0.5) / (df + 0.5)).
    An empty or fully-absent query scores every candidate 0.
    """
    docs = [bm25_tokenize(c) for c in candidates]
    n = len(docs)
    if n == 0:
        return []
    query_terms = bm25_tokenize(query)
    if not query_terms:
        return [0.0] * n
    avgdl = sum(len(d) for d in docs) / n
    freqs = [Counter(d) for d in docs]
    df = Counter()
    for tf in freqs:
        for term in tf:
            df[term] += 1
    idf = {t: math.log(1.0 + (n - c + 0.5) / (c + 0.5)) for t, c in df.items()}
    scores: list[float] = []
    for tf, doc in zip(freqs, docs):
        dl = len(doc)
        norm = k1 * (1.0 - b + (b * dl / avgdl if avgdl > 0 else 0.0))
        s = 0.0
        for term in query_terms:
            f = tf.get(term, 0)
            if f == 0:
                continue
            s += idf[term] * (f * (k1 + 1.0)) / (f + norm)
        scores.append(s)
    return scores


def bm25_scorer(query: str, candidates: Sequence[str]) -> list[float]:
    return bm25_score(query, candidates)


def constant_scorer(value: float) -> ScoreFn:
    return lambda query, candidates: [value] * len(candidates)


class RandomScorer:
    """Seeded uniform scores; makes the random baseline reproducible."""

    def __init__(self, seed: int):
        self._rng = random.Random(seed)

    def __call__(self, query: str, candidates: Sequence[str]) -> list[float]:
        return [self._rng.random() for _ in candidates]


def score_nodes(
    query: str,
    structure: StructureTree,
    seq: EDUSequence,
    scorer: ScoreFn,
    t_rep: TRepPolicy | None = None,
    scope: Literal["all", "leaves"] = "all",
) -> list[ScoredNode]:
    """Score every tree node (or only leaves) and return them stably ordered.

    Ordering: score descending, then earlier id_start, then shallower level.
    Scorer failures propagate to the caller.
    """
    nodes = [
        n for n in structure.walk() if scope == "all" or not n.children
    ]
    if not nodes:
        return []
    candidates = [build_candidate_text(n, seq, t_rep) for n in nodes]
    raw = scorer(query, candidates)
    scored = [
        ScoredNode(node=n, score=float(s), candidate_text=c)
        for n, s, c in zip(nodes, raw, candidates)
    ]
    return sort_scored(scored)


def sort_scored(scored: Sequence[ScoredNode]) -> list[ScoredNode]:
    return sorted(
        scored,
        key=lambda s: (-s.score, s.node.span.id_start, s.node.level),
    )


def _edu_lengths(seq: EDUSequence, budget: SelectionBudget) -> list[int]:
    return [budget.measure(edu.text) for edu in seq.units]


def _greedy_accept(
    ordered: Sequence[ScoredNode],
    seq: EDUSequence,
    budget: SelectionBudget,
    on_overflow: OverflowRule,
) -> list[ScoredNode]:
    lengths = _edu_lengths(seq, budget)
    covered: set[int] = set()
    total = 0
    chosen: list[ScoredNode] = []
    for item in ordered:
        span = item.node.span
        fresh = [i for i in range(span.id_start, span.id_end + 1) if i not in covered]
        increment = sum(lengths[i - 1] for i in fresh)
        if total + increment <= budget.b_max:
            chosen.append(item)
            covered.update(fresh)
            total += increment
        elif on_overflow == "stop":
            break
    return chosen


def select_budget(
    scored: Sequence[ScoredNode],
    seq: EDUSequence,
    budget: SelectionBudget,
    on_overflow: OverflowRule = "skip",
) -> list[ScoredNode]:
    """Greedy acceptance in descending score order, never exceeding b_max.

    A node's cost is the length of its not-yet-covered units, so a node
    nested inside an accepted one is absorbed at zero cost. ``skip`` keeps
    scanning after an overflowing node; ``stop`` ends the scan there.
    """
    return _greedy_accept(scored, seq, budget, on_overflow)


def select_topk(scored: Sequence[ScoredNode], k: int = 10) -> list[ScoredNode]:
    """The k best nodes under the stable ordering; all of them when k >= count."""
    if k < 0:
        raise ValueError("k must be >= 0")
    return list(scored[:k])


def random_select(
    nodes: Sequence[StructureNode],
    seq: EDUSequence,
    budget: SelectionBudget,
    rng_seed: int,
    on_overflow: OverflowRule = "skip",
) -> CompressionResult:
    """Uniformly shuffle the nodes, then apply the same budgeted greedy pass."""
    rng = random.Random(rng_seed)
    shuffled = list(nodes)
    rng.shuffle(shuffled)
    placeholders = [
        ScoredNode(node=n, score=0.0, candidate_text="") for n in shuffled
    ]
    chosen = _greedy_accept(placeholders, seq, budget, on_overflow)
    return package_result(chosen, placeholders, seq, budget)


def merge_spans(spans: Sequence[SpanRef]) -> list[SpanRef]:
    """Merge overlapping or adjacent id intervals into maximal disjoint ones."""
    ordered = sorted(spans, key=lambda s: (s.id_start, s.id_end))
    merged: list[SpanRef] = []
    for span in ordered:
        if merged and span.id_start <= merged[-1].id_end + 1:
            if span.id_end > merged[-1].id_end:
                merged[-1] = SpanRef(merged[-1].id_start, span.id_end)
        else:
            merged.append(span)
    return merged


def linearize(chosen: Sequence[ScoredNode | StructureNode], seq: EDUSequence) -> str:
    """Source-ordered output: merged intervals joined by blank lines."""
    spans = [c.node.span if isinstance(c, ScoredNode) else c.span for c in chosen]
    intervals = merge_spans(spans)
    return "\n\n".join(retrieve(seq, interval) for interval in intervals)


def package_result(
    chosen: Sequence[ScoredNode],
    scored: Sequence[ScoredNode],
    seq: EDUSequence,
    budget: SelectionBudget | None = None,
    usage: TokenUsage = TokenUsage(),
) -> CompressionResult:
    measure = budget or SelectionBudget(b_max=0)
    lengths = _edu_lengths(seq, measure)
    intervals = merge_spans([c.node.span for c in chosen])
    covered = [
        i for interval in intervals for i in range(interval.id_start, interval.id_end + 1)
    ]
    compressed = sum(lengths[i - 1] for i in covered)
    original = sum(lengths)
    rate = 1.0 - compressed / original if original > 0 else 0.0
    return CompressionResult(
        chosen=tuple(chosen),
        linearized="\n\n".join(retrieve(seq, interval) for interval in intervals),
        original_length=original,
        compressed_length=compressed,
        compression_rate=rate,
        per_node_scores=tuple(scored),
        intervals=tuple(intervals),
        usage=usage,
    )


# A decomposer turns a (document, sequence) pair into a tree plus
# diagnostics and any token usage it incurred.
Decomposer = Callable[
    [SourceDocument, EDUSequence],
    tuple[StructureTree, list[Diagnostic], TokenUsage],
]


@dataclass(frozen=True)
class PipelineConfig:
    """Everything compress() needs: decomposer, scorer, and selection rule."""

    decomposer: Decomposer
    scorer: ScoreFn
    selection_rule: Literal["budget", "topk"] = "budget"
    budget: SelectionBudget | None = None
    k: int = 10
    on_overflow: OverflowRule = "skip"
    t_rep: TRepPolicy = TRepPolicy()
    scope: Literal["all", "leaves"] = "all"
    rules: SegmentationRules = SegmentationRules()

    def __post_init__(self):
        if self.selection_rule == "budget" and self.budget is None:
            raise ValueError("budget selection requires a SelectionBudget")


def compress(
    doc: SourceDocument, query: str, config: PipelineConfig
) -> CompressionResult:
    """Segment, decompose, score, select, and linearize one document.

    Stage failures are re-raised as StageError naming the failing stage.
    """
    try:
        seq = segment(doc, config.rules)
    except Exception as exc:
        raise StageError("segment", str(exc)) from exc
    try:
        structure, _, usage = config.decomposer(doc, seq)
    except Exception as exc:
        raise StageError("decompose", str(exc)) from exc
    try:
        scored = score_nodes(query, structure, seq, config.scorer, config.t_rep, config.scope)
    except Exception as exc:
        raise StageError("score", str(exc)) from exc
    try:
        if config.selection_rule == "topk":
            chosen = select_topk(scored, config.k)
            measure = config.budget or SelectionBudget(b_max=0)
        else:
            assert config.budget is not None
            chosen = select_budget(scored, seq, config.budget, config.on_overflow)
            measure = config.budget
    except Exception as exc:
        raise StageError("select", str(exc)) from exc
    try:
        return package_result(chosen, scored, seq, measure, usage)
    except Exception as exc:
        raise StageError("linearize", str(exc)) from exc


_CITATION_RE = re.compile(r"\[(\d+(?:\s*,\s*\d+)*)\]")


def extract_citations(text: str) -> list[int]:
    """Bracketed unit-id citations, in order of first appearance."""
    seen: list[int] = []
    for group in _CITATION_RE.findall(text):
        for piece in group.split(","):
            value = int(piece.strip())
            if value not in seen:
                seen.append(value)
    return seen


@dataclass(frozen=True)
class AnswerRecord:
    answer: str
    citations: tuple[int, ...]
    hallucinated_citations: tuple[int, ...]
    usage: TokenUsage
    context: str
    compressions: tuple[tuple[str, CompressionResult], ...] = ()


GenerateFn = Callable[[str], tuple[str, TokenUsage]]


def answer_pipeline(
    docs: Sequence[SourceDocument],
    query: str | Query,
    config: PipelineConfig,
    generator: GenerateFn,
    qa_template=None,
) -> AnswerRecord:
    """Compress the documents, ask the generator, and audit its citations.

    Every interval in the prompt context is prefixed with its starting
    unit id; citations in the reply that point outside the provided
    intervals are flagged as hallucinated. A Query with ``doc_ids``
    restricts compression to those documents.
    """
    from .backends.prompts import QA_TEMPLATE

    if isinstance(query, Query):
        if query.doc_ids is not None:
            wanted = set(query.doc_ids)
            docs = [d for d in docs if d.doc_id in wanted]
        query = query.text
    template = qa_template or QA_TEMPLATE
    blocks: list[str] = []
    available: set[int] = set()
    usage = TokenUsage()
    compressions: list[tuple[str, CompressionResult]] = []
    for doc in docs:
        result = compress(doc, query, config)
        usage += result.usage
        compressions.append((doc.doc_id, result))
        seq = segment(doc, config.rules)
        if len(docs) > 1 and result.intervals:
            blocks.append(f"== {doc.doc_id} ==")
        for interval in result.intervals:
            blocks.append(f"[{interval.id_start}] {retrieve(seq, interval)}")
            available.update(range(interval.id_start, interval.id_end + 1))
    context = "\n\n".join(blocks)
    prompt = template.render(query=query, context=context)
    answer, gen_usage = generator(prompt)
    usage += gen_usage
    citations = extract_citations(answer)
    hallucinated = tuple(c for c in citations if c not in available)
    return AnswerRecord(
        answer=answer,
        citations=tuple(citations),
        hallucinated_citations=hallucinated,
        usage=usage,
        context=context,
        compressions=tuple(compressions),
    )
