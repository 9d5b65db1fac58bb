"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from typing import Literal, Optional, Union

from pydantic import BaseModel, Field


class DocumentIn(BaseModel):
    doc_id: str = "doc"
    text: str
    format_hint: Literal["plain", "markdown", "html-derived"] = "markdown"
    language_hint: Optional[Literal["en", "zh", "other"]] = None


class EduOut(BaseModel):
    id: int
    start: int
    end: int
    text: str


class SegmentResponse(BaseModel):
    doc_id: str
    n: int
    units: list[EduOut]


class DiagnosticOut(BaseModel):
    severity: str
    code: str
    line: int
    message: str


class NodeOut(BaseModel):
    title: str
    level: int
    span: list[int]
    children: list["NodeOut"] = Field(default_factory=list)


class TreeOut(BaseModel):
    doc_id: str
    n_edus: int
    roots: list[NodeOut]


class DecomposeRequest(DocumentIn):
    backend: Literal["layout", "remote"] = "layout"
    mode: Literal["strict", "lenient"] = "lenient"
    endpoint: Optional[str] = None


class DecomposeResponse(BaseModel):
    tree: TreeOut
    augmented_markdown: str
    diagnostics: list[DiagnosticOut]
    # Fraction of unit ids anchored by at least one node span.
    coverage: float = 1.0
    prompt_tokens: int = 0
    completion_tokens: int = 0


class SelectionIn(BaseModel):
    rule: Literal["budget", "topk"] = "budget"
    b_max: Optional[int] = None
    k: int = 10
    length_unit: Literal["characters", "whitespace-tokens"] = "whitespace-tokens"
    on_overflow: Literal["skip", "stop"] = "skip"


class CompressRequest(DocumentIn):
    query: str = ""
    backend: Literal["layout", "remote"] = "layout"
    endpoint: Optional[str] = None
    scorer: Literal["bm25", "random", "remote"] = "bm25"
    scorer_endpoint: Optional[str] = None
    seed: Optional[int] = None
    selection: SelectionIn = SelectionIn(b_max=1000)


class ChosenNodeOut(BaseModel):
    title: str
    level: int
    span: list[int]
    score: float


class CompressStats(BaseModel):
    original_length: int
    compressed_length: int
    compression_rate: float


class CompressResponse(BaseModel):
    doc_id: str
    linearized: str
    intervals: list[list[int]]
    chosen: list[ChosenNodeOut]
    stats: CompressStats


class AnswerRequest(BaseModel):
    docs: list[DocumentIn]
    query: str
    generator_endpoint: Optional[str] = None
    backend: Literal["layout", "remote"] = "layout"
    endpoint: Optional[str] = None
    scorer: Literal["bm25", "random", "remote"] = "bm25"
    scorer_endpoint: Optional[str] = None
    seed: Optional[int] = None
    selection: SelectionIn = SelectionIn(b_max=1000)


class UsageOut(BaseModel):
    prompt_tokens: int
    completion_tokens: int


class AnswerResponse(BaseModel):
    answer: str
    citations: list[int]
    hallucinated_citations: list[int]
    usage: UsageOut
    context: str


class CorpusRecordIn(DocumentIn):
    gold_tree: Optional[Union[str, dict]] = None


class EvaluateRequest(BaseModel):
    records: list[CorpusRecordIn]
    predictions: Optional[dict[str, Union[str, dict]]] = None
    backend: Literal["layout", "remote"] = "layout"
    endpoint: Optional[str] = None
    parallelism: int = 1


class HealthResponse(BaseModel):
    status: str
    version: str
