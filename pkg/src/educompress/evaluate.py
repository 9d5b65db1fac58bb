"""Corpus-level benchmark orchestration and report rendering.

Documents are processed independently (optionally across a bounded worker
pool) and aggregated in doc_id order, so a report is a pure function of
(corpus, config, predictions) regardless of worker count. Reports contain
no wall-clock values; per-document timings go to an optional side log.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .backends.base import TokenUsage
from .config import RunConfig, build_decomposer
from .corpus import CorpusRecord, resolve_gold
from .errors import UsageError
from .metrics import (
    EvalRecord,
    EvalReport,
    TitleNormalization,
    backbone_match,
    bin_by_length,
    cost_estimate,
    format_dollars,
    ted,
    to_labeled_tree,
)
from .rank_select import whitespace_token_count
from .segmenter import segment
from .tree import StructureTree, serialize, tree_from_dict, parse_augmented_markdown

Predictor = Callable[[CorpusRecord], tuple[StructureTree, TokenUsage]]


@dataclass
class _DocOutcome:
    record: EvalRecord | None = None
    excluded_reason: str | None = None
    seconds: float = 0.0


def predictions_from_file(path: str | Path) -> dict[str, str | dict]:
    """Load a predictions JSONL file: {"doc_id", "tree"} per line."""
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read predictions {path}: {exc}") from exc
    out: dict[str, str | dict] = {}
    for lineno, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        if "doc_id" not in data or "tree" not in data:
            raise UsageError(f"{path}:{lineno}: prediction needs doc_id and tree")
        out[str(data["doc_id"])] = data["tree"]
    return out


def predictor_from_config(config: RunConfig) -> Predictor:
    decomposer = build_decomposer(config)

    def predict(record: CorpusRecord) -> tuple[StructureTree, TokenUsage]:
        doc = record.document()
        seq = segment(doc, config.segmentation)
        tree, _, usage = decomposer(doc, seq)
        return tree, usage

    return predict


def predictor_from_mapping(
    predictions: dict[str, str | dict], config: RunConfig
) -> Predictor:
    def predict(record: CorpusRecord) -> tuple[StructureTree, TokenUsage]:
        if record.doc_id not in predictions:
            raise ValueError(f"{record.doc_id}: no prediction supplied")
        payload = predictions[record.doc_id]
        seq = segment(record.document(), config.segmentation)
        if isinstance(payload, str):
            tree, _ = parse_augmented_markdown(
                payload, seq.n, mode="lenient", doc_id=record.doc_id
            )
            assert tree is not None
        else:
            tree = tree_from_dict(dict(payload, doc_id=record.doc_id, n_edus=seq.n))
        return tree, TokenUsage()

    return predict


def evaluate_corpus(
    records: list[CorpusRecord],
    config: RunConfig,
    predictor: Predictor,
    normalization: TitleNormalization | None = None,
    timing_log: list[tuple[str, float]] | None = None,
) -> EvalReport:
    """Score every record with a gold tree; deterministic in doc_id order."""
    norm = normalization or TitleNormalization()

    def run_one(record: CorpusRecord) -> _DocOutcome:
        started = time.perf_counter()
        doc = record.document()
        seq = segment(doc, config.segmentation)
        try:
            gold = resolve_gold(record, seq.n)
        except ValueError as exc:
            return _DocOutcome(excluded_reason=str(exc))
        predicted, usage = predictor(record)
        distance = ted(to_labeled_tree(predicted, norm), to_labeled_tree(gold, norm))
        doc_len = whitespace_token_count(doc.text)
        structure_len = whitespace_token_count(serialize(predicted))
        rate = 1.0 - structure_len / doc_len if doc_len > 0 else 0.0
        outcome = _DocOutcome(
            record=EvalRecord(
                doc_id=record.doc_id,
                doc_token_length=doc_len,
                ted=distance,
                backbone_match=backbone_match(predicted, gold, norm),
                compression_rate=rate,
                token_usage=usage,
            ),
            seconds=time.perf_counter() - started,
        )
        return outcome

    ordered = sorted(records, key=lambda r: r.doc_id)
    if config.parallelism > 1:
        with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
            outcomes = list(pool.map(run_one, ordered))
    else:
        outcomes = [run_one(record) for record in ordered]

    eval_records: list[EvalRecord] = []
    excluded: list[str] = []
    usage_total = TokenUsage()
    for record, outcome in zip(ordered, outcomes):
        if timing_log is not None:
            timing_log.append((record.doc_id, outcome.seconds))
        if outcome.record is None:
            excluded.append(outcome.excluded_reason or record.doc_id)
            continue
        eval_records.append(outcome.record)
        usage_total += outcome.record.token_usage

    if not eval_records:
        raise UsageError("no records with usable gold trees to evaluate")

    mean_ted = sum(r.ted for r in eval_records) / len(eval_records)
    dla_value = sum(1 for r in eval_records if r.backbone_match) / len(eval_records)
    bins = tuple(bin_by_length(eval_records, n_bins=10))
    model_id = _decomposer_model_id(config)
    cost_model = config.costs.get(model_id)
    cost = cost_estimate(usage_total, cost_model) if cost_model else 0.0
    header = {
        "seed": config.seed,
        "decomposer": config.decomposer.kind,
        "scorer": config.scorer.kind,
        "n_records": len(eval_records),
        "n_excluded": len(excluded),
    }
    return EvalReport(
        records=tuple(eval_records),
        mean_ted=mean_ted,
        dla=dla_value,
        bins=bins,
        usage=usage_total,
        cost_usd=cost,
        excluded=tuple(excluded),
        warning_count=len(excluded),
        header=header,
    )


def _decomposer_model_id(config: RunConfig) -> str:
    if config.decomposer.kind == "remote" and config.decomposer.endpoint:
        endpoint = config.endpoints.get(config.decomposer.endpoint)
        if endpoint:
            return endpoint.model_id
    return config.decomposer.kind


def report_to_dict(report: EvalReport) -> dict:
    return {
        "header": report.header,
        "mean_ted": round(report.mean_ted, 6),
        "dla": round(report.dla, 6),
        "cost_usd": round(report.cost_usd, 2),
        "usage": {
            "prompt_tokens": report.usage.prompt_tokens,
            "completion_tokens": report.usage.completion_tokens,
        },
        "warning_count": report.warning_count,
        "excluded": list(report.excluded),
        "bins": [
            {
                "count": b.count,
                "mean_ted": None if b.mean_ted is None else round(b.mean_ted, 6),
                "min_length": b.min_length,
                "max_length": b.max_length,
            }
            for b in report.bins
        ],
        "records": [
            {
                "doc_id": r.doc_id,
                "doc_token_length": r.doc_token_length,
                "ted": round(r.ted, 6),
                "backbone_match": r.backbone_match,
                "compression_rate": round(r.compression_rate, 6),
                "prompt_tokens": r.token_usage.prompt_tokens,
                "completion_tokens": r.token_usage.completion_tokens,
            }
            for r in report.records
        ],
    }


def report_to_json(report: EvalReport) -> str:
    return json.dumps(report_to_dict(report), ensure_ascii=False, sort_keys=True, indent=2) + "\n"


def render_report_table(report: EvalReport) -> str:
    lines = [
        f"documents evaluated : {len(report.records)}",
        f"excluded (bad gold) : {report.warning_count}",
        f"mean TED            : {report.mean_ted:.4f}",
        f"DLA                 : {report.dla * 100:.2f}%",
        f"est. cost           : {format_dollars(round(report.cost_usd, 2))}",
        "",
        f"{'doc_id':<20} {'len':>8} {'TED':>8} {'backbone':>9} {'rate':>8}",
    ]
    for r in report.records:
        lines.append(
            f"{r.doc_id:<20} {r.doc_token_length:>8} {r.ted:>8.2f} "
            f"{str(r.backbone_match):>9} {r.compression_rate:>8.3f}"
        )
    lines.append("")
    lines.append(f"{'bin':>4} {'count':>6} {'mean TED':>10} {'len range':>16}")
    for i, b in enumerate(report.bins, start=1):
        mean = "-" if b.mean_ted is None else f"{b.mean_ted:.2f}"
        span = "-" if b.min_length is None else f"{b.min_length}..{b.max_length}"
        lines.append(f"{i:>4} {b.count:>6} {mean:>10} {span:>16}")
    return "\n".join(lines) + "\n"
