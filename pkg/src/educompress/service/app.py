"""FastAPI service wrapping the compression library.

The service holds a RunConfig (endpoints, costs, defaults); requests may
override the pieces they care about. Library errors map onto HTTP status
codes: usage problems 400, backend failures 502, pipeline failures 500.
"""

from __future__ import annotations

from dataclasses import replace

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..config import RunConfig, SelectionChoice, build_pipeline
from ..corpus import CorpusRecord
from ..errors import BackendError, StageError, UsageError
from ..evaluate import evaluate_corpus, predictor_from_config, predictor_from_mapping, report_to_dict
from ..rank_select import answer_pipeline, compress
from ..segmenter import segment
from ..tree import coverage, serialize, tree_to_dict
from . import schemas


def _http_error(exc: Exception) -> HTTPException:
    if isinstance(exc, UsageError):
        return HTTPException(status_code=400, detail=str(exc))
    if isinstance(exc, BackendError):
        return HTTPException(status_code=502, detail=str(exc))
    if isinstance(exc, StageError):
        return HTTPException(status_code=500, detail=str(exc))
    return HTTPException(status_code=500, detail=str(exc))


def _run_config_for(base: RunConfig, body) -> RunConfig:
    selection = getattr(body, "selection", None)
    config = base
    if hasattr(body, "backend"):
        config = replace(
            config,
            decomposer=replace(
                config.decomposer,
                kind=body.backend,
                endpoint=getattr(body, "endpoint", None) or config.decomposer.endpoint,
                mode=getattr(body, "mode", config.decomposer.mode),
            ),
        )
    if hasattr(body, "scorer"):
        config = replace(
            config,
            scorer=replace(
                config.scorer,
                kind=body.scorer,
                endpoint=getattr(body, "scorer_endpoint", None) or config.scorer.endpoint,
            ),
            seed=getattr(body, "seed", None) if getattr(body, "seed", None) is not None else config.seed,
        )
    if selection is not None:
        config = replace(
            config,
            selection=SelectionChoice(
                rule=selection.rule,
                b_max=selection.b_max,
                k=selection.k,
                length_unit=selection.length_unit,
                on_overflow=selection.on_overflow,
            ),
        )
    return config


def create_app(config: RunConfig | None = None) -> FastAPI:
    base_config = config or RunConfig()
    app = FastAPI(title="educompress", version=__version__)

    @app.get("/healthz", response_model=schemas.HealthResponse)
    def healthz():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/segment", response_model=schemas.SegmentResponse)
    def segment_endpoint(body: schemas.DocumentIn):
        doc = _to_document(body)
        seq = segment(doc, base_config.segmentation)
        return schemas.SegmentResponse(
            doc_id=seq.doc_id,
            n=seq.n,
            units=[
                schemas.EduOut(id=u.id, start=u.start, end=u.end, text=u.text)
                for u in seq.units
            ],
        )

    @app.post("/decompose", response_model=schemas.DecomposeResponse)
    def decompose_endpoint(body: schemas.DecomposeRequest):
        doc = _to_document(body)
        run = _run_config_for(base_config, body)
        try:
            pipeline = build_pipeline(run)
            seq = segment(doc, run.segmentation)
            tree, diagnostics, usage = pipeline.decomposer(doc, seq)
        except (UsageError, BackendError, StageError) as exc:
            raise _http_error(exc) from exc
        return schemas.DecomposeResponse(
            tree=schemas.TreeOut(**tree_to_dict(tree)),
            augmented_markdown=serialize(tree),
            diagnostics=[
                schemas.DiagnosticOut(
                    severity=d.severity, code=d.code, line=d.line, message=d.message
                )
                for d in diagnostics
            ],
            coverage=coverage(tree, seq.n),
            prompt_tokens=usage.prompt_tokens,
            completion_tokens=usage.completion_tokens,
        )

    @app.post("/compress", response_model=schemas.CompressResponse)
    def compress_endpoint(body: schemas.CompressRequest):
        doc = _to_document(body)
        run = _run_config_for(base_config, body)
        if not body.query and run.scorer.kind != "random":
            raise HTTPException(status_code=400, detail="query required for non-random scorers")
        try:
            pipeline = build_pipeline(run)
            result = compress(doc, body.query, pipeline)
        except (UsageError, BackendError, StageError) as exc:
            raise _http_error(exc) from exc
        return schemas.CompressResponse(
            doc_id=doc.doc_id,
            linearized=result.linearized,
            intervals=[[iv.id_start, iv.id_end] for iv in result.intervals],
            chosen=[
                schemas.ChosenNodeOut(
                    title=s.node.title,
                    level=s.node.level,
                    span=[s.node.span.id_start, s.node.span.id_end],
                    score=s.score,
                )
                for s in result.chosen
            ],
            stats=schemas.CompressStats(
                original_length=result.original_length,
                compressed_length=result.compressed_length,
                compression_rate=result.compression_rate,
            ),
        )

    @app.post("/answer", response_model=schemas.AnswerResponse)
    def answer_endpoint(body: schemas.AnswerRequest):
        from ..backends.remote import RemoteClient, generate

        run = _run_config_for(base_config, body)
        docs = [_to_document(d) for d in body.docs]
        if not body.query:
            raise HTTPException(status_code=400, detail="query must be non-empty")
        try:
            endpoint = run.endpoint(body.generator_endpoint or run.generator_endpoint)
            pipeline = build_pipeline(run)
            with RemoteClient(endpoint) as client:
                record = answer_pipeline(
                    docs, body.query, pipeline, lambda p: generate(p, client)
                )
        except (UsageError, BackendError, StageError) as exc:
            raise _http_error(exc) from exc
        return schemas.AnswerResponse(
            answer=record.answer,
            citations=list(record.citations),
            hallucinated_citations=list(record.hallucinated_citations),
            usage=schemas.UsageOut(
                prompt_tokens=record.usage.prompt_tokens,
                completion_tokens=record.usage.completion_tokens,
            ),
            context=record.context,
        )

    @app.post("/evaluate")
    def evaluate_endpoint(body: schemas.EvaluateRequest):
        run = _run_config_for(base_config, body)
        run = replace(run, parallelism=body.parallelism)
        records = [
            CorpusRecord(
                doc_id=r.doc_id,
                text=r.text,
                format_hint=r.format_hint,
                language_hint=r.language_hint,
                gold_tree=r.gold_tree,
            )
            for r in body.records
        ]
        try:
            if body.predictions is not None:
                predictor = predictor_from_mapping(body.predictions, run)
            else:
                predictor = predictor_from_config(run)
            report = evaluate_corpus(records, run, predictor)
        except (UsageError, BackendError, StageError) as exc:
            raise _http_error(exc) from exc
        return report_to_dict(report)

    return app


def _to_document(body):
    from ..segmenter import SourceDocument

    return SourceDocument(
        doc_id=body.doc_id,
        text=body.text,
        format_hint=body.format_hint,
        language_hint=body.language_hint,
    )
