"""Command-line entry points.

Subcommands: segment | decompose | compress | eval | answer | serve.
All heavy lifting lives in the library; each command reads inputs, calls
one pipeline, and writes files. With ``--server URL`` the data commands
become thin HTTP clients of a running service instead of running locally.

Exit codes: 0 success, 2 usage or input error, 3 pipeline or backend error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import RunConfig, build_decomposer, build_pipeline, load_config
from .corpus import read_corpus
from .errors import BackendError, EducompressError, StageError, UsageError
from .evaluate import (
    evaluate_corpus,
    predictions_from_file,
    predictor_from_config,
    predictor_from_mapping,
    render_report_table,
    report_to_json,
)
from .rank_select import answer_pipeline, compress
from .segmenter import SourceDocument, dump_edus, segment
from .tree import coverage, serialize, tree_to_dict

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PIPELINE = 3


def _read_document(path: str, format_hint: str) -> SourceDocument:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read input {path}: {exc}") from exc
    return SourceDocument(doc_id=p.stem, text=text, format_hint=format_hint)  # type: ignore[arg-type]


def _load_run_config(args) -> RunConfig:
    if getattr(args, "config", None):
        return load_config(args.config)
    return RunConfig()


def _write_or_print(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
        if text and not text.endswith("\n"):
            sys.stdout.write("\n")


def _post_server(server: str, route: str, payload: dict) -> dict:
    import httpx

    url = server.rstrip("/") + route
    try:
        response = httpx.post(url, json=payload, timeout=120.0)
    except httpx.HTTPError as exc:
        raise BackendError(f"cannot reach server {url}: {exc}") from exc
    if response.status_code >= 500:
        raise BackendError(f"server error {response.status_code}: {response.text[:200]}")
    if response.status_code >= 400:
        raise UsageError(f"server rejected request ({response.status_code}): {response.text[:200]}")
    return response.json()


def cmd_segment(args) -> int:
    if args.server:
        doc = _read_document(args.input, args.format_hint)
        data = _post_server(
            args.server,
            "/segment",
            {"doc_id": doc.doc_id, "text": doc.text, "format_hint": doc.format_hint},
        )
        rows = [
            "{id}\t{start}\t{end}\t{text}".format(
                id=u["id"], start=u["start"], end=u["end"],
                text=u["text"].replace("\\", "\\\\").replace("\t", "\\t")
                .replace("\n", "\\n").replace("\r", "\\r"),
            )
            for u in data["units"]
        ]
        _write_or_print("\n".join(rows), args.output)
        return EXIT_OK
    config = _load_run_config(args)
    doc = _read_document(args.input, args.format_hint)
    seq = segment(doc, config.segmentation)
    _write_or_print(dump_edus(seq), args.output)
    return EXIT_OK


def cmd_decompose(args) -> int:
    config = _load_run_config(args)
    doc = _read_document(args.input, args.format_hint)
    if args.server:
        data = _post_server(
            args.server,
            "/decompose",
            {
                "doc_id": doc.doc_id,
                "text": doc.text,
                "format_hint": doc.format_hint,
                "backend": args.backend,
                "mode": args.mode,
                "endpoint": args.endpoint,
            },
        )
        _write_or_print(data["augmented_markdown"], args.output)
        if args.json_tree:
            Path(args.json_tree).write_text(
                json.dumps(data["tree"], ensure_ascii=False, sort_keys=True) + "\n",
                encoding="utf-8",
            )
        for diag in data.get("diagnostics", []):
            print(
                f"{diag['severity']}: {diag['code']} (line {diag['line']}): {diag['message']}",
                file=sys.stderr,
            )
        return EXIT_OK
    from dataclasses import replace

    config = replace(
        config,
        decomposer=replace(
            config.decomposer,
            kind=args.backend,
            endpoint=args.endpoint or config.decomposer.endpoint,
            mode=args.mode,
        ),
    )
    if args.backend == "remote":
        config.endpoint(config.decomposer.endpoint)
    decomposer = build_decomposer(config)
    seq = segment(doc, config.segmentation)
    tree, diagnostics, _usage = decomposer(doc, seq)
    for diag in diagnostics:
        print(
            f"{diag.severity}: {diag.code} (line {diag.line}): {diag.message}",
            file=sys.stderr,
        )
    print(f"coverage: {coverage(tree, seq.n):.3f} of {seq.n} units", file=sys.stderr)
    _write_or_print(serialize(tree), args.output)
    if args.json_tree:
        Path(args.json_tree).write_text(
            json.dumps(tree_to_dict(tree), ensure_ascii=False, sort_keys=True) + "\n",
            encoding="utf-8",
        )
    return EXIT_OK


def cmd_compress(args) -> int:
    config = _load_run_config(args)
    if not args.query and config.scorer.kind != "random":
        raise UsageError("--query is required unless the scorer is 'random'")
    query = args.query or ""
    doc = _read_document(args.input, args.format_hint)
    if args.server:
        data = _post_server(
            args.server,
            "/compress",
            {
                "doc_id": doc.doc_id,
                "text": doc.text,
                "format_hint": doc.format_hint,
                "query": query,
            },
        )
        sys.stdout.write(data["linearized"])
        if data["linearized"] and not data["linearized"].endswith("\n"):
            sys.stdout.write("\n")
        if args.stats:
            Path(args.stats).write_text(
                json.dumps(data["stats"], ensure_ascii=False, sort_keys=True, indent=2) + "\n",
                encoding="utf-8",
            )
        return EXIT_OK
    pipeline = build_pipeline(config)
    result = compress(doc, query, pipeline)
    sys.stdout.write(result.linearized)
    if result.linearized and not result.linearized.endswith("\n"):
        sys.stdout.write("\n")
    if args.stats:
        stats = {
            "doc_id": doc.doc_id,
            "original_length": result.original_length,
            "compressed_length": result.compressed_length,
            "compression_rate": round(result.compression_rate, 6),
            "chosen": [
                {
                    "title": s.node.title,
                    "level": s.node.level,
                    "span": [s.node.span.id_start, s.node.span.id_end],
                    "score": round(s.score, 6),
                }
                for s in result.chosen
            ],
            "intervals": [[iv.id_start, iv.id_end] for iv in result.intervals],
        }
        Path(args.stats).write_text(
            json.dumps(stats, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
        )
    return EXIT_OK


def cmd_eval(args) -> int:
    config = _load_run_config(args)
    records = read_corpus(args.corpus)
    if args.predictions:
        predictor = predictor_from_mapping(predictions_from_file(args.predictions), config)
    else:
        predictor = predictor_from_config(config)
    timing_log: list[tuple[str, float]] | None = [] if args.timing_log else None
    report = evaluate_corpus(records, config, predictor, timing_log=timing_log)
    if args.timing_log and timing_log is not None:
        lines = [f"{doc_id}\t{seconds:.6f}" for doc_id, seconds in timing_log]
        Path(args.timing_log).write_text("\n".join(lines) + "\n", encoding="utf-8")
    if args.output:
        Path(str(args.output) + ".report.json").write_text(
            report_to_json(report), encoding="utf-8"
        )
        Path(str(args.output) + ".report.txt").write_text(
            render_report_table(report), encoding="utf-8"
        )
    else:
        sys.stdout.write(report_to_json(report))
        sys.stderr.write(render_report_table(report))
    return EXIT_OK


def cmd_answer(args) -> int:
    config = _load_run_config(args)
    if not args.query:
        raise UsageError("--query is required")
    records = read_corpus(args.corpus)
    docs = [r.document() for r in records]
    if args.server:
        data = _post_server(
            args.server,
            "/answer",
            {
                "docs": [
                    {"doc_id": d.doc_id, "text": d.text, "format_hint": d.format_hint}
                    for d in docs
                ],
                "query": args.query,
            },
        )
        sys.stdout.write(json.dumps(data, ensure_ascii=False, sort_keys=True, indent=2) + "\n")
        return EXIT_OK
    from .backends.remote import RemoteClient, generate

    endpoint = config.endpoint(args.endpoint or config.generator_endpoint)
    pipeline = build_pipeline(config)
    with RemoteClient(endpoint) as client:
        record = answer_pipeline(docs, args.query, pipeline, lambda p: generate(p, client))
    payload = {
        "answer": record.answer,
        "citations": list(record.citations),
        "hallucinated_citations": list(record.hallucinated_citations),
        "usage": {
            "prompt_tokens": record.usage.prompt_tokens,
            "completion_tokens": record.usage.completion_tokens,
        },
    }
    sys.stdout.write(json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2) + "\n")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    config = _load_run_config(args)
    uvicorn.run(create_app(config), host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="educompress",
        description="Structure-aware context compression toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, server: bool = True):
        p.add_argument("--config", help="TOML run configuration")
        if server:
            p.add_argument("--server", help="base URL of a running service")

    p = sub.add_parser("segment", help="dump the EDU coordinate system of a document")
    p.add_argument("input")
    p.add_argument("--format-hint", default="markdown", choices=["plain", "markdown", "html-derived"])
    p.add_argument("-o", "--output", help="write the dump here instead of stdout")
    add_common(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("decompose", help="produce a structure tree for a document")
    p.add_argument("input")
    p.add_argument("--backend", default="layout", choices=["layout", "remote"])
    p.add_argument("--endpoint", help="endpoint name from the config")
    p.add_argument("--mode", default="lenient", choices=["strict", "lenient"])
    p.add_argument("--format-hint", default="markdown", choices=["plain", "markdown", "html-derived"])
    p.add_argument("-o", "--output", help="write augmented markdown here instead of stdout")
    p.add_argument("--json-tree", help="also write the JSON tree dump here")
    add_common(p)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("compress", help="run the full structure-then-select pipeline")
    p.add_argument("input")
    p.add_argument("--query", help="selection query")
    p.add_argument("--format-hint", default="markdown", choices=["plain", "markdown", "html-derived"])
    p.add_argument("--stats", help="write selection statistics JSON here")
    add_common(p)
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("eval", help="benchmark decompositions against gold trees")
    p.add_argument("corpus")
    p.add_argument("--predictions", help="JSONL of {doc_id, tree} predictions")
    p.add_argument("-o", "--output", help="prefix for .report.json/.report.txt files")
    p.add_argument("--timing-log", help="write per-document wall-clock seconds here")
    add_common(p, server=False)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("answer", help="compress then answer a query with citations")
    p.add_argument("corpus")
    p.add_argument("--query", help="the question to answer")
    p.add_argument("--endpoint", help="generator endpoint name from the config")
    add_common(p)
    p.set_defaults(func=cmd_answer)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    add_common(p, server=False)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BackendError, StageError) as exc:
        if getattr(exc, "diagnostics", None):
            for diag in exc.diagnostics:  # type: ignore[attr-defined]
                print(
                    f"{diag.severity}: {diag.code} (line {diag.line}): {diag.message}",
                    file=sys.stderr,
                )
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE
    except EducompressError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
