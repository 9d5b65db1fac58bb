"""Run configuration: TOML loading, validation, and pipeline assembly.

Credentials never live in the file; endpoint sections name the
environment variable that holds the secret.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .backends.base import InferenceEndpointConfig
from .backends.layout import layout_extract
from .backends.prompts import DECOMPOSE_TEMPLATE
from .backends.remote import RemoteClient, decompose_remote
from .errors import UsageError
from .metrics import CostModel
from .rank_select import (
    PipelineConfig,
    RandomScorer,
    SelectionBudget,
    TRepPolicy,
    bm25_scorer,
)
from .segmenter import SegmentationRules


@dataclass(frozen=True)
class DecomposerChoice:
    kind: Literal["layout", "remote"] = "layout"
    endpoint: str | None = None
    mode: Literal["strict", "lenient"] = "lenient"


@dataclass(frozen=True)
class ScorerChoice:
    kind: Literal["bm25", "random", "remote"] = "bm25"
    endpoint: str | None = None


@dataclass(frozen=True)
class SelectionChoice:
    # Without a config file, top-k with the default k=10 needs no further
    # parameters; budget selection requires an explicit b_max.
    rule: Literal["budget", "topk"] = "topk"
    b_max: int | None = None
    k: int = 10
    length_unit: str = "whitespace-tokens"
    on_overflow: Literal["skip", "stop"] = "skip"
    scope: Literal["all", "leaves"] = "all"


@dataclass(frozen=True)
class RunConfig:
    seed: int | None = None
    parallelism: int = 1
    decomposer: DecomposerChoice = DecomposerChoice()
    scorer: ScorerChoice = ScorerChoice()
    selection: SelectionChoice = SelectionChoice()
    t_rep: TRepPolicy = TRepPolicy()
    segmentation: SegmentationRules = SegmentationRules()
    endpoints: dict[str, InferenceEndpointConfig] = field(default_factory=dict)
    costs: dict[str, CostModel] = field(default_factory=dict)
    generator_endpoint: str | None = None

    def endpoint(self, name: str | None) -> InferenceEndpointConfig:
        if name is None or name not in self.endpoints:
            raise UsageError(f"endpoint {name!r} is not configured")
        return self.endpoints[name]


def _section(data: dict, name: str) -> dict:
    value = data.get(name, {})
    if not isinstance(value, dict):
        raise UsageError(f"config section [{name}] must be a table")
    return value


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"invalid config {path}: {exc}") from exc
    return parse_config(data)


def parse_config(data: dict) -> RunConfig:
    run = _section(data, "run")
    decomposer_data = _section(data, "decomposer")
    scorer_data = _section(data, "scorer")
    selection_data = _section(data, "selection")
    t_rep_data = _section(data, "t_rep")
    seg_data = _section(data, "segmentation")

    endpoints: dict[str, InferenceEndpointConfig] = {}
    for name, spec in _section(data, "endpoints").items():
        try:
            endpoints[name] = InferenceEndpointConfig(
                base_url=spec["base_url"],
                model_id=spec.get("model_id", name),
                credential_env_var_name=spec.get("credential_env_var"),
                timeout=float(spec.get("timeout", 30.0)),
                max_retries=int(spec.get("max_retries", 2)),
                max_parallel_requests=int(spec.get("max_parallel_requests", 4)),
                retry_backoff=float(spec.get("retry_backoff", 0.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"endpoint {name!r}: {exc}") from exc

    costs = {}
    for model_id, rates in _section(data, "costs").items():
        try:
            costs[model_id] = CostModel(
                input_rate=float(rates["input"]), output_rate=float(rates["output"])
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"cost entry {model_id!r}: {exc}") from exc

    config = RunConfig(
        seed=run.get("seed"),
        parallelism=int(run.get("parallelism", 1)),
        decomposer=DecomposerChoice(
            kind=decomposer_data.get("kind", "layout"),
            endpoint=decomposer_data.get("endpoint"),
            mode=decomposer_data.get("mode", "lenient"),
        ),
        scorer=ScorerChoice(
            kind=scorer_data.get("kind", "bm25"),
            endpoint=scorer_data.get("endpoint"),
        ),
        selection=SelectionChoice(
            rule=selection_data.get("rule", "topk"),
            b_max=selection_data.get("b_max"),
            k=int(selection_data.get("k", 10)),
            length_unit=selection_data.get("length_unit", "whitespace-tokens"),
            on_overflow=selection_data.get("on_overflow", "skip"),
            scope=selection_data.get("scope", "all"),
        ),
        t_rep=TRepPolicy(
            policy=t_rep_data.get("policy", "first-edu"),
            cap=int(t_rep_data.get("cap", 120)),
        ),
        segmentation=SegmentationRules(
            max_edu_chars=int(seg_data.get("max_edu_chars", 500)),
            require_whitespace_after_terminator=bool(
                seg_data.get("require_whitespace_after_terminator", True)
            ),
        ),
        endpoints=endpoints,
        costs=costs,
        generator_endpoint=run.get("generator_endpoint"),
    )
    validate_config(config)
    return config


def validate_config(config: RunConfig) -> None:
    if config.decomposer.kind not in ("layout", "remote"):
        raise UsageError(f"unknown decomposer kind {config.decomposer.kind!r}")
    if config.scorer.kind not in ("bm25", "random", "remote"):
        raise UsageError(f"unknown scorer kind {config.scorer.kind!r}")
    if config.selection.rule not in ("budget", "topk"):
        raise UsageError(f"unknown selection rule {config.selection.rule!r}")
    if config.parallelism < 1:
        raise UsageError("parallelism must be >= 1")
    if config.scorer.kind == "random" and config.seed is None:
        raise UsageError("scorer 'random' requires run.seed")
    if config.selection.rule == "budget" and config.selection.b_max is None:
        raise UsageError("selection rule 'budget' requires selection.b_max")
    if config.decomposer.kind == "remote":
        config.endpoint(config.decomposer.endpoint)
    if config.scorer.kind == "remote":
        config.endpoint(config.scorer.endpoint)


def _client_factory(
    config: RunConfig, clients: dict[str, RemoteClient]
):
    def client_for(name: str | None) -> RemoteClient:
        endpoint = config.endpoint(name)
        if name not in clients:
            clients[name] = RemoteClient(endpoint)
        return clients[name]

    return client_for


def build_decomposer(
    config: RunConfig, clients: dict[str, RemoteClient] | None = None
):
    """The configured decomposer callable, independent of selection settings."""
    client_for = _client_factory(config, clients if clients is not None else {})
    if config.decomposer.kind == "remote":
        endpoint_name = config.decomposer.endpoint
        mode = config.decomposer.mode

        def decomposer(doc, seq):
            return decompose_remote(
                seq, client_for(endpoint_name), DECOMPOSE_TEMPLATE, mode=mode
            )

    else:

        def decomposer(doc, seq):
            from .backends.base import TokenUsage

            return layout_extract(doc, seq), [], TokenUsage()

    return decomposer


def build_pipeline(
    config: RunConfig, clients: dict[str, RemoteClient] | None = None
) -> PipelineConfig:
    """Bind config choices to callables; ``clients`` allows connection reuse."""
    clients = clients if clients is not None else {}
    client_for = _client_factory(config, clients)
    decomposer = build_decomposer(config, clients)

    if config.scorer.kind == "remote":
        scorer_name = config.scorer.endpoint

        def scorer(query, candidates):
            if not candidates:
                return []
            scores = client_for(scorer_name).rerank(query, candidates)
            return [min(1.0, max(0.0, s)) for s in scores]

    elif config.scorer.kind == "random":
        scorer = RandomScorer(int(config.seed))  # type: ignore[assignment]
    else:
        scorer = bm25_scorer

    budget = None
    if config.selection.rule == "budget":
        if config.selection.b_max is None:
            raise UsageError("selection rule 'budget' requires selection.b_max")
        budget = SelectionBudget(
            b_max=int(config.selection.b_max),
            length_unit=config.selection.length_unit,  # type: ignore[arg-type]
        )
    return PipelineConfig(
        decomposer=decomposer,
        scorer=scorer,
        selection_rule=config.selection.rule,
        budget=budget,
        k=config.selection.k,
        on_overflow=config.selection.on_overflow,
        t_rep=config.t_rep,
        scope=config.selection.scope,
        rules=config.segmentation,
    )
