"""HTTP clients for chat-completion and reranker endpoints.

Wire formats:
  POST {base_url}/chat/completions
    request  {"model", "messages": [{"role", "content"}], "temperature"}
    response {"choices": [{"message": {"content"}}],
              "usage": {"prompt_tokens", "completion_tokens"}}
  POST {base_url}/rerank
    request  {"model", "query", "documents": [...]}
    response {"scores": [...]}

Requests are retried on transport failures and 5xx/429 answers, making
exactly ``max_retries + 1`` attempts before giving up.
"""

from __future__ import annotations

import os
import re
import threading
import time
from typing import Sequence

import httpx

from ..errors import DecompositionError, ProtocolError, TransportError
from ..segmenter import EDUSequence, render_indexed
from ..tree import Diagnostic, ParseMode, StructureTree, parse_augmented_markdown
from .base import InferenceEndpointConfig, PromptTemplate, TokenUsage

_THINK_RE = re.compile(r"<think>.*?</think>", re.DOTALL)
_RETRYABLE_STATUS = {429}


class RemoteClient:
    """Shareable client for one endpoint; bounds in-flight calls by config."""

    def __init__(self, endpoint: InferenceEndpointConfig):
        self.endpoint = endpoint
        self._http = httpx.Client(timeout=endpoint.timeout)
        self._gate = threading.BoundedSemaphore(endpoint.max_parallel_requests)

    def close(self) -> None:
        self._http.close()

    def __enter__(self) -> "RemoteClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _headers(self) -> dict[str, str]:
        name = self.endpoint.credential_env_var_name
        if name and os.environ.get(name):
            return {"Authorization": f"Bearer {os.environ[name]}"}
        return {}

    def _post(self, path: str, payload: dict) -> dict:
        url = self.endpoint.base_url.rstrip("/") + path
        attempts = self.endpoint.max_retries + 1
        last_failure = ""
        for attempt in range(attempts):
            if attempt and self.endpoint.retry_backoff:
                time.sleep(self.endpoint.retry_backoff * attempt)
            try:
                with self._gate:
                    response = self._http.post(url, json=payload, headers=self._headers())
            except httpx.HTTPError as exc:
                last_failure = f"{type(exc).__name__}: {exc}"
                continue
            if response.status_code >= 500 or response.status_code in _RETRYABLE_STATUS:
                last_failure = f"HTTP {response.status_code}"
                continue
            if response.status_code >= 400:
                raise TransportError(
                    f"{url} rejected the request: HTTP {response.status_code} "
                    f"{response.text[:200]}"
                )
            try:
                data = response.json()
            except ValueError as exc:
                raise ProtocolError(f"{url} returned non-JSON body") from exc
            if not isinstance(data, dict):
                raise ProtocolError(f"{url} returned a non-object JSON body")
            return data
        raise TransportError(f"{url} failed after {attempts} attempts ({last_failure})")

    def chat(
        self, messages: Sequence[dict], temperature: float = 0.0
    ) -> tuple[str, TokenUsage]:
        data = self._post(
            "/chat/completions",
            {
                "model": self.endpoint.model_id,
                "messages": list(messages),
                "temperature": temperature,
            },
        )
        try:
            content = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProtocolError("chat response is missing choices[0].message.content") from exc
        if not isinstance(content, str):
            raise ProtocolError("chat message content is not text")
        usage = data.get("usage") or {}
        return content, TokenUsage(
            int(usage.get("prompt_tokens", 0) or 0),
            int(usage.get("completion_tokens", 0) or 0),
        )

    def rerank(self, query: str, documents: Sequence[str]) -> list[float]:
        data = self._post(
            "/rerank",
            {
                "model": self.endpoint.model_id,
                "query": query,
                "documents": list(documents),
            },
        )
        scores = data.get("scores")
        if not isinstance(scores, list) or len(scores) != len(documents):
            raise ProtocolError("rerank response lacks one score per document")
        out: list[float] = []
        for value in scores:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ProtocolError(f"non-numeric rerank score: {value!r}")
            out.append(float(value))
        return out


def _as_client(endpoint: InferenceEndpointConfig | RemoteClient) -> tuple[RemoteClient, bool]:
    if isinstance(endpoint, RemoteClient):
        return endpoint, False
    return RemoteClient(endpoint), True


def strip_reply(text: str) -> str:
    """Drop reasoning blocks and wrapping code fences from a model reply."""
    text = _THINK_RE.sub("", text).strip()
    lines = text.splitlines()
    if len(lines) >= 2 and lines[0].startswith("```") and lines[-1].strip().startswith("```"):
        lines = lines[1:-1]
    return "\n".join(lines).strip()


def decompose_remote(
    seq: EDUSequence,
    endpoint: InferenceEndpointConfig | RemoteClient,
    template: PromptTemplate,
    mode: ParseMode = "lenient",
    feedback: Sequence[str] = (),
) -> tuple[StructureTree, list[Diagnostic], TokenUsage]:
    """Ask a chat endpoint for the document outline and parse its reply.

    ``feedback`` lines (audit findings from earlier rounds) are appended to
    the prompt. Strict mode raises DecompositionError carrying the parse
    diagnostics when the reply does not form a valid tree.
    """
    client, owned = _as_client(endpoint)
    try:
        prompt = template.render(input=render_indexed(seq))
        if feedback:
            prompt += (
                "\n\nYour previous attempt was rejected for these reasons; fix them:\n"
                + "\n".join(f"- {line}" for line in feedback)
            )
        reply, usage = client.chat([{"role": "user", "content": prompt}])
    finally:
        if owned:
            client.close()
    tree, diagnostics = parse_augmented_markdown(
        strip_reply(reply), seq.n, mode=mode, doc_id=seq.doc_id
    )
    if tree is None:
        raise DecompositionError(
            "decomposition reply failed strict parsing", diagnostics=diagnostics
        )
    return tree, diagnostics, usage


def score_remote(
    query: str,
    candidate_text: str,
    endpoint: InferenceEndpointConfig | RemoteClient,
) -> float:
    """Relevance of one candidate in [0, 1] via the reranker wire format."""
    if not query:
        raise ValueError("query must be non-empty")
    client, owned = _as_client(endpoint)
    try:
        score = client.rerank(query, [candidate_text])[0]
    finally:
        if owned:
            client.close()
    return min(1.0, max(0.0, score))


def generate(
    prompt: str, endpoint: InferenceEndpointConfig | RemoteClient
) -> tuple[str, TokenUsage]:
    """Single-turn completion returning the raw reply text and token usage."""
    client, owned = _as_client(endpoint)
    try:
        return client.chat([{"role": "user", "content": prompt}])
    finally:
        if owned:
            client.close()
