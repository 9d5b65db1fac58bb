"""Scripted HTTP replay server for exercising remote backends in tests.

Responses are served either from an ordered queue or from keyed entries
matched against the request body, so concurrent clients always receive
the response meant for their request rather than whatever is next.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


@dataclass(frozen=True)
class ScriptedResponse:
    payload: dict | None = None
    status: int = 200
    body: str | None = None
    delay: float = 0.0


def chat_payload(content: str, prompt_tokens: int = 0, completion_tokens: int = 0) -> dict:
    return {
        "choices": [{"message": {"content": content}}],
        "usage": {"prompt_tokens": prompt_tokens, "completion_tokens": completion_tokens},
    }


def rerank_payload(scores: list) -> dict:
    return {"scores": scores}


class MockInferenceServer:
    """Replays scripted chat/rerank responses; records every request seen."""

    def __init__(self):
        self._lock = threading.Lock()
        self._queue: list[ScriptedResponse] = []
        self._keyed: list[tuple[str, ScriptedResponse]] = []
        self.requests: list[dict] = []
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):  # noqa: N802 (http.server API)
                length = int(self.headers.get("Content-Length", 0))
                raw = self.rfile.read(length).decode("utf-8", errors="replace")
                try:
                    payload = json.loads(raw)
                except json.JSONDecodeError:
                    payload = {"_raw": raw}
                headers = {k.lower(): v for k, v in self.headers.items()}
                scripted = outer._next_response(self.path, raw, payload, headers)
                if scripted.delay:
                    time.sleep(scripted.delay)
                body = (
                    scripted.body
                    if scripted.body is not None
                    else json.dumps(scripted.payload or {})
                )
                data = body.encode("utf-8")
                self.send_response(scripted.status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def log_message(self, *args):  # keep test output quiet
                pass

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    def _next_response(
        self, path: str, raw: str, payload: dict, headers: dict
    ) -> ScriptedResponse:
        with self._lock:
            self.requests.append({"path": path, "payload": payload, "headers": headers})
            for needle, scripted in self._keyed:
                if needle in raw:
                    return scripted
            if self._queue:
                return self._queue.pop(0)
        return ScriptedResponse(status=500, payload={"error": "unscripted request"})

    @property
    def base_url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def enqueue(self, *responses: ScriptedResponse) -> None:
        with self._lock:
            self._queue.extend(responses)

    def add_keyed(self, needle: str, response: ScriptedResponse) -> None:
        """Serve ``response`` to any request whose body contains ``needle``."""
        with self._lock:
            self._keyed.append((needle, response))

    def request_count(self) -> int:
        with self._lock:
            return len(self.requests)

    def start(self) -> "MockInferenceServer":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()

    def __enter__(self) -> "MockInferenceServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
