from __future__ import annotations

import threading
import time

import httpx
import pytest
from fastapi.testclient import TestClient

from educompress.backends.mockserver import ScriptedResponse, chat_payload, rerank_payload
from educompress.config import parse_config
from educompress.service.app import create_app

from conftest import THREE_PARA_TEXT


@pytest.fixture
def client():
    return TestClient(create_app())


@pytest.fixture
def remote_client(mock_server):
    config = parse_config(
        {
            "run": {"generator_endpoint": "gen"},
            "selection": {"rule": "topk"},
            "endpoints": {
                "gen": {"base_url": mock_server.base_url, "model_id": "scripted"},
                "rerank": {"base_url": mock_server.base_url, "model_id": "ranker"},
            },
        }
    )
    return TestClient(create_app(config))


def test_healthz(client):
    data = client.get("/healthz").json()
    assert data["status"] == "ok"


def test_segment_endpoint(client):
    response = client.post(
        "/segment", json={"doc_id": "f", "text": THREE_PARA_TEXT}
    )
    assert response.status_code == 200
    data = response.json()
    assert data["n"] == 4
    assert data["units"][0] == {"id": 1, "start": 0, "end": 7, "text": "# Intro"}


def test_segment_endpoint_rejects_missing_text(client):
    assert client.post("/segment", json={"doc_id": "x"}).status_code == 422


def test_decompose_endpoint_layout(client):
    response = client.post(
        "/decompose", json={"doc_id": "f", "text": THREE_PARA_TEXT, "backend": "layout"}
    )
    assert response.status_code == 200
    data = response.json()
    assert data["augmented_markdown"] == "# [1--4] Intro"
    assert data["tree"]["roots"][0]["span"] == [1, 4]
    assert data["diagnostics"] == []


def test_decompose_endpoint_remote_unconfigured_is_400(client):
    response = client.post(
        "/decompose",
        json={"doc_id": "f", "text": "x", "backend": "remote", "endpoint": "nope"},
    )
    assert response.status_code == 400


def test_decompose_endpoint_remote_mock(remote_client, mock_server):
    mock_server.enqueue(ScriptedResponse(payload=chat_payload("# [1--2] Hello", 3, 2)))
    response = remote_client.post(
        "/decompose",
        json={
            "doc_id": "f",
            "text": "One. Two.",
            "backend": "remote",
            "endpoint": "gen",
        },
    )
    assert response.status_code == 200
    data = response.json()
    assert data["augmented_markdown"] == "# [1--2] Hello"
    assert data["prompt_tokens"] == 3


def test_decompose_endpoint_backend_down_is_502(remote_client, mock_server):
    mock_server.enqueue(*[ScriptedResponse(status=500, payload={}) for _ in range(9)])
    response = remote_client.post(
        "/decompose",
        json={"doc_id": "f", "text": "One.", "backend": "remote", "endpoint": "gen"},
    )
    assert response.status_code == 502


def test_compress_endpoint_budget(client):
    response = client.post(
        "/compress",
        json={
            "doc_id": "f",
            "text": THREE_PARA_TEXT,
            "query": "point",
            "selection": {"rule": "budget", "b_max": 10000},
        },
    )
    assert response.status_code == 200
    data = response.json()
    assert data["stats"]["compression_rate"] == 0.0
    assert data["intervals"] == [[1, 4]]
    assert "First point made." in data["linearized"]


def test_compress_endpoint_requires_query_for_bm25(client):
    response = client.post("/compress", json={"doc_id": "f", "text": "One."})
    assert response.status_code == 400


def test_compress_endpoint_random_scorer_with_seed(client):
    response = client.post(
        "/compress",
        json={
            "doc_id": "f",
            "text": THREE_PARA_TEXT,
            "scorer": "random",
            "seed": 11,
            "selection": {"rule": "budget", "b_max": 5},
        },
    )
    assert response.status_code == 200
    assert response.json()["stats"]["compressed_length"] <= 5


def test_compress_endpoint_remote_scorer(remote_client, mock_server):
    mock_server.add_keyed("documents", ScriptedResponse(payload=rerank_payload([0.9])))
    response = remote_client.post(
        "/compress",
        json={
            "doc_id": "f",
            "text": "# Top\nBody.",
            "query": "top",
            "scorer": "remote",
            "scorer_endpoint": "rerank",
            "selection": {"rule": "topk", "k": 1},
        },
    )
    assert response.status_code == 200
    assert response.json()["chosen"][0]["score"] == 0.9


def test_answer_endpoint(remote_client, mock_server):
    mock_server.enqueue(ScriptedResponse(payload=chat_payload("Answer text. [1]", 12, 4)))
    response = remote_client.post(
        "/answer",
        json={
            "docs": [{"doc_id": "f", "text": THREE_PARA_TEXT}],
            "query": "what is the intro?",
        },
    )
    assert response.status_code == 200
    data = response.json()
    assert data["citations"] == [1]
    assert data["hallucinated_citations"] == []
    assert data["usage"] == {"prompt_tokens": 12, "completion_tokens": 4}
    assert data["context"].startswith("[1] ")


def test_answer_endpoint_requires_generator(client):
    response = client.post(
        "/answer", json={"docs": [{"doc_id": "d", "text": "x"}], "query": "q"}
    )
    assert response.status_code == 400


def test_evaluate_endpoint_inline_records(client):
    response = client.post(
        "/evaluate",
        json={
            "records": [
                {"doc_id": "a", "text": "# A\nBody.", "gold_tree": "# [1--2] A"},
                {"doc_id": "b", "text": "# B\nBody.", "gold_tree": "# [1--2] Bee"},
            ]
        },
    )
    assert response.status_code == 200
    data = response.json()
    assert data["header"]["n_records"] == 2
    assert data["dla"] == 0.5
    assert data["mean_ted"] == 0.5


def test_cli_thin_client_against_live_service(tmp_path, capsys):
    import uvicorn

    from educompress.cli import main

    app = create_app()
    config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    try:
        deadline = time.time() + 10
        while not server.started:
            if time.time() > deadline:
                raise RuntimeError("service did not start")
            time.sleep(0.02)
        port = server.servers[0].sockets[0].getsockname()[1]
        base = f"http://127.0.0.1:{port}"
        assert httpx.get(base + "/healthz", timeout=5).status_code == 200

        doc = tmp_path / "doc.md"
        doc.write_text(THREE_PARA_TEXT, encoding="utf-8")
        assert main(["segment", str(doc), "--server", base]) == 0
        out = capsys.readouterr().out
        assert out.splitlines()[0] == "1\t0\t7\t# Intro"

        assert main(["decompose", str(doc), "--server", base]) == 0
        assert capsys.readouterr().out == "# [1--4] Intro\n"

        assert (
            main(["compress", str(doc), "--query", "point", "--server", base]) == 0
        )
        assert "First point made." in capsys.readouterr().out
    finally:
        server.should_exit = True
        thread.join(timeout=5)
