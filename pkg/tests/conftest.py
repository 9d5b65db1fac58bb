from __future__ import annotations

import pytest

from educompress.backends.mockserver import MockInferenceServer
from educompress.segmenter import SourceDocument, segment

THREE_PARA_TEXT = "# Intro\n\nFirst point made. Second point follows!\n\n- bullet item\n"


@pytest.fixture
def three_para_doc() -> SourceDocument:
    """One heading, two sentences, one list item: four units."""
    return SourceDocument(doc_id="fixture", text=THREE_PARA_TEXT)


@pytest.fixture
def three_para_seq(three_para_doc):
    return segment(three_para_doc)


@pytest.fixture
def mock_server():
    server = MockInferenceServer().start()
    yield server
    server.stop()
